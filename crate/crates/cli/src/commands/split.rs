use std::sync::Arc;

use anyhow::Result;
use num_complex::Complex64;
use serde_json::json;
use solenoid_core::beltrami::{GridSpec, PointFn, SolverParams};
use solenoid_core::tower::{split_solve, SplitCutoff};

use crate::config::{FarCoefficient, SplitConfig};
use crate::report::{to_value, Finding};

fn coefficient(c: &FarCoefficient) -> PointFn {
    match *c {
        FarCoefficient::Ripple { amplitude } => Arc::new(move |z: Complex64| {
            let r2 = z.norm_sqr();
            Complex64::new(amplitude * r2 / (1.0 + r2), 0.0) * Complex64::new(0.0, (z.re * 0.5).sin()).exp()
        }),
    }
}

/// Two-stage solve for a coefficient without compact support, checked on a box around the seam.
pub fn run(cfg: &SplitConfig) -> Result<Finding> {
    let cutoff = SplitCutoff::new(cfg.radius, cfg.blend)?;
    let params = SolverParams {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let sol = split_solve(coefficient(&cfg.coefficient), cfg.k, cutoff, cfg.grid, &params)?;
    let check = GridSpec::square(cfg.check_half_width, cfg.check_grid)?;
    let residual = sol.residual(check)?;
    let f0 = sol.eval(Complex64::new(0.0, 0.0));
    Ok(Finding {
        csv: None,
        result: json!({
            "nu1_sup": sol.split.nu1().sup_norm(),
            "inner_iterations": sol.inner.iterations(),
            "residual": to_value(&residual),
            "residual_ok": residual.max_residual < cfg.residual_threshold,
            "f_at_zero": [f0.re, f0.im],
            "inner_grid_dx": sol.inner.spec().dx(),
        }),
        positive: residual.max_residual < cfg.residual_threshold,
    })
}
