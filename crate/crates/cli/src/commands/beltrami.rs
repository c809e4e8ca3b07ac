use anyhow::{bail, Result};
use num_complex::Complex64;
use serde_json::json;
use solenoid_core::beltrami::{
    beltrami_residual, distortion_report, solve_normal, BeltramiField, GridSpec, SolverParams,
};

use super::csv;
use crate::config::{positive, BeltramiConfig, PlanarCoefficient};
use crate::report::{to_value, Finding};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn field(coefficient: &PlanarCoefficient, spec: GridSpec) -> Result<BeltramiField> {
    Ok(match *coefficient {
        PlanarCoefficient::Radial { k } => {
            BeltramiField::from_fn(spec, move |z| if z.norm() < 1.0 { z / z.conj() * k } else { ZERO })?
        }
        PlanarCoefficient::Smooth { k, a, b } => {
            let (a, b) = (Complex64::new(a[0], a[1]), Complex64::new(b[0], b[1]));
            let raw = move |z: Complex64| {
                let r2 = z.norm_sqr();
                if r2 >= 1.0 {
                    ZERO
                } else {
                    (a + b * z) * (1.0 - r2).powi(2)
                }
            };
            let peak = (0..spec.len()).map(|i| raw(spec.point_at(i)).norm()).fold(0.0, f64::max);
            let scale = if peak > 0.0 { k / peak } else { 0.0 };
            BeltramiField::from_fn(spec, move |z| raw(z) * scale)?
        }
        PlanarCoefficient::Disk { value, radius } => {
            let v = Complex64::new(value[0], value[1]);
            BeltramiField::from_fn(spec, move |z| if z.norm() < radius { v } else { ZERO })?
        }
    })
}

/// `z |z|^(2k/(1-k))` inside the unit disk, `z` outside.
fn radial_exact(k: f64, z: Complex64) -> Complex64 {
    let r = z.norm();
    if r < 1.0 {
        z * r.powf(2.0 * k / (1.0 - k))
    } else {
        z
    }
}

/// Normal solution of one planar coefficient with residual, contraction and distortion data.
pub fn run(cfg: &BeltramiConfig) -> Result<Finding> {
    positive("half_width", cfg.half_width)?;
    positive("p", cfg.p - 2.0).map_err(|_| anyhow::anyhow!("p must exceed 2, got {}", cfg.p))?;
    if cfg.grid < 8 {
        bail!("grid must have at least 8 nodes per side, got {}", cfg.grid);
    }
    let spec = GridSpec::square(cfg.half_width, cfg.grid)?;
    let mu = field(&cfg.coefficient, spec)?;
    let params = SolverParams {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let f = solve_normal(&mu, &params)?;
    let residual = beltrami_residual(&f, &mu)?;
    let distortion = distortion_report(&f, &mu, cfg.p)?;
    let k = mu.sup_norm();
    let max_l2_ratio = f.l2_ratios().iter().copied().fold(0.0, f64::max);
    let d = f.diffs();
    let mean_rate = if d.len() > 1 && d[0] > 0.0 {
        Some((d[d.len() - 1] / d[0]).powf(1.0 / (d.len() - 1) as f64))
    } else {
        None
    };
    let closed_form_error = match cfg.coefficient {
        PlanarCoefficient::Radial { k } => {
            let nodes = f.f_nodes();
            Some(
                (0..spec.len())
                    .map(|i| (nodes.data()[i] - radial_exact(k, spec.point_at(i))).norm())
                    .fold(0.0, f64::max),
            )
        }
        _ => None,
    };
    let rows = (0..d.len()).map(|i| {
        let opt = |v: Option<&f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        vec![
            (i + 1).to_string(),
            format!("{:e}", d[i]),
            opt(i.checked_sub(1).and_then(|j| f.l2_ratios().get(j))),
            opt(i.checked_sub(1).and_then(|j| f.sup_ratios().get(j))),
        ]
    });
    Ok(Finding {
        csv: Some(csv("iteration,diff,l2_ratio,sup_ratio", rows)),
        result: json!({
            "k": k,
            "iterations": f.iterations(),
            "solver_residual": f.residual(),
            "beltrami_residual": to_value(&residual),
            "max_l2_ratio": max_l2_ratio,
            "mean_sup_rate": mean_rate,
            "contraction_ok": max_l2_ratio <= k + 0.05,
            "closed_form_error": closed_form_error,
            "distortion": to_value(&distortion),
            "f_at_one": [f.eval(Complex64::new(1.0, 0.0)).re, f.eval(Complex64::new(1.0, 0.0)).im],
        }),
        positive: true,
    })
}
