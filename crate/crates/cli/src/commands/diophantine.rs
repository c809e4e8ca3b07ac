use anyhow::{bail, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use solenoid_core::diophantine::{
    certify_diophantine, convergence_profile, derivative_residual, solve_cohomological, ConvergenceVerdict, ProfileOptions,
};
use solenoid_core::series::DivisibilityChain;

use super::csv;
use crate::config::{positive, DiophantineConfig};
use crate::report::{to_value, Finding};

/// Certify, solve mode by mode, check the derivative residual and profile the chain increments.
pub fn run(cfg: &DiophantineConfig) -> Result<Finding> {
    positive("rho", cfg.rho)?;
    positive("delta", cfg.delta)?;
    if cfg.delta >= cfg.rho {
        bail!("delta = {} must be below rho = {}", cfg.delta, cfg.rho);
    }
    let g = cfg.series.build()?;
    let omega = certify_diophantine(&cfg.omega, cfg.gamma, cfg.exponent, cfg.radius)?;
    let (f, ledger) = solve_cohomological(&g, &omega)?;
    let chain = DivisibilityChain::new(cfg.chain.clone())?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let strip = cfg.rho - cfg.delta;
    let period = chain.last() as f64;
    let points: Vec<Vec<Complex64>> = (0..cfg.samples)
        .map(|_| {
            (0..g.dimension())
                .map(|_| Complex64::new(rng.random_range(0.0..period), rng.random_range(-strip..strip)))
                .collect()
        })
        .collect();
    let residual = derivative_residual(&f, &omega, &g, &points);

    let options = ProfileOptions {
        window: cfg.window,
        relative_threshold: cfg.relative_threshold,
        ..ProfileOptions::default()
    };
    let profile = convergence_profile(&g, &omega, &chain, cfg.rho, cfg.delta, &options)?;
    let residual_ok = residual <= cfg.residual_tolerance;
    let convergent = profile.verdict == ConvergenceVerdict::Convergent;
    let rows = profile
        .levels
        .iter()
        .map(|r| vec![r.n_i.to_string(), format!("{:e}", r.increment), format!("{:e}", r.bound_term)]);
    Ok(Finding {
        csv: Some(csv("n_i,increment,bound_term", rows)),
        result: json!({
            "certificate": to_value(&omega),
            "solution": to_value(&f),
            "ledger": to_value(&ledger),
            "smallest_divisor": ledger.smallest_divisor(),
            "residual": residual,
            "residual_ok": residual_ok,
            "sample_points": points.len(),
            "profile": to_value(&profile),
            "verdict": to_value(&profile.verdict),
        }),
        positive: convergent && residual_ok,
    })
}
