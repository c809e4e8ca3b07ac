use anyhow::{bail, Result};
use num_complex::Complex64;
use serde_json::json;
use solenoid_core::beltrami::SolverParams;
use solenoid_core::counterexamples::{eval_mu_counterexample, mu_bound};
use solenoid_core::series::DivisibilityChain;
use solenoid_core::tower::{
    affine_renormalize_run, annulus_grid, bump_increment_family, cauchy_diagnostics, leaf_sample_points, tower_solve,
    BumpProfile, CauchyOptions, CauchyVerdict, CylinderCoefficient, Period, PeriodicBeltramiFamily,
};

use crate::config::{TowerConfig, TowerFamily};
use crate::report::{to_value, Finding};

/// Leaf height beyond which the truncated counterexample is below the support cutoff, per unit of period.
const FACTORIAL_DECAY: f64 = 4.3;

/// Largest `m` with `m!` dividing `n`.
fn factorial_terms(n: u64) -> usize {
    let (mut m, mut f) = (1u64, 1u64);
    while let Some(next) = f.checked_mul(m + 1) {
        if n % next != 0 {
            break;
        }
        f = next;
        m += 1;
    }
    m as usize
}

fn factorial_of(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

pub fn build_family(cfg: &TowerConfig, chain: DivisibilityChain, size: usize) -> Result<PeriodicBeltramiFamily> {
    let profile = BumpProfile::default();
    let steps = chain.len() - 1;
    let next = |i: usize| chain.entries()[i + 1] as f64;
    Ok(match cfg.family {
        TowerFamily::Stationary => {
            let spec = profile.grid(size)?;
            let mu = profile.scaled_term(cfg.weight, 1)?;
            PeriodicBeltramiFamily::build_periodic_approximants(&mu, chain, move |_| Ok(spec))?
        }
        TowerFamily::Geometric => {
            let weights: Vec<f64> = (0..steps).map(|i| cfg.weight * cfg.ratio.powi(i as i32) / next(i)).collect();
            bump_increment_family(chain, &weights, profile, size)?
        }
        TowerFamily::Constant => {
            let weights: Vec<f64> = (0..steps).map(|i| cfg.weight / next(i)).collect();
            bump_increment_family(chain, &weights, profile, size)?
        }
        TowerFamily::Factorial => {
            let cylinders = chain
                .entries()
                .iter()
                .map(|&n| {
                    let m = factorial_terms(n);
                    CylinderCoefficient::new(
                        move |x, y| eval_mu_counterexample(Complex64::new(x, y), m),
                        Period::Periodic((n as i64).into()),
                        FACTORIAL_DECAY * factorial_of(m),
                        mu_bound(),
                    )
                })
                .collect::<solenoid_core::Result<Vec<_>>>()?;
            PeriodicBeltramiFamily::from_cylinders(chain, cylinders, |n| {
                annulus_grid(FACTORIAL_DECAY * factorial_of(factorial_terms(n)), n, size)
            })?
        }
    })
}

/// Build the family, solve every level, and judge the Cauchy behavior of the projections.
pub fn run(cfg: &TowerConfig) -> Result<Finding> {
    let chain = DivisibilityChain::new(cfg.chain.clone().unwrap_or_default())?;
    let size = cfg.grid.unwrap_or(256);
    if chain.len() < 2 {
        bail!("a tower needs a chain with at least two entries");
    }
    if cfg.j_index + 1 >= chain.len() {
        bail!("j_index = {} leaves fewer than two levels", cfg.j_index);
    }
    let family = build_family(cfg, chain.clone(), size)?;
    let s_norm = family.mu_s_norm();
    let s_norm_ok = s_norm.is_finite() && s_norm <= cfg.s_norm_threshold;
    let p = cfg.points;
    let points = leaf_sample_points(chain.last(), p.x_count, p.y_min, p.y_max, p.y_count);
    let params = SolverParams {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let run = tower_solve(&family, cfg.j_index, &points, &params)?;
    let options = CauchyOptions {
        absolute_tolerance: cfg.absolute_tolerance,
        max_rate: cfg.max_rate,
        ..CauchyOptions::default()
    };
    let cauchy = cauchy_diagnostics(&run, &family, &options)?;
    let affine = affine_renormalize_run(&run, cfg.affine_tolerance)?;
    let mut diffs_csv = Vec::new();
    run.write_diffs_csv(&mut diffs_csv)?;
    let level_sups: Vec<f64> = family.levels().iter().map(|l| l.sup_norm()).collect();
    Ok(Finding {
        csv: Some(String::from_utf8(diffs_csv)?),
        result: json!({
            "family": {
                "chain": chain.entries(),
                "level_sups": level_sups,
                "increments": family.increments(),
                "s_norm_terms": family.s_norm_terms(),
                "mu_s_norm": s_norm,
                "s_norm_within_threshold": s_norm_ok,
            },
            "run": to_value(&run),
            "cauchy": to_value(&cauchy),
            "affine": to_value(&affine),
            "verdict": to_value(&cauchy.verdict),
        }),
        positive: cauchy.verdict == CauchyVerdict::Cauchy,
    })
}
