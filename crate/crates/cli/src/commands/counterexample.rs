use std::f64::consts::E;

use anyhow::{bail, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use solenoid_core::beltrami::GridSpec;
use solenoid_core::counterexamples::{
    eval_mu_counterexample, mu_bound, tail_sup_profile, verify_beltrami_identity, TailKind, TailOptions,
};

use super::csv;
use crate::config::{positive, CounterexampleConfig};
use crate::report::{to_value, Finding};

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    value: f64,
    threshold: f64,
}

/// Identity, coefficient bound and tail checks; negative when any threshold is missed.
pub fn run(cfg: &CounterexampleConfig) -> Result<Finding> {
    if cfg.terms == 0 {
        bail!("terms must be positive");
    }
    positive("h", cfg.h)?;
    let g = cfg.grid;
    let spec = GridSpec::new(Complex64::new(0.0, 0.0), g.half_width_x, g.half_width_y, g.n)?;
    let identity = verify_beltrami_identity(cfg.terms, &spec, cfg.h)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut bound_max = 0.0f64;
    for _ in 0..cfg.bound_samples {
        let z = Complex64::new(
            rng.random_range(-g.half_width_x..g.half_width_x),
            rng.random_range(-g.half_width_y..g.half_width_y),
        );
        bound_max = bound_max.max(eval_mu_counterexample(z, cfg.terms).norm());
    }

    let options = TailOptions {
        fixed_x: cfg.fixed_x,
        samples: cfg.tail_samples,
        ..TailOptions::default()
    };
    let tails = tail_sup_profile(TailKind::Beltrami, cfg.tail_from, cfg.tail_to, &options)?;
    let fixed_last = tails.last().map(|r| r.fixed_tail_sup).unwrap_or(0.0);
    let moving_floor = cfg.moving_fraction / (2.0 * E);
    let moving_min = tails
        .iter()
        .filter(|r| r.n <= cfg.moving_until)
        .map(|r| r.moving_tail_sup)
        .fold(f64::INFINITY, f64::min);

    let checks = vec![
        Check {
            name: "beltrami_identity",
            passed: identity.max_residual < cfg.identity_tolerance,
            value: identity.max_residual,
            threshold: cfg.identity_tolerance,
        },
        Check {
            name: "coefficient_bound",
            passed: bound_max <= mu_bound() - cfg.bound_margin,
            value: bound_max,
            threshold: mu_bound() - cfg.bound_margin,
        },
        Check {
            name: "fixed_point_tail",
            passed: fixed_last < cfg.fixed_threshold,
            value: fixed_last,
            threshold: cfg.fixed_threshold,
        },
        Check {
            name: "moving_tail",
            passed: moving_min >= moving_floor,
            value: moving_min,
            threshold: moving_floor,
        },
    ];
    let failures: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let rows = tails.iter().map(|r| {
        vec![
            r.n.to_string(),
            format!("{:e}", r.fixed_tail_sup),
            format!("{:e}", r.moving_tail_sup),
        ]
    });
    Ok(Finding {
        csv: Some(csv("n,fixed_tail_sup,moving_tail_sup", rows)),
        result: json!({
            "identity": to_value(&identity),
            "bound": {
                "samples": cfg.bound_samples,
                "max_modulus": bound_max,
                "bound": mu_bound(),
            },
            "tails": to_value(&tails),
            "checks": to_value(&checks),
            "failures": failures,
        }),
        positive: failures.is_empty(),
    })
}
