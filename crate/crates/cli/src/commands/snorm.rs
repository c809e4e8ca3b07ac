use anyhow::Result;
use serde_json::json;
use solenoid_core::series::DivisibilityChain;

use super::csv;
use crate::config::{positive, SNormConfig};
use crate::report::{to_value, Finding};

/// Weighted chain norm with its per-level terms and the strip-norm bracket it dominates.
pub fn run(cfg: &SNormConfig) -> Result<Finding> {
    positive("rho", cfg.rho)?;
    let g = cfg.series.build()?;
    let chain = DivisibilityChain::new(cfg.chain.clone())?;
    let terms = g.s_norm_terms(&chain, cfg.rho)?;
    let s_norm = g.s_norm(&chain, cfg.rho)?;
    let strip = g.strip_norm(cfg.rho, cfg.samples_per_period)?;
    let dominated = strip.majorant_upper <= s_norm * (1.0 + 1e-12);
    let rows = chain
        .entries()
        .iter()
        .zip(&terms)
        .enumerate()
        .map(|(i, (n, t))| vec![i.to_string(), n.to_string(), format!("{t:e}")]);
    Ok(Finding {
        csv: Some(csv("index,n_i,term", rows)),
        result: json!({
            "s_norm": s_norm,
            "terms": terms,
            "strip_norm": to_value(&strip),
            "majorant_dominated": dominated,
            "modes": g.len(),
        }),
        positive: dominated,
    })
}
