//! Mode-wise solution of `D f(omega) = g` with small-divisor bookkeeping.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{DivisibilityChain, PontryaginSeries, RationalMode};

/// Divisors with `|omega.q|` below this are declared resonant.
pub const RESONANCE_TOLERANCE: f64 = 1e-14;

/// A frequency vector with a finite-range diophantine certificate:
/// `|omega.k| |k|_2^exponent > gamma` for every integer `0 < |k|_2 <= checked_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyVector {
    entries: Vec<f64>,
    gamma: f64,
    exponent: u32,
    checked_radius: u64,
    /// Smallest `|omega.k| |k|^exponent` seen in the scan.
    min_product: f64,
    minimizer: Vec<i64>,
    /// Present after [`FrequencyVector::rescaled_exact`]: `entries` are the rounded products.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exact_scale: Option<ExactScale>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactScale {
    pub unscaled: Vec<f64>,
    pub factor: Rational64,
}

fn big(r: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// `factor * sum_j q_j w_j` in exact rational arithmetic, rounded once to nearest.
fn exact_dot(q: &RationalMode, omega: &[f64], factor: Rational64) -> f64 {
    let mut sum = BigRational::zero();
    for (qj, wj) in q.entries().iter().zip(omega) {
        if !qj.is_zero() {
            sum += big(*qj) * BigRational::from_float(*wj).expect("finite frequency");
        }
    }
    (sum * big(factor)).to_f64().unwrap_or(f64::NAN)
}

impl FrequencyVector {
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn exponent(&self) -> u32 {
        self.exponent
    }
    pub fn checked_radius(&self) -> u64 {
        self.checked_radius
    }
    pub fn min_product(&self) -> f64 {
        self.min_product
    }
    pub fn minimizer(&self) -> &[i64] {
        &self.minimizer
    }
    pub fn dimension(&self) -> usize {
        self.entries.len()
    }

    /// `factor * omega`, certified for `factor * gamma` on the same lattice ball.
    /// Exact transfer: `|(c w).k| = c |w.k|`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::InvalidArgument(format!("rescale factor must be positive, got {factor}")));
        }
        Ok(FrequencyVector {
            entries: self.entries.iter().map(|w| w * factor).collect(),
            gamma: self.gamma * factor,
            exponent: self.exponent,
            checked_radius: self.checked_radius,
            min_product: self.min_product * factor,
            minimizer: self.minimizer.clone(),
            exact_scale: None,
        })
    }

    /// `factor * omega` with the rational factor kept exact, so divisors of the rescaled
    /// vector round the same real number as the matching divisors of `omega`.
    pub fn rescaled_exact(&self, factor: Rational64) -> Result<Self> {
        if *factor.numer() <= 0 {
            return Err(Error::InvalidArgument(format!("rescale factor must be positive, got {factor}")));
        }
        let (unscaled, total) = match &self.exact_scale {
            Some(e) => (e.unscaled.clone(), e.factor * factor),
            None => (self.entries.clone(), factor),
        };
        let f = factor.to_f64().unwrap_or(f64::NAN);
        let entries = unscaled
            .iter()
            .map(|&w| (BigRational::from_float(w).expect("finite frequency") * big(total)).to_f64().unwrap_or(f64::NAN))
            .collect();
        Ok(FrequencyVector {
            entries,
            gamma: self.gamma * f,
            exponent: self.exponent,
            checked_radius: self.checked_radius,
            min_product: self.min_product * f,
            minimizer: self.minimizer.clone(),
            exact_scale: Some(ExactScale { unscaled, factor: total }),
        })
    }

    /// `omega.q`, correctly rounded from the exact rational value.
    pub fn divisor(&self, q: &RationalMode) -> f64 {
        match &self.exact_scale {
            Some(e) => exact_dot(q, &e.unscaled, e.factor),
            None => exact_dot(q, &self.entries, Rational64::from_integer(1)),
        }
    }

    /// Certified lower bound for `|omega.q|`, when `k = L q` lies inside the checked ball.
    pub fn divisor_lower_bound(&self, q: &RationalMode) -> Option<f64> {
        let level = q.level().ok()?;
        let k = q.integer_vector(level)?;
        let norm = k.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 || norm > self.checked_radius as f64 {
            return None;
        }
        Some(self.gamma / (level as f64 * norm.powi(self.exponent as i32)))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    value: f64,
    norm2: i64,
    k: Vec<i64>,
}

impl Candidate {
    fn better(a: Candidate, b: Candidate) -> Candidate {
        let ord = a
            .value
            .partial_cmp(&b.value)
            .unwrap_or(Ordering::Equal)
            .then(a.norm2.cmp(&b.norm2))
            .then(a.k.cmp(&b.k));
        if ord == Ordering::Greater {
            b
        } else {
            a
        }
    }
}

fn scan_tail(
    omega: &[f64],
    exponent: u32,
    radius2: i64,
    prefix: &mut Vec<i64>,
    leading_nonzero: bool,
    best: &mut Option<Candidate>,
) {
    let used: i64 = prefix.iter().map(|v| v * v).sum();
    if prefix.len() == omega.len() {
        if used == 0 {
            return;
        }
        let dot: f64 = prefix.iter().zip(omega).map(|(&k, w)| w * k as f64).sum();
        let value = dot.abs() * (used as f64).sqrt().powi(exponent as i32);
        let cand = Candidate {
            value,
            norm2: used,
            k: prefix.clone(),
        };
        *best = Some(match best.take() {
            None => cand,
            Some(b) => Candidate::better(b, cand),
        });
        return;
    }
    let room = radius2 - used;
    let bound = (room as f64).sqrt().floor() as i64;
    // Only the half-space with first nonzero entry positive: |w.k| is even in k.
    let lo = if leading_nonzero { -bound } else { 0 };
    for v in lo..=bound {
        prefix.push(v);
        scan_tail(omega, exponent, radius2, prefix, leading_nonzero || v != 0, best);
        prefix.pop();
    }
}

/// Scan every integer vector with `0 < |k|_2 <= radius` and certify `omega`
/// when the minimum of `|omega.k| |k|_2^exponent` exceeds `gamma`.
pub fn certify_diophantine(omega: &[f64], gamma: f64, exponent: u32, radius: u64) -> Result<FrequencyVector> {
    if omega.is_empty() || omega.iter().all(|w| *w == 0.0) {
        return Err(Error::InvalidArgument("omega must be a nonzero vector".into()));
    }
    if omega.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidArgument("omega entries must be finite".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if exponent == 0 || radius == 0 {
        return Err(Error::InvalidArgument("exponent and radius must be positive".into()));
    }
    let r = radius as i64;
    let radius2 = r * r;
    let best = (0..=r)
        .into_par_iter()
        .filter_map(|k0| {
            let mut prefix = vec![k0];
            let mut best = None;
            if k0 * k0 <= radius2 {
                scan_tail(omega, exponent, radius2, &mut prefix, k0 != 0, &mut best);
            }
            best
        })
        .reduce_with(Candidate::better)
        .ok_or_else(|| Error::InvalidArgument("empty lattice ball".into()))?;
    if best.value > gamma {
        Ok(FrequencyVector {
            entries: omega.to_vec(),
            gamma,
            exponent,
            checked_radius: radius,
            min_product: best.value,
            minimizer: best.k,
            exact_scale: None,
        })
    } else {
        Err(Error::CertificateFailure {
            k: best.k,
            value: best.value,
            gamma,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorRecord {
    pub mode: String,
    pub divisor: f64,
    /// `gamma / (L |L q|^exponent)` when `L q` lies in the certified ball.
    pub certified_lower: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SmallDivisorLedger {
    pub records: Vec<DivisorRecord>,
}

impl SmallDivisorLedger {
    pub fn smallest_divisor(&self) -> Option<f64> {
        self.records
            .iter()
            .map(|r| r.divisor.abs())
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// `f_q = g_q / (2 pi i omega.q)` for every mode of `g`.
pub fn solve_cohomological(
    g: &PontryaginSeries,
    omega: &FrequencyVector,
) -> Result<(PontryaginSeries, SmallDivisorLedger)> {
    if g.dimension() != omega.dimension() {
        return Err(Error::InvalidArgument(format!(
            "series dimension {} does not match omega dimension {}",
            g.dimension(),
            omega.dimension()
        )));
    }
    let avg = g.zero_mode_coefficient();
    if avg != Complex64::new(0.0, 0.0) {
        return Err(Error::NonzeroAverage { re: avg.re, im: avg.im });
    }
    let mut ledger = SmallDivisorLedger::default();
    let mut terms = Vec::with_capacity(g.len());
    for (q, c) in g.terms() {
        let divisor = omega.divisor(q);
        if divisor.abs() < RESONANCE_TOLERANCE {
            return Err(Error::ResonantMode {
                mode: q.clone(),
                divisor,
            });
        }
        ledger.records.push(DivisorRecord {
            mode: q.to_string(),
            divisor,
            certified_lower: omega.divisor_lower_bound(q),
        });
        terms.push((q.clone(), c / (Complex64::i() * 2.0 * PI * divisor)));
    }
    Ok((PontryaginSeries::from_terms(g.dimension(), terms)?, ledger))
}

/// `max_z |sum_j omega_j d_j f(z) - g(z)|`, derivatives taken mode-wise.
pub fn derivative_residual(
    f: &PontryaginSeries,
    omega: &FrequencyVector,
    g: &PontryaginSeries,
    sample_points: &[Vec<Complex64>],
) -> f64 {
    let mut df = Vec::with_capacity(f.len());
    for (q, c) in f.terms() {
        df.push((q.clone(), c * Complex64::i() * 2.0 * PI * omega.divisor(q)));
    }
    let df = PontryaginSeries::from_terms(f.dimension(), df).expect("same dimension");
    sample_points
        .par_iter()
        .map(|z| (df.eval(z) - g.eval(z)).norm())
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ConvergenceVerdict {
    Convergent,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Trailing increments inspected for stabilization.
    pub window: usize,
    /// An increment counts as stabilized when above this fraction of the largest one.
    pub relative_threshold: f64,
    pub absolute_threshold: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            window: 3,
            relative_threshold: 0.1,
            absolute_threshold: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub n_i: u64,
    /// `||f_{n_i} - f_{n_{i-1}}||_{rho - delta}`, majorant flavor.
    pub increment: f64,
    /// `n_i^(2n+1) ||g_{n_i} - g_{n_{i-1}}||_rho / (gamma delta^(2n))`, up to the unknown constant.
    pub bound_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceProfile {
    pub levels: Vec<LevelRow>,
    pub verdict: ConvergenceVerdict,
    pub s_norm: f64,
    /// Largest `increment / bound_term` over levels with a nonzero bound term.
    pub max_bound_ratio: f64,
}

pub fn convergence_profile(
    g: &PontryaginSeries,
    omega: &FrequencyVector,
    chain: &DivisibilityChain,
    rho: f64,
    delta: f64,
    options: &ProfileOptions,
) -> Result<ConvergenceProfile> {
    if !(delta > 0.0) || !(delta < rho) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < delta < rho, got delta = {delta}, rho = {rho}"
        )));
    }
    let (f, _) = solve_cohomological(g, omega)?;
    let g_terms = g.s_norm_terms(chain, rho)?;
    let n = g.dimension() as i32;
    let scale = 1.0 / (omega.gamma() * delta.powi(2 * n));
    let mut prev = PontryaginSeries::zero(g.dimension());
    let mut levels = Vec::with_capacity(chain.len());
    for (&n_i, g_term) in chain.entries().iter().zip(&g_terms) {
        let cur = f.level_project(n_i);
        let increment = cur.sub(&prev)?.majorant(rho - delta);
        levels.push(LevelRow {
            n_i,
            increment,
            bound_term: g_term * scale,
        });
        prev = cur;
    }
    let increments: Vec<f64> = levels.iter().map(|r| r.increment).collect();
    let verdict = stabilization_verdict(&increments, options);
    let max_bound_ratio = levels
        .iter()
        .filter(|r| r.bound_term > 0.0)
        .map(|r| r.increment / r.bound_term)
        .fold(0.0, f64::max);
    Ok(ConvergenceProfile {
        levels,
        verdict,
        s_norm: g_terms.iter().sum(),
        max_bound_ratio,
    })
}

/// DIVERGENT when every increment of the trailing window (the first level
/// excluded, it is `f_{n_1}` itself) stays above the threshold.
pub fn stabilization_verdict(increments: &[f64], options: &ProfileOptions) -> ConvergenceVerdict {
    if increments.len() < 2 || options.window == 0 {
        return ConvergenceVerdict::Convergent;
    }
    let max = increments.iter().copied().fold(0.0, f64::max);
    let threshold = options.absolute_threshold.max(options.relative_threshold * max);
    let tail = &increments[1..];
    let w = options.window.min(tail.len());
    if tail[tail.len() - w..].iter().all(|&v| v > threshold) {
        ConvergenceVerdict::Divergent
    } else {
        ConvergenceVerdict::Convergent
    }
}
