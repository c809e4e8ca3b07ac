//! Closed-form factorial counterexamples: a limit-periodic right-hand side whose
//! cohomological solution diverges, and a limit-periodic Beltrami coefficient whose
//! explicit solution is not limit periodic.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beltrami::GridSpec;
use crate::error::{Error, Result};
use crate::series::{unit_fraction, PontryaginSeries, RationalMode};

/// Terms beyond this are below double precision for any argument used here.
pub const TAIL_CAP: usize = 30;

/// `(e - 1) / (e + 1)`, the bound on the coefficient's modulus.
pub fn mu_bound() -> f64 {
    (E - 1.0) / (E + 1.0)
}

fn factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut f = 1.0;
    for i in 1..=n {
        f *= i as f64;
        out.push(f);
    }
    out
}

/// The truncated coefficient `A / (1 + B)` with
/// `A = (1/2e) sum [cos(x/n!) - (2iy/n!) sin(x/n!)] exp(-y^2/n!^2) / (2 n!)` and `B` the
/// same sum with `+ (2iy/n!)`.
pub fn eval_mu_counterexample(z: Complex64, terms: usize) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = Complex64::new(0.0, 0.0);
    for nf in factorials(terms) {
        let (s, c) = (x / nf).sin_cos();
        let g = (-(y / nf).powi(2)).exp() / (2.0 * nf);
        let t = 2.0 * y / nf * s;
        num += Complex64::new(c, -t) * g;
        den += Complex64::new(c, t) * g;
    }
    let w = 1.0 / (2.0 * E);
    num * w / (1.0 + den * w)
}

/// `z + (1/2e) sum sin(x/n!) exp(-y^2/n!^2)`.
pub fn eval_w_mu(z: Complex64, terms: usize) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let s: f64 = factorials(terms)
        .iter()
        .map(|&nf| (x / nf).sin() * (-(y / nf).powi(2)).exp())
        .sum();
    z + s / (2.0 * E)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub max_residual: f64,
    /// `max |w_zbar|`, the residual against `mu = 0`.
    pub max_w_zbar: f64,
    pub nodes: usize,
}

/// Central differences of `eval_w_mu` with step `h` at the interior nodes of `grid`.
pub fn verify_beltrami_identity(terms: usize, grid: &GridSpec, h: f64) -> Result<IdentityCheck> {
    if terms == 0 {
        return Err(Error::InvalidArgument("term count must be positive".into()));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let n = grid.n;
    let (max_residual, max_w_zbar) = (1..n - 1)
        .into_par_iter()
        .map(|r| {
            let mut worst = (0.0f64, 0.0f64);
            for c in 1..n - 1 {
                let z = grid.point(r, c);
                let dx = (eval_w_mu(z + h, terms) - eval_w_mu(z - h, terms)) / (2.0 * h);
                let dy = (eval_w_mu(z + Complex64::new(0.0, h), terms) - eval_w_mu(z - Complex64::new(0.0, h), terms))
                    / (2.0 * h);
                let wzb = (dx + Complex64::i() * dy) * 0.5;
                let wz = (dx - Complex64::i() * dy) * 0.5;
                let mu = eval_mu_counterexample(z, terms);
                worst.0 = worst.0.max((wzb - mu * wz).norm());
                worst.1 = worst.1.max(wzb.norm());
            }
            worst
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(IdentityCheck {
        max_residual,
        max_w_zbar,
        nodes: (n - 2) * (n - 2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TailKind {
    Diophantine,
    Beltrami,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailOptions {
    /// Point for the locally uniform tail.
    pub fixed_x: f64,
    /// Uniform samples on `[0, x_range(N)]` in addition to the witness point.
    pub samples: usize,
    /// Amplitude of a single diophantine term, `1 / (2 pi omega.1)`.
    pub diophantine_amplitude: f64,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions {
            fixed_x: 1.0,
            samples: 1024,
            diophantine_amplitude: 1.0 / (2.0 * PI),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    /// Tail starts after term `n`.
    pub n: usize,
    pub fixed_tail_sup: f64,
    pub moving_tail_sup: f64,
    pub x_range: f64,
    pub single_term_sup: f64,
}

/// Sum over `N < i <= TAIL_CAP` of the term at real argument `x`.
fn tail_at(kind: TailKind, n: usize, x: f64, fact: &[f64], amp: f64) -> f64 {
    fact[n..TAIL_CAP]
        .iter()
        .map(|&f| match kind {
            TailKind::Beltrami => (x / f).sin() / (2.0 * E),
            TailKind::Diophantine => amp * (2.0 * PI * x / f).sin(),
        })
        .sum()
}

/// Tails of the two closed-form solutions on the real line: at a fixed point they decay,
/// while over `|x| <= x_range(N)` with a range growing like `(N+1)!` they stay of the size
/// of a single term.
pub fn tail_sup_profile(kind: TailKind, n_from: usize, n_to: usize, options: &TailOptions) -> Result<Vec<TailRow>> {
    if n_from >= n_to || n_to >= TAIL_CAP {
        return Err(Error::InvalidArgument(format!(
            "need n_from < n_to < {TAIL_CAP}, got {n_from}, {n_to}"
        )));
    }
    let fact = factorials(TAIL_CAP);
    let amp = options.diophantine_amplitude.abs();
    let single = match kind {
        TailKind::Beltrami => 1.0 / (2.0 * E),
        TailKind::Diophantine => amp,
    };
    let rows = (n_from..=n_to)
        .map(|n| {
            let next = fact[n];
            // first tail term equals its maximum at the witness
            let (witness, x_range) = match kind {
                TailKind::Beltrami => (PI * next / 2.0, PI * next / 2.0),
                TailKind::Diophantine => (next / 4.0, next / 4.0),
            };
            let fixed = tail_at(kind, n, options.fixed_x, &fact, amp).abs();
            let sampled = (0..=options.samples)
                .into_par_iter()
                .map(|j| tail_at(kind, n, x_range * j as f64 / options.samples.max(1) as f64, &fact, amp).abs())
                .reduce(|| 0.0, f64::max);
            let moving = sampled.max(tail_at(kind, n, witness, &fact, amp).abs());
            TailRow {
                n,
                fixed_tail_sup: fixed,
                moving_tail_sup: moving,
                x_range,
                single_term_sup: single,
            }
        })
        .collect();
    Ok(rows)
}

/// `sum_{i<=N} (1/i!) cos(2 pi (z_1+...+z_n) / i!)` as a series with modes `+-(1/i!) 1`.
pub fn diophantine_counterexample(dimension: usize, terms: usize) -> Result<PontryaginSeries> {
    factorial_cosine_series(dimension, terms, |fact| 1.0 / fact)
}

/// Same modes with coefficients `(1/i!) i!^-(2n+2)`, summable against the chain weights.
pub fn decaying_factorial_series(dimension: usize, terms: usize) -> Result<PontryaginSeries> {
    let p = 2 * dimension as i32 + 2;
    factorial_cosine_series(dimension, terms, move |fact| 1.0 / fact * fact.powi(-p))
}

fn factorial_cosine_series<F: Fn(f64) -> f64>(dimension: usize, terms: usize, amplitude: F) -> Result<PontryaginSeries> {
    if dimension == 0 || terms == 0 {
        return Err(Error::InvalidArgument("dimension and term count must be positive".into()));
    }
    let mut out = Vec::with_capacity(2 * terms);
    let mut fact: i64 = 1;
    for i in 1..=terms as i64 {
        fact = fact.checked_mul(i).ok_or(Error::Overflow("factorial"))?;
        let q = unit_fraction(fact);
        let plus = RationalMode::new(vec![q; dimension]);
        let minus = plus.scaled(num_rational::Rational64::from_integer(-1));
        let c = Complex64::new(amplitude(fact as f64) / 2.0, 0.0);
        out.push((plus, c));
        out.push((minus, c));
    }
    PontryaginSeries::from_terms(dimension, out)
}

/// Real-line closed form `(1/(2 pi omega.1)) sum_{i<=N} sin(2 pi s / i!)`, `s = z_1+...+z_n`.
pub fn diophantine_solution_closed_form(omega_sum: f64, terms: usize, s: Complex64) -> Complex64 {
    factorials(terms)
        .iter()
        .map(|&f| (s * (2.0 * PI / f)).sin())
        .sum::<Complex64>()
        / (2.0 * PI * omega_sum)
}
