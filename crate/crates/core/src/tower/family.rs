use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Rational64;
use rayon::prelude::*;

use super::cylinder::{cylinder_to_plane, CylinderCoefficient, Period};
use super::pullback::pullback_value;
use crate::beltrami::{BeltramiField, GridSpec};
use crate::error::{Error, Result};
use crate::series::DivisibilityChain;

/// Plane coefficients `mu_{n_i}` along a chain with cached sup-norm increments.
#[derive(Debug, Clone)]
pub struct PeriodicBeltramiFamily {
    chain: DivisibilityChain,
    cylinders: Vec<CylinderCoefficient>,
    levels: Vec<BeltramiField>,
    increments: Vec<f64>,
}

impl PeriodicBeltramiFamily {
    /// One cylinder coefficient per chain entry, each periodic at its level.
    pub fn from_cylinders<G>(chain: DivisibilityChain, cylinders: Vec<CylinderCoefficient>, grid_for_level: G) -> Result<Self>
    where
        G: Fn(u64) -> Result<GridSpec>,
    {
        if cylinders.len() != chain.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for a chain of length {}",
                cylinders.len(),
                chain.len()
            )));
        }
        let levels = chain
            .entries()
            .iter()
            .zip(&cylinders)
            .enumerate()
            .map(|(index, (&n, mu))| {
                grid_for_level(n)
                    .and_then(|spec| cylinder_to_plane(mu, n, spec))
                    .map_err(|e| Error::Level {
                        index,
                        level: n,
                        source: Box::new(e),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let increments = (0..levels.len().saturating_sub(1))
            .map(|i| {
                let n = chain.entries()[i];
                let m = chain.entries()[i + 1] / n;
                level_increment(&levels[i], &levels[i + 1], m)
            })
            .collect();
        Ok(PeriodicBeltramiFamily {
            chain,
            cylinders,
            levels,
            increments,
        })
    }

    /// `mu` restricted to `[0, 2 pi n_i) x R` and extended periodically, level by level.
    pub fn build_periodic_approximants<G>(mu: &CylinderCoefficient, chain: DivisibilityChain, grid_for_level: G) -> Result<Self>
    where
        G: Fn(u64) -> Result<GridSpec>,
    {
        let cylinders = chain
            .entries()
            .iter()
            .map(|&n| {
                if mu.is_periodic_at(n) {
                    Ok(mu.clone())
                } else {
                    mu.periodic_restriction(n)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_cylinders(chain, cylinders, grid_for_level)
    }

    /// Level `i` is `base + terms[0] + ... + terms[i-1]`; `terms[j]` must be periodic at `n_{j+1}`.
    pub fn from_partial_sums<G>(
        chain: DivisibilityChain,
        base: CylinderCoefficient,
        terms: Vec<CylinderCoefficient>,
        grid_for_level: G,
    ) -> Result<Self>
    where
        G: Fn(u64) -> Result<GridSpec>,
    {
        if terms.len() + 1 != chain.len() {
            return Err(Error::InvalidArgument(format!(
                "a chain of length {} needs {} increments, got {}",
                chain.len(),
                chain.len() - 1,
                terms.len()
            )));
        }
        let mut cylinders = vec![base.clone()];
        let mut k = base.k();
        let mut decay = base.decay_bound();
        for (j, term) in terms.iter().enumerate() {
            let n = chain.entries()[j + 1];
            if !term.is_periodic_at(n) {
                return Err(Error::PeriodMismatch {
                    level: n,
                    period: format!("{:?}", term.period()),
                });
            }
            k += term.k();
            decay = decay.max(term.decay_bound());
            let parts: Vec<CylinderCoefficient> = cylinders.last().into_iter().cloned().chain([term.clone()]).collect();
            let (a, b) = (parts[0].evaluator().clone(), parts[1].evaluator().clone());
            cylinders.push(CylinderCoefficient::new(
                move |x, y| a(x, y) + b(x, y),
                Period::Periodic(Rational64::from_integer(n as i64)),
                decay,
                k,
            )?);
        }
        Self::from_cylinders(chain, cylinders, grid_for_level)
    }

    pub fn chain(&self) -> &DivisibilityChain {
        &self.chain
    }

    pub fn levels(&self) -> &[BeltramiField] {
        &self.levels
    }

    pub fn cylinders(&self) -> &[CylinderCoefficient] {
        &self.cylinders
    }

    /// `||mu_{n_{i+1}} - mu_{n_i}||_inf`, one per consecutive pair.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `n_1 ||mu_{n_1}|| ` followed by `n_{i+1} ||mu_{n_{i+1}} - mu_{n_i}||`.
    pub fn s_norm_terms(&self) -> Vec<f64> {
        let n = self.chain.entries();
        std::iter::once(n[0] as f64 * self.levels[0].sup_norm())
            .chain(self.increments.iter().enumerate().map(|(i, d)| n[i + 1] as f64 * d))
            .collect()
    }

    pub fn mu_s_norm(&self) -> f64 {
        self.s_norm_terms().iter().sum()
    }
}

/// Sampled sup over the finer grid of `|mu_fine - mu_coarse^(up)|`.
fn level_increment(coarse: &BeltramiField, fine: &BeltramiField, m: u64) -> f64 {
    let spec = *fine.spec();
    (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let z = spec.point_at(i);
            (fine.eval(z) - pullback_value(|w| coarse.eval(w), m, z)).norm()
        })
        .reduce(|| 0.0, f64::max)
}

pub fn mu_s_norm(family: &PeriodicBeltramiFamily) -> f64 {
    family.mu_s_norm()
}

/// Profile `b(v) (1 + e cos u) / (1 + e)` with `b` a smooth bump on `[-width, 0]`, peak 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile {
    pub width: f64,
    pub ripple: f64,
}

impl Default for BumpProfile {
    fn default() -> Self {
        BumpProfile { width: 1.0, ripple: 0.5 }
    }
}

impl BumpProfile {
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let s = (2.0 * v + self.width) / self.width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let b = (1.0 - s * s).powi(3);
        b * (1.0 + self.ripple * u.cos()) / (1.0 + self.ripple)
    }

    /// `c * profile(x/n, y/n)`, periodic with period `2 pi n`.
    pub fn scaled_term(self, c: f64, n: u64) -> Result<CylinderCoefficient> {
        let nf = n as f64;
        CylinderCoefficient::new(
            move |x, y| Complex64::new(c * self.eval(x / nf, y / nf), 0.0),
            Period::Periodic(Rational64::from_integer(n as i64)),
            nf * self.width,
            c.abs(),
        )
    }

    /// Grid holding every level's support `1 <= |w| <= e^width` in its inner half.
    pub fn grid(&self, size: usize) -> Result<GridSpec> {
        GridSpec::square(2.0 * self.width.exp() * 1.02, size)
    }
}

/// Family with zero base and increments `weights[i] * profile(x/n_{i+1}, y/n_{i+1})`,
/// so that `||mu_{n_{i+1}} - mu_{n_i}|| = weights[i]` up to sampling.
pub fn bump_increment_family(
    chain: DivisibilityChain,
    weights: &[f64],
    profile: BumpProfile,
    size: usize,
) -> Result<PeriodicBeltramiFamily> {
    let terms = weights
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let n = *chain
                .entries()
                .get(i + 1)
                .ok_or_else(|| Error::InvalidArgument("more weights than chain steps".into()))?;
            profile.scaled_term(c, n)
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = profile.grid(size)?;
    PeriodicBeltramiFamily::from_partial_sums(chain, CylinderCoefficient::zero(), terms, move |_| Ok(spec))
}

/// Deepest-level plane points `exp(i (x + i y) / n)` over an `x` period `[0, 2 pi n)` and
/// `y` in `[y_min, y_max]`.
pub fn leaf_sample_points(n: u64, x_count: usize, y_min: f64, y_max: f64, y_count: usize) -> Vec<Complex64> {
    let nf = n as f64;
    let mut out = Vec::with_capacity(x_count * y_count);
    for j in 0..y_count {
        let y = if y_count > 1 {
            y_min + (y_max - y_min) * j as f64 / (y_count - 1) as f64
        } else {
            y_min
        };
        for i in 0..x_count {
            let x = 2.0 * PI * nf * i as f64 / x_count as f64;
            out.push((Complex64::i() * Complex64::new(x, y) / nf).exp());
        }
    }
    out
}
