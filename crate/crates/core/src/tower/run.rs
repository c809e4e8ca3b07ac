use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::PeriodicBeltramiFamily;
use crate::beltrami::{solve_normal, NormalSolutionField, SolverParams};
use crate::error::{Error, Result};

/// Empirical constants of the tower run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TowerConstants {
    /// Largest per-level ratio `diffs[i] / (n_{i+1} ||dmu_i|| max{1, |pi_L|} / L)`.
    #[serde(rename = "A_prime_ML")]
    pub a_prime_ml: f64,
    /// Largest growth ratio `|F[i]| / max{1, |pi_L|}`.
    #[serde(rename = "M_L")]
    pub m_l: f64,
}

/// Solver statistics for one level of the tower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSolve {
    pub level: u64,
    pub iterations: usize,
    pub residual: f64,
    pub mu_sup: f64,
}

/// Evaluation table `F[i][p] = (f_{n_i}(w_p^{n_I / n_i}))^{n_i / L}` for `i = J..=I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerRun {
    pub chain: Vec<u64>,
    #[serde(rename = "L")]
    pub l: u64,
    pub j_index: usize,
    pub points: Vec<Complex64>,
    pub table: Vec<Vec<Complex64>>,
    pub diffs: Vec<f64>,
    pub constants: TowerConstants,
    /// Leaf values `-i n log f_n(exp(i z / n))` at `z = 0` and `z = 1`, per level.
    pub anchors: Vec<[Complex64; 2]>,
    pub solves: Vec<LevelSolve>,
}

impl TowerRun {
    /// Chain entries `n_J, ..., n_I` covered by the table.
    pub fn levels(&self) -> &[u64] {
        &self.chain[self.j_index..]
    }

    /// `|pi_L(x)| = |w^{n_I / L}|` per sample point.
    pub fn base_moduli(&self) -> Vec<f64> {
        let e = (self.chain[self.chain.len() - 1] / self.l) as f64;
        self.points.iter().map(|w| w.norm().powf(e)).collect()
    }

    /// `level,n_next,diff` rows.
    pub fn write_diffs_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,level,next_level,diff")?;
        let levels = self.levels();
        for (i, d) in self.diffs.iter().enumerate() {
            writeln!(w, "{},{},{},{:e}", i + self.j_index, levels[i], levels[i + 1], d)?;
        }
        Ok(())
    }
}

fn power_exponent(a: u64, b: u64) -> Result<u32> {
    u32::try_from(a / b).map_err(|_| Error::Overflow("tower exponent"))
}

/// Leaf value `-i n log u` with the logarithm branch closest to `z`.
pub fn leaf_value(u: Complex64, n: u64, z: Complex64) -> Complex64 {
    let nf = n as f64;
    let principal = -Complex64::i() * nf * u.ln();
    let turns = ((z.re - principal.re) / (2.0 * PI * nf)).round();
    principal + 2.0 * PI * nf * turns
}

fn anchors(f: &NormalSolutionField, n: u64) -> [Complex64; 2] {
    let nf = n as f64;
    let at = |z: Complex64| leaf_value(f.eval((Complex64::i() * z / nf).exp()), n, z);
    [at(Complex64::new(0.0, 0.0)), at(Complex64::new(1.0, 0.0))]
}

/// Solve every level from `J` to the end of the chain and tabulate the projections to level `L = n_J`.
pub fn tower_solve(
    family: &PeriodicBeltramiFamily,
    j_index: usize,
    points: &[Complex64],
    params: &SolverParams,
) -> Result<TowerRun> {
    let chain = family.chain().entries().to_vec();
    if j_index >= chain.len() {
        return Err(Error::InvalidArgument(format!("J = {j_index} outside a chain of length {}", chain.len())));
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("no sample points".into()));
    }
    let l = chain[j_index];
    let deepest = chain[chain.len() - 1];
    let indices: Vec<usize> = (j_index..chain.len()).collect();
    let solved = indices
        .par_iter()
        .map(|&i| {
            let n = chain[i];
            let tag = |e: Error| Error::Level {
                index: i,
                level: n,
                source: Box::new(e),
            };
            let mu = &family.levels()[i];
            let f = solve_normal(mu, params).map_err(tag)?;
            let inner = power_exponent(deepest, n).map_err(tag)?;
            let outer = power_exponent(n, l).map_err(tag)?;
            let row: Vec<Complex64> = points.iter().map(|w| f.eval(w.powu(inner)).powu(outer)).collect();
            if let Some(p) = row.iter().position(|v| !v.is_finite()) {
                return Err(tag(Error::InvalidArgument(format!("non-finite table entry at point {p}"))));
            }
            let stats = LevelSolve {
                level: n,
                iterations: f.iterations(),
                residual: f.residual(),
                mu_sup: mu.sup_norm(),
            };
            Ok((row, anchors(&f, n), stats))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Vec::with_capacity(solved.len());
    let mut anchor_rows = Vec::with_capacity(solved.len());
    let mut solves = Vec::with_capacity(solved.len());
    for (row, a, s) in solved {
        table.push(row);
        anchor_rows.push(a);
        solves.push(s);
    }
    let diffs = table
        .windows(2)
        .map(|pair| pair[0].iter().zip(&pair[1]).map(|(a, b)| (b - a).norm()).fold(0.0, f64::max))
        .collect();
    let mut run = TowerRun {
        chain,
        l,
        j_index,
        points: points.to_vec(),
        table,
        diffs,
        constants: TowerConstants { a_prime_ml: 0.0, m_l: 0.0 },
        anchors: anchor_rows,
        solves,
    };
    let report = cauchy_diagnostics(&run, family, &CauchyOptions::default())?;
    run.constants = TowerConstants {
        a_prime_ml: report.a_prime_ml.iter().copied().fold(0.0, f64::max),
        m_l: report.growth.iter().copied().fold(0.0, f64::max),
    };
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum CauchyVerdict {
    Cauchy,
    NotCauchy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyOptions {
    /// Diffs at or below this count as stationary.
    pub absolute_tolerance: f64,
    /// Largest mean per-level contraction `(last/first)^{1/(m-1)}` accepted as decay.
    pub max_rate: f64,
    /// Coefficient increments at or below this count as zero.
    pub increment_floor: f64,
}

impl Default for CauchyOptions {
    fn default() -> Self {
        CauchyOptions {
            absolute_tolerance: 1e-12,
            max_rate: 0.8,
            increment_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyReport {
    /// Per-level `max_p |dF| / (n_{i+1} ||dmu_i|| max{1, |pi_L|} / L)`; 0 where the increment vanishes.
    pub a_prime_ml: Vec<f64>,
    /// Per-level `max_p |F[i]| / max{1, |pi_L|}`.
    pub growth: Vec<f64>,
    /// Per-level `max_p |pi_L| / max{1, |F[i]|}`.
    pub reverse: Vec<f64>,
    /// `max / min - 1` of the nonzero fitted constants.
    pub constant_variation: Option<f64>,
    pub monotone: bool,
    /// Mean per-level contraction of the diffs.
    pub rate: Option<f64>,
    /// Every coefficient increment is below the floor, so the diffs are discretization error only.
    pub stationary_family: bool,
    pub verdict: CauchyVerdict,
}

/// Empirical constants and a Cauchy verdict for a run.
pub fn cauchy_diagnostics(run: &TowerRun, family: &PeriodicBeltramiFamily, options: &CauchyOptions) -> Result<CauchyReport> {
    if run.table.len() < 2 {
        return Err(Error::InvalidArgument("a tower run needs at least two levels".into()));
    }
    let scale: Vec<f64> = run.base_moduli().into_iter().map(|m| m.max(1.0)).collect();
    let levels = run.levels();
    let increments = &family.increments()[run.j_index..];
    let l = run.l as f64;
    let a_prime_ml = run
        .table
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            if increments[i] <= options.increment_floor {
                return 0.0;
            }
            let step = levels[i + 1] as f64 * increments[i] / l;
            pair[0]
                .iter()
                .zip(&pair[1])
                .zip(&scale)
                .map(|((a, b), s)| (b - a).norm() / (step * s))
                .fold(0.0, f64::max)
        })
        .collect::<Vec<_>>();
    let moduli = run.base_moduli();
    let growth = run
        .table
        .iter()
        .map(|row| row.iter().zip(&scale).map(|(v, s)| v.norm() / s).fold(0.0, f64::max))
        .collect();
    let reverse = run
        .table
        .iter()
        .map(|row| row.iter().zip(&moduli).map(|(v, m)| m / v.norm().max(1.0)).fold(0.0, f64::max))
        .collect();
    let nonzero: Vec<f64> = a_prime_ml.iter().copied().filter(|&c| c > 0.0).collect();
    let constant_variation = if nonzero.is_empty() {
        None
    } else {
        let max = nonzero.iter().copied().fold(0.0, f64::max);
        let min = nonzero.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max / min - 1.0)
    };
    let d = &run.diffs;
    let monotone = d.windows(2).all(|w| w[1] <= w[0]);
    let first = d[0];
    let last = d[d.len() - 1];
    let rate = if d.len() >= 2 && first > 0.0 {
        Some((last / first).powf(1.0 / (d.len() - 1) as f64))
    } else {
        None
    };
    let stationary = d.iter().all(|&x| x <= options.absolute_tolerance);
    let stationary_family = increments.iter().all(|&x| x <= options.increment_floor);
    let decaying = monotone && rate.is_some_and(|r| r <= options.max_rate);
    let verdict = if stationary || stationary_family || decaying {
        CauchyVerdict::Cauchy
    } else {
        CauchyVerdict::NotCauchy
    };
    Ok(CauchyReport {
        a_prime_ml,
        growth,
        reverse,
        constant_variation,
        monotone,
        rate,
        stationary_family,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineReport {
    /// `(a_i, b_i)` with `a_i = value_i(1) - value_i(0)`, `b_i = value_i(0)`.
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    /// Aitken extrapolation when three or more levels are available, else the last value.
    pub limit_a: Complex64,
    pub limit_b: Complex64,
    /// Successive `|a_{i+1} - a_i| + |b_{i+1} - b_i|`.
    pub steps: Vec<f64>,
    pub stabilized: bool,
    pub degenerate: bool,
}

fn aitken(v: &[Complex64]) -> Complex64 {
    let k = v.len();
    let last = v[k - 1];
    if k < 3 {
        return last;
    }
    let (x0, x1, x2) = (v[k - 3], v[k - 2], v[k - 1]);
    let den = x2 - 2.0 * x1 + x0;
    if den.norm() < 1e-14 * (1.0 + x2.norm()) {
        return last;
    }
    let out = x2 - (x2 - x1) * (x2 - x1) / den;
    if out.is_finite() && (out - last).norm() <= (x2 - x1).norm() * 10.0 {
        out
    } else {
        last
    }
}

/// Affine data `(a_i, b_i)` from leaf values at `0` and `1`; `stabilized` when the
/// steps are nonincreasing from the second on and the last step is below `tol`.
pub fn affine_renormalize(anchors: &[[Complex64; 2]], tol: f64) -> Result<AffineReport> {
    if anchors.is_empty() {
        return Err(Error::InvalidArgument("no anchor values".into()));
    }
    let a: Vec<Complex64> = anchors.iter().map(|v| v[1] - v[0]).collect();
    let b: Vec<Complex64> = anchors.iter().map(|v| v[0]).collect();
    let steps: Vec<f64> = a
        .windows(2)
        .zip(b.windows(2))
        .map(|(x, y)| (x[1] - x[0]).norm() + (y[1] - y[0]).norm())
        .collect();
    let degenerate = a.iter().any(|v| v.norm() < 1e-10);
    let stabilized = !degenerate && steps.last().is_none_or(|&s| s <= tol) && steps.windows(2).skip(1).all(|w| w[1] <= w[0]);
    Ok(AffineReport {
        limit_a: aitken(&a),
        limit_b: aitken(&b),
        a,
        b,
        steps,
        stabilized,
        degenerate,
    })
}

pub fn affine_renormalize_run(run: &TowerRun, tol: f64) -> Result<AffineReport> {
    affine_renormalize(&run.anchors, tol)
}
