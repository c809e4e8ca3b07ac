use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{ComplexGrid, GridSpec, SUM_CHUNK};
use super::transforms::{cauchy_direct, BeurlingOperator, CauchyOperator, Multipole};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub type PointFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Grid samples of a compactly supported Beltrami coefficient with `sup |mu| <= k < 1`.
/// An analytic source, when present, is used for off-grid evaluation.
#[derive(Clone)]
pub struct BeltramiField {
    grid: ComplexGrid,
    k: f64,
    source: Option<PointFn>,
}

impl fmt::Debug for BeltramiField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BeltramiField")
            .field("spec", self.grid.spec())
            .field("k", &self.k)
            .field("analytic_source", &self.source.is_some())
            .finish()
    }
}

impl BeltramiField {
    /// Bound taken as the sampled sup.
    pub fn new(grid: ComplexGrid) -> Result<Self> {
        let k = grid.sup_norm();
        Self::with_bound(grid, k)
    }

    pub fn with_bound(grid: ComplexGrid, k: f64) -> Result<Self> {
        let sup = grid.sup_norm();
        if !(k < 1.0) || !sup.is_finite() {
            return Err(Error::NotContractive { sup, bound: k });
        }
        if sup > k {
            return Err(Error::NotContractive { sup, bound: k });
        }
        Ok(BeltramiField { grid, k, source: None })
    }

    pub fn zero(spec: GridSpec) -> Self {
        BeltramiField {
            grid: ComplexGrid::zeros(spec),
            k: 0.0,
            source: None,
        }
    }

    /// Samples `f` at the cell centers and keeps it as the analytic source.
    pub fn from_fn<F>(spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        let f: PointFn = Arc::new(f);
        let g = f.clone();
        let grid = ComplexGrid::from_fn(spec, move |z| g(z));
        let mut field = Self::new(grid)?;
        field.source = Some(f);
        Ok(field)
    }

    /// Like `from_fn` with a declared bound `k` that must dominate the samples.
    pub fn from_fn_with_bound<F>(spec: GridSpec, f: F, k: f64) -> Result<Self>
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        let f: PointFn = Arc::new(f);
        let g = f.clone();
        let grid = ComplexGrid::from_fn(spec, move |z| g(z));
        let mut field = Self::with_bound(grid, k)?;
        field.source = Some(f);
        Ok(field)
    }

    pub fn with_source(mut self, source: PointFn) -> Self {
        self.source = Some(source);
        self
    }

    pub fn grid(&self) -> &ComplexGrid {
        &self.grid
    }

    pub fn spec(&self) -> &GridSpec {
        self.grid.spec()
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn sup_norm(&self) -> f64 {
        self.grid.sup_norm()
    }

    pub fn source(&self) -> Option<&PointFn> {
        self.source.as_ref()
    }

    /// Analytic source if present, else bilinear interpolation inside the box and 0 outside.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match &self.source {
            Some(f) => f(z),
            None if self.spec().contains(z) => self.grid.interpolate(z),
            None => ZERO,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.grid.data().iter().all(|v| *v == ZERO)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

/// `f = z + C h - (C h)(0)` with `f_zbar = h`, `f_z = 1 + S h`.
#[derive(Debug, Clone)]
pub struct NormalSolutionField {
    h: ComplexGrid,
    sh: ComplexGrid,
    /// Gauged Cauchy transform at the nodes.
    ch: ComplexGrid,
    gauge: Complex64,
    multipole: Multipole,
    iterations: usize,
    residual: f64,
    diffs: Vec<f64>,
    sup_ratios: Vec<f64>,
    l2_ratios: Vec<f64>,
}

impl NormalSolutionField {
    pub fn spec(&self) -> &GridSpec {
        self.h.spec()
    }

    pub fn h(&self) -> &ComplexGrid {
        &self.h
    }

    pub fn sh(&self) -> &ComplexGrid {
        &self.sh
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Sup of `h - mu (1 + S h)` at the final iterate.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Sup-norm successive differences.
    pub fn diffs(&self) -> &[f64] {
        &self.diffs
    }

    pub fn sup_ratios(&self) -> &[f64] {
        &self.sup_ratios
    }

    pub fn l2_ratios(&self) -> &[f64] {
        &self.l2_ratios
    }

    pub fn f_node(&self, row: usize, col: usize) -> Complex64 {
        self.spec().point(row, col) + self.ch.get(row, col)
    }

    pub fn f_nodes(&self) -> ComplexGrid {
        let spec = *self.spec();
        let data = (0..spec.len()).map(|i| spec.point_at(i) + self.ch.data()[i]).collect();
        ComplexGrid::from_data(spec, data).expect("same size")
    }

    /// Evaluation anywhere in the plane.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let spec = self.spec();
        let (r, c) = spec.fractional_index(z);
        let last = (spec.n - 1) as f64;
        if (0.0..=last).contains(&r) && (0.0..=last).contains(&c) {
            return z + self.ch.interpolate(z);
        }
        if self.multipole.convergence_ratio(z) < 0.8 {
            z + self.multipole.eval(z) - self.gauge
        } else {
            z + cauchy_direct(&self.h, z) - self.gauge
        }
    }

    /// `(f_z, f_zbar)`: grid interpolation of `1 + S h` and `h` inside the node hull,
    /// complex difference quotient outside, where `f` is conformal.
    pub fn derivatives(&self, z: Complex64) -> (Complex64, Complex64) {
        let spec = self.spec();
        let (r, c) = spec.fractional_index(z);
        let last = (spec.n - 1) as f64;
        if (0.0..=last).contains(&r) && (0.0..=last).contains(&c) {
            return (ONE + self.sh.interpolate(z), self.h.interpolate(z));
        }
        let step = 1e-5 * (1.0 + z.norm());
        ((self.eval(z + step) - self.eval(z - step)) / (2.0 * step), ZERO)
    }

    /// Solve `f(z) = w` by Newton steps on the real-linear differential.
    pub fn invert(&self, w: Complex64) -> Complex64 {
        let mut z = w;
        let mut best = (f64::INFINITY, z);
        for _ in 0..60 {
            let r = w - self.eval(z);
            let rn = r.norm();
            if rn < best.0 {
                best = (rn, z);
            }
            if rn <= 1e-13 * (1.0 + w.norm()) {
                return z;
            }
            let (fz, fzb) = self.derivatives(z);
            let jac = fz.norm_sqr() - fzb.norm_sqr();
            if !(jac > 0.0) {
                break;
            }
            z += (fz.conj() * r - fzb * r.conj()) / jac;
        }
        best.1
    }
}

/// Neumann iteration `h <- mu S h + mu` from `h = 0`, then `f = z + C h` gauged at 0.
pub fn solve_normal(mu: &BeltramiField, params: &SolverParams) -> Result<NormalSolutionField> {
    if !(params.tol > 0.0) || params.max_iter == 0 {
        return Err(Error::InvalidArgument("tol and max_iter must be positive".into()));
    }
    if let Some(p) = mu.grid().support_outside_inner_half() {
        return Err(Error::SupportInPadding { x: p.re, y: p.im });
    }
    let spec = *mu.spec();
    let s = BeurlingOperator::new(spec);
    let m = mu.grid().data();
    let mut h = vec![ZERO; spec.len()];
    let mut sh = vec![ZERO; spec.len()];
    let mut diffs = Vec::new();
    let mut sup_ratios = Vec::new();
    let mut l2_ratios = Vec::new();
    let mut prev_l2 = f64::NAN;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let next: Vec<Complex64> = m.par_iter().zip(&sh).map(|(&mu, &s)| mu * s + mu).collect();
        let parts: Vec<(f64, f64)> = next
            .par_chunks(SUM_CHUNK)
            .zip(h.par_chunks(SUM_CHUNK))
            .map(|(a, b)| {
                a.iter().zip(b).fold((0.0f64, 0.0), |acc, (x, y)| {
                    let d = (x - y).norm();
                    (acc.0.max(d), acc.1 + d * d)
                })
            })
            .collect();
        let (sup, l2) = parts.iter().fold((0.0f64, 0.0), |a, b| (a.0.max(b.0), a.1 + b.1));
        let l2 = l2.sqrt();
        if let Some(&prev) = diffs.last() {
            if prev > 0.0 {
                sup_ratios.push(sup / prev);
            }
            if prev_l2 > 0.0 {
                let ratio = l2 / prev_l2;
                l2_ratios.push(ratio);
                if ratio > 1.0 + 1e-9 && l2 > 1e-300 {
                    return Err(Error::ContractivityViolated { iteration: iterations, ratio });
                }
            }
        }
        diffs.push(sup);
        prev_l2 = l2;
        h = next;
        if sup < params.tol {
            break;
        }
        if iterations >= params.max_iter {
            return Err(Error::IterationBudgetExceeded {
                max_iter: params.max_iter,
                last_diff: sup,
            });
        }
        sh = s.apply(&h);
    }
    let h = ComplexGrid::from_data(spec, h)?;
    let sh = ComplexGrid::from_data(spec, s.apply(h.data()))?;
    let residual = h
        .data()
        .par_iter()
        .zip(sh.data())
        .zip(m)
        .map(|((&hv, &s), &mv)| (hv - mv * (ONE + s)).norm())
        .reduce(|| 0.0, f64::max);
    let gauge = cauchy_direct(&h, ZERO);
    let raw = CauchyOperator::new(spec).apply(h.data());
    let ch = ComplexGrid::from_data(spec, raw.into_iter().map(|v| v - gauge).collect())?;
    let multipole = Multipole::new(&h);
    Ok(NormalSolutionField {
        h,
        sh,
        ch,
        gauge,
        multipole,
        iterations,
        residual,
        diffs,
        sup_ratios,
        l2_ratios,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Max `|f_zbar - mu f_z|` over interior nodes.
    pub max_residual: f64,
    /// Interior nodes where `|f_zbar| > k |f_z|`.
    pub dilatation_violations: usize,
    pub interior_nodes: usize,
}

/// Central-difference residual of node values `f` against `mu` on the same grid.
pub fn residual_from_nodes(f: &ComplexGrid, mu: &ComplexGrid, k: f64) -> Result<ResidualReport> {
    f.check_same(mu)?;
    let spec = f.spec();
    let n = spec.n;
    let (dx, dy) = (spec.dx(), spec.dy());
    let (max_residual, dilatation_violations) = (1..n - 1)
        .into_par_iter()
        .map(|r| {
            let mut worst = 0.0f64;
            let mut bad = 0usize;
            for c in 1..n - 1 {
                let fx = (f.get(r, c + 1) - f.get(r, c - 1)) / (2.0 * dx);
                let fy = (f.get(r + 1, c) - f.get(r - 1, c)) / (2.0 * dy);
                let fzb = (fx + Complex64::i() * fy) * 0.5;
                let fz = (fx - Complex64::i() * fy) * 0.5;
                worst = worst.max((fzb - mu.get(r, c) * fz).norm());
                if fzb.norm() > k * fz.norm() + 1e-12 {
                    bad += 1;
                }
            }
            (worst, bad)
        })
        .reduce(|| (0.0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    Ok(ResidualReport {
        max_residual,
        dilatation_violations,
        interior_nodes: (n - 2) * (n - 2),
    })
}

pub fn beltrami_residual(f: &NormalSolutionField, mu: &BeltramiField) -> Result<ResidualReport> {
    residual_from_nodes(&f.f_nodes(), mu.grid(), mu.k())
}

/// `z -> f(z) / f(1)`.
pub fn normalize_013<F>(f: F) -> Result<impl Fn(Complex64) -> Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let f1 = f(ONE);
    if !(f1.norm() >= 1e-12) {
        return Err(Error::DegenerateNormalization(f1.norm()));
    }
    Ok(move |z| f(z) / f1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub p: f64,
    pub a_emp: f64,
    pub b_emp: f64,
}

/// Empirical constants for `|f(z) - z| <= A ||mu|| |z|^(1-2/p)` and
/// `|z| - |f(z)| <= B ||mu|| |f(z)|^(1-2/p)` over the nodes.
pub fn distortion_from_nodes(f: &ComplexGrid, mu_sup: f64, p: f64) -> Result<DistortionReport> {
    if !(p > 2.0) {
        return Err(Error::InvalidArgument(format!("p must exceed 2, got {p}")));
    }
    if mu_sup == 0.0 {
        return Ok(DistortionReport { p, a_emp: 0.0, b_emp: 0.0 });
    }
    let e = 1.0 - 2.0 / p;
    let spec = f.spec();
    let (a, b) = (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let z = spec.point_at(i);
            let w = f.data()[i];
            let rz = z.norm();
            let a = if rz > 0.0 { (w - z).norm() / (mu_sup * rz.powf(e)) } else { 0.0 };
            let rw = w.norm();
            let b = if rw > 0.0 { ((rz - rw) / (mu_sup * rw.powf(e))).max(0.0) } else { 0.0 };
            (a, b)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));
    Ok(DistortionReport { p, a_emp: a, b_emp: b })
}

pub fn distortion_report(f: &NormalSolutionField, mu: &BeltramiField, p: f64) -> Result<DistortionReport> {
    distortion_from_nodes(&f.f_nodes(), mu.sup_norm(), p)
}
