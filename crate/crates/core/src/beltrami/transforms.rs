use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::grid::{ComplexGrid, GridSpec, SUM_CHUNK};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// In-place 2-D FFT on a row-major `rows x cols` array.
pub(crate) struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub(crate) fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    fn run(&self, data: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        data.par_chunks_mut(self.cols).for_each(|r| row.process(r));
        let mut t = transpose(data, self.rows, self.cols);
        t.par_chunks_mut(self.rows).for_each(|c| col.process(c));
        let back = transpose(&t, self.cols, self.rows);
        data.copy_from_slice(&back);
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    /// Normalized inverse.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inv, &self.col_inv);
        let s = 1.0 / (self.rows * self.cols) as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; data.len()];
    out.par_chunks_mut(rows).enumerate().for_each(|(c, dst)| {
        for (r, d) in dst.iter_mut().enumerate() {
            *d = data[r * cols + c];
        }
    });
    out
}

fn wrapped(index: usize, n: usize) -> f64 {
    if index < n / 2 {
        index as f64
    } else {
        index as f64 - n as f64
    }
}

/// Periodic Beurling multiplier `(kx - i ky) / (kx + i ky)` on the grid, 0 at the zero frequency.
pub struct BeurlingOperator {
    spec: GridSpec,
    fft: Fft2,
    multiplier: Vec<Complex64>,
}

impl BeurlingOperator {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.n;
        let lx = 2.0 * spec.half_width_x;
        let ly = 2.0 * spec.half_width_y;
        let mut multiplier = vec![ZERO; n * n];
        for r in 0..n {
            let ky = 2.0 * PI * wrapped(r, n) / ly;
            for c in 0..n {
                let kx = 2.0 * PI * wrapped(c, n) / lx;
                let zeta = Complex64::new(kx, ky);
                if zeta.norm_sqr() > 0.0 {
                    multiplier[r * n + c] = zeta.conj() / zeta;
                }
            }
        }
        BeurlingOperator {
            spec,
            fft: Fft2::new(n, n),
            multiplier,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn apply(&self, data: &[Complex64]) -> Vec<Complex64> {
        let mut buf = data.to_vec();
        self.fft.forward(&mut buf);
        buf.par_iter_mut().zip(&self.multiplier).for_each(|(v, m)| *v *= m);
        self.fft.inverse(&mut buf);
        buf
    }
}

fn check_support(h: &ComplexGrid) -> Result<()> {
    match h.support_outside_inner_half() {
        Some(p) => Err(Error::SupportInPadding { x: p.re, y: p.im }),
        None => Ok(()),
    }
}

/// Beurling transform of a density supported in the inner half of its box.
pub fn beurling_transform(h: &ComplexGrid) -> Result<ComplexGrid> {
    check_support(h)?;
    let op = BeurlingOperator::new(*h.spec());
    ComplexGrid::from_data(*h.spec(), op.apply(h.data()))
}

/// Discrete Cauchy transform `(1/pi) sum h(w) dA / (z - w)`, the self term dropped.
pub struct CauchyOperator {
    spec: GridSpec,
    fft: Fft2,
    kernel_hat: Vec<Complex64>,
}

impl CauchyOperator {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.n;
        let m = 2 * n;
        let (dx, dy) = (spec.dx(), spec.dy());
        let weight = dx * dy / PI;
        let mut kernel = vec![ZERO; m * m];
        for r in 0..m {
            let b = wrapped(r, m) * dy;
            for c in 0..m {
                let a = wrapped(c, m) * dx;
                let zeta = Complex64::new(a, b);
                if zeta.norm_sqr() > 0.0 {
                    kernel[r * m + c] = weight / zeta;
                }
            }
        }
        let fft = Fft2::new(m, m);
        fft.forward(&mut kernel);
        CauchyOperator {
            spec,
            fft,
            kernel_hat: kernel,
        }
    }

    /// Node values, no gauge.
    pub fn apply(&self, data: &[Complex64]) -> Vec<Complex64> {
        let n = self.spec.n;
        let m = 2 * n;
        let mut buf = vec![ZERO; m * m];
        for r in 0..n {
            buf[r * m..r * m + n].copy_from_slice(&data[r * n..(r + 1) * n]);
        }
        self.fft.forward(&mut buf);
        buf.par_iter_mut().zip(&self.kernel_hat).for_each(|(v, k)| *v *= k);
        self.fft.inverse(&mut buf);
        let mut out = vec![ZERO; n * n];
        for r in 0..n {
            out[r * n..(r + 1) * n].copy_from_slice(&buf[r * m..r * m + n]);
        }
        out
    }
}

/// Direct quadrature of the same discrete sum at an arbitrary point.
pub fn cauchy_direct(h: &ComplexGrid, z: Complex64) -> Complex64 {
    let spec = h.spec();
    let weight = spec.dx() * spec.dy() / PI;
    let n = spec.n;
    (0..n)
        .into_par_iter()
        .map(|r| {
            let mut acc = ZERO;
            for c in 0..n {
                let v = h.get(r, c);
                if v != ZERO {
                    let d = z - spec.point(r, c);
                    if d.norm_sqr() > 0.0 {
                        acc += v / d;
                    }
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum::<Complex64>()
        * weight
}

/// Cauchy transform gauged so that `(C h)(0) = 0`.
pub fn cauchy_transform(h: &ComplexGrid) -> Result<ComplexGrid> {
    check_support(h)?;
    let op = CauchyOperator::new(*h.spec());
    let at_zero = cauchy_direct(h, ZERO);
    let data = op.apply(h.data()).into_iter().map(|v| v - at_zero).collect();
    ComplexGrid::from_data(*h.spec(), data)
}

/// Exterior expansion `(1/pi) sum_k M_k / (z - c)^(k+1)` of the discrete Cauchy sum.
#[derive(Debug, Clone)]
pub struct Multipole {
    center: Complex64,
    radius: f64,
    /// `M_k / radius^k`.
    moments: Vec<Complex64>,
}

impl Multipole {
    pub const TERMS: usize = 100;

    pub fn new(h: &ComplexGrid) -> Self {
        let spec = h.spec();
        let center = spec.center;
        let radius = (0..spec.len())
            .filter(|&i| h.data()[i] != ZERO)
            .map(|i| (spec.point_at(i) - center).norm())
            .fold(0.0, f64::max);
        let scale = if radius > 0.0 { radius } else { 1.0 };
        let weight = spec.dx() * spec.dy() / PI;
        let support: Vec<usize> = (0..spec.len()).filter(|&i| h.data()[i] != ZERO).collect();
        let parts: Vec<Vec<Complex64>> = support
            .par_chunks(SUM_CHUNK)
            .map(|chunk| {
                let mut m = vec![ZERO; Self::TERMS];
                for &i in chunk {
                    let t = (spec.point_at(i) - center) / scale;
                    let mut p = Complex64::new(weight, 0.0) * h.data()[i];
                    for mk in m.iter_mut() {
                        *mk += p;
                        p *= t;
                    }
                }
                m
            })
            .collect();
        let mut moments = vec![ZERO; Self::TERMS];
        for part in parts {
            moments.iter_mut().zip(part).for_each(|(x, y)| *x += y);
        }
        Multipole {
            center,
            radius: scale,
            moments,
        }
    }

    /// Ratio `support radius / |z - c|`; the series is used only well below 1.
    pub fn convergence_ratio(&self, z: Complex64) -> f64 {
        self.radius / (z - self.center).norm()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let d = z - self.center;
        let t = self.radius / d;
        let mut acc = ZERO;
        for m in self.moments.iter().rev() {
            acc = acc * t + m;
        }
        acc / d
    }
}
