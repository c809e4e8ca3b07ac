use std::sync::Arc;

use num_complex::Complex64;

use crate::beltrami::{
    residual_from_nodes, solve_normal, BeltramiField, ComplexGrid, GridSpec, NormalSolutionField, PointFn, ResidualReport,
    SolverParams,
};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Radial cutoff `chi(r)`: 0 for `r <= R`, 1 for `r >= R (1 + blend)`, a `C^2` smoothstep
/// in between. `blend = 0` is the sharp indicator of `|z| >= R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCutoff {
    pub radius: f64,
    pub blend: f64,
}

impl SplitCutoff {
    pub fn new(radius: f64, blend: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("split radius must be positive, got {radius}")));
        }
        if !(blend >= 0.0) || !blend.is_finite() {
            return Err(Error::InvalidArgument(format!("blend width must be nonnegative, got {blend}")));
        }
        Ok(SplitCutoff { radius, blend })
    }

    pub fn sharp(radius: f64) -> Result<Self> {
        Self::new(radius, 0.0)
    }

    /// Radius beyond which `mu` is carried entirely by the outer stage.
    pub fn outer_radius(&self) -> f64 {
        self.radius * (1.0 + self.blend)
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r < self.radius {
            return 0.0;
        }
        if self.blend == 0.0 || r >= self.outer_radius() {
            return 1.0;
        }
        let t = (r - self.radius) / (self.outer_radius() - self.radius);
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// Outer part `mu chi` moved inside the disk `|z| <= 1/R` by the inversion `z -> 1/z`.
#[derive(Clone)]
pub struct MobiusSplit {
    mu: PointFn,
    k: f64,
    cutoff: SplitCutoff,
    nu1: BeltramiField,
}

impl std::fmt::Debug for MobiusSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MobiusSplit")
            .field("k", &self.k)
            .field("cutoff", &self.cutoff)
            .field("nu1", &self.nu1)
            .finish()
    }
}

/// `nu1(z) = mu1(1/z) z^2 / zbar^2` with `mu1 = mu chi`, sampled on a `size` grid around `|z| <= 1/R`.
pub fn mobius_support_split(mu: PointFn, k: f64, cutoff: SplitCutoff, size: usize) -> Result<MobiusSplit> {
    if !(k < 1.0) || k < 0.0 {
        return Err(Error::NotContractive { sup: k, bound: k });
    }
    let inner = 1.0 / cutoff.radius;
    let spec = GridSpec::square(2.0 * inner * 1.02, size)?;
    let m = mu.clone();
    let source: PointFn = Arc::new(move |z: Complex64| {
        let r = z.norm();
        if r == 0.0 || r > inner {
            return ZERO;
        }
        let chi = cutoff.eval(1.0 / r);
        if chi == 0.0 {
            return ZERO;
        }
        let phase = z / z.conj();
        m(ONE / z) * chi * phase * phase
    });
    let s = source.clone();
    let nu1 = BeltramiField::from_fn_with_bound(spec, move |z| s(z), k)?.with_source(source);
    Ok(MobiusSplit { mu, k, cutoff, nu1 })
}

impl MobiusSplit {
    pub fn cutoff(&self) -> SplitCutoff {
        self.cutoff
    }

    pub fn nu1(&self) -> &BeltramiField {
        &self.nu1
    }

    /// `mu1 = mu chi` in the original coordinate.
    pub fn mu1(&self, z: Complex64) -> Complex64 {
        let chi = self.cutoff.eval(z.norm());
        if chi == 0.0 {
            ZERO
        } else {
            (self.mu)(z) * chi
        }
    }

    /// Coefficient of `f2`: the relative coefficient `(mu - mu1) / (1 - mu conj(mu1))`
    /// moved forward along `f1`, `mu2(f1(z)) = R(z) f1_z / conj(f1_z)`.
    pub fn mu2(&self, outer: &OuterMap, size: usize) -> Result<BeltramiField> {
        let rim = self.cutoff.outer_radius();
        let reach = (0..256)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / 256.0;
                outer.eval(Complex64::from_polar(rim, t)).norm()
            })
            .fold(0.0, f64::max);
        let spec = GridSpec::square(2.0 * reach * 1.02, size)?;
        let split = self.clone();
        let o = outer.clone();
        BeltramiField::from_fn_with_bound(
            spec,
            move |w| {
                let z = match o.invert(w) {
                    Some(z) if z.norm() < rim => z,
                    _ => return ZERO,
                };
                let m = (split.mu)(z);
                let m1 = split.mu1(z);
                let rel = (m - m1) / (ONE - m * m1.conj());
                if rel == ZERO {
                    return ZERO;
                }
                let (fz, _) = o.derivatives(z);
                rel * fz / fz.conj()
            },
            self.k,
        )
    }
}

/// `f1(z) = 1 / g(1/z)` with `g` the normal solution for `nu1`; conformal on `|z| < R`.
#[derive(Debug, Clone)]
pub struct OuterMap {
    g: Arc<NormalSolutionField>,
}

impl OuterMap {
    pub fn new(g: NormalSolutionField) -> Self {
        OuterMap { g: Arc::new(g) }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        if z == ZERO {
            return ZERO;
        }
        ONE / self.g.eval(ONE / z)
    }

    /// `(f1_z, f1_zbar) = (g_z / (g z)^2, g_zbar / (g zbar)^2)` at `1/z`.
    pub fn derivatives(&self, z: Complex64) -> (Complex64, Complex64) {
        if z == ZERO {
            return (ONE, ZERO);
        }
        let zeta = ONE / z;
        let gz = self.g.eval(zeta);
        let (dz, dzb) = self.g.derivatives(zeta);
        (dz / (gz * gz * z * z), dzb / (gz * gz * z.conj() * z.conj()))
    }

    /// Newton iteration on the real-linear differential from `z = w`; `None` without convergence.
    pub fn invert(&self, w: Complex64) -> Option<Complex64> {
        let mut z = w;
        for _ in 0..60 {
            let r = w - self.eval(z);
            if r.norm() <= 1e-12 * (1.0 + w.norm()) {
                return Some(z);
            }
            let (fz, fzb) = self.derivatives(z);
            let jac = fz.norm_sqr() - fzb.norm_sqr();
            if !(jac > 0.0) {
                return None;
            }
            z += (fz.conj() * r - fzb * r.conj()) / jac;
            if !z.is_finite() {
                return None;
            }
        }
        None
    }
}

/// Composite normal map `f = f2 o f1` for a coefficient without compact support.
#[derive(Debug, Clone)]
pub struct SplitSolution {
    pub split: MobiusSplit,
    pub outer: OuterMap,
    pub inner: NormalSolutionField,
}

impl SplitSolution {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.inner.eval(self.outer.eval(z))
    }

    /// Central-difference residual of the composite on `spec` against the full coefficient.
    pub fn residual(&self, spec: GridSpec) -> Result<ResidualReport> {
        let f = ComplexGrid::from_fn(spec, |z| self.eval(z));
        let mu = self.split.mu.clone();
        let m = ComplexGrid::from_fn(spec, move |z| mu(z));
        residual_from_nodes(&f, &m, self.split.k)
    }
}

/// Solve `nu1` for `g`, then `mu2` for `f2`; both grids have `size` nodes per side.
pub fn split_solve(mu: PointFn, k: f64, cutoff: SplitCutoff, size: usize, params: &SolverParams) -> Result<SplitSolution> {
    let split = mobius_support_split(mu, k, cutoff, size)?;
    let g = solve_normal(split.nu1(), params)?;
    let outer = OuterMap::new(g);
    let mu2 = split.mu2(&outer, size)?;
    let inner = solve_normal(&mu2, params)?;
    Ok(SplitSolution { split, outer, inner })
}
