use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::beltrami::{BeltramiField, GridSpec};
use crate::error::{Error, Result};
use crate::series::DivisibilityChain;

/// Values below this are set to zero when moved to a plane.
pub const SUPPORT_EPSILON: f64 = 1e-8;

pub type CylinderFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Period {
    /// `x`-period `2 pi * multiple`.
    Periodic(Rational64),
    LimitPeriodic,
}

/// A coefficient on the leaf `C` with `z = x + iy`, `|value| <= k < 1`.
#[derive(Clone)]
pub struct CylinderCoefficient {
    eval: CylinderFn,
    period: Period,
    /// `|value| < SUPPORT_EPSILON` for `|y| > decay_bound`.
    decay_bound: f64,
    k: f64,
}

impl fmt::Debug for CylinderCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CylinderCoefficient")
            .field("period", &self.period)
            .field("decay_bound", &self.decay_bound)
            .field("k", &self.k)
            .finish()
    }
}

impl CylinderCoefficient {
    pub fn new<F>(eval: F, period: Period, decay_bound: f64, k: f64) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        if !(0.0..1.0).contains(&k) {
            return Err(Error::NotContractive { sup: k, bound: 1.0 });
        }
        if let Period::Periodic(p) = period {
            if !p.is_positive() {
                return Err(Error::InvalidArgument(format!("period multiple must be positive, got {p}")));
            }
        }
        if !(decay_bound >= 0.0) {
            return Err(Error::InvalidArgument("decay bound must be nonnegative".into()));
        }
        Ok(CylinderCoefficient {
            eval: Arc::new(eval),
            period,
            decay_bound,
            k,
        })
    }

    pub fn zero() -> Self {
        Self::new(|_, _| Complex64::new(0.0, 0.0), Period::Periodic(Rational64::from_integer(1)), 0.0, 0.0)
            .expect("valid")
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        (self.eval)(x, y)
    }

    pub fn evaluator(&self) -> &CylinderFn {
        &self.eval
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn decay_bound(&self) -> f64 {
        self.decay_bound
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// True when `2 pi n` is a multiple of the declared period.
    pub fn is_periodic_at(&self, n: u64) -> bool {
        match self.period {
            Period::Periodic(p) => (Rational64::from_integer(n as i64) / p).is_integer(),
            Period::LimitPeriodic => false,
        }
    }

    /// Restriction to `[0, 2 pi n) x R`, extended `2 pi n`-periodically.
    pub fn periodic_restriction(&self, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("level must be positive".into()));
        }
        let f = self.eval.clone();
        let len = 2.0 * PI * n as f64;
        Ok(CylinderCoefficient {
            eval: Arc::new(move |x, y| f(x.rem_euclid(len), y)),
            period: Period::Periodic(Rational64::from_integer(n as i64)),
            decay_bound: self.decay_bound,
            k: self.k,
        })
    }

    /// Sampled check of the bound and of the declared period on a `samples x samples` lattice.
    pub fn verify(&self, x_range: f64, samples: usize) -> Result<()> {
        let y_range = self.decay_bound.max(1.0);
        for i in 0..samples {
            for j in 0..samples {
                let x = -x_range + 2.0 * x_range * i as f64 / samples as f64;
                let y = -y_range + 2.0 * y_range * j as f64 / samples as f64;
                let v = self.eval(x, y);
                if v.norm() > self.k {
                    return Err(Error::NotContractive { sup: v.norm(), bound: self.k });
                }
                if let Period::Periodic(p) = self.period {
                    let shift = 2.0 * PI * *p.numer() as f64 / *p.denom() as f64;
                    if (self.eval(x + shift, y) - v).norm() > 1e-12 {
                        return Err(Error::PeriodMismatch {
                            level: 0,
                            period: p.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Compatible residues `r_i mod n_i` along a chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfiniteAddress {
    chain: DivisibilityChain,
    residues: Vec<u64>,
}

impl ProfiniteAddress {
    pub fn new(chain: DivisibilityChain, residues: Vec<u64>) -> Result<Self> {
        if residues.len() != chain.len() {
            return Err(Error::InvalidArgument("one residue per chain entry required".into()));
        }
        for (i, (&r, &n)) in residues.iter().zip(chain.entries()).enumerate() {
            if r >= n {
                return Err(Error::InvalidArgument(format!("residue {r} not reduced mod {n}")));
            }
            if i > 0 && r % chain.entries()[i - 1] != residues[i - 1] {
                return Err(Error::InvalidArgument(format!("residue {r} mod {n} is incompatible")));
            }
        }
        Ok(ProfiniteAddress { chain, residues })
    }

    /// Truncation of the integer `a`.
    pub fn from_integer(chain: DivisibilityChain, a: i64) -> Self {
        let residues = chain.entries().iter().map(|&n| a.rem_euclid(n as i64) as u64).collect();
        ProfiniteAddress { chain, residues }
    }

    pub fn chain(&self) -> &DivisibilityChain {
        &self.chain
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    /// Plane coordinate `exp(i (z + 2 pi r_i) / n_i)` of the leaf point `z` at chain index `i`.
    pub fn level_coordinate(&self, z: Complex64, index: usize) -> Complex64 {
        let n = self.chain.entries()[index] as f64;
        let shifted = z + 2.0 * PI * self.residues[index] as f64;
        (Complex64::i() * shifted / n).exp()
    }
}

/// Leaf coordinates `(x, y)` of the plane point `w` at level `n`.
pub fn leaf_coordinates(w: Complex64, n: u64) -> (f64, f64) {
    let n = n as f64;
    (n * w.arg(), -n * w.norm().ln())
}

/// Plane coefficient at level `n` of a `2 pi n`-periodic cylinder coefficient.
pub fn plane_value(mu: &CylinderFn, n: u64, w: Complex64) -> Complex64 {
    let r = w.norm();
    if r == 0.0 || !r.is_finite() {
        return Complex64::new(0.0, 0.0);
    }
    let (x, y) = leaf_coordinates(w, n);
    let v = mu(x, y);
    if v.norm() < SUPPORT_EPSILON {
        return Complex64::new(0.0, 0.0);
    }
    let phase = w / r;
    -(phase * phase) * v
}

/// `mu_n(w) = -(w/|w|)^2 mu(n arg w, -n ln|w|)`, sampled on `spec`.
pub fn cylinder_to_plane(mu: &CylinderCoefficient, n: u64, spec: GridSpec) -> Result<BeltramiField> {
    match mu.period() {
        Period::LimitPeriodic => return Err(Error::NotPeriodic),
        Period::Periodic(p) if !mu.is_periodic_at(n) => {
            return Err(Error::PeriodMismatch {
                level: n,
                period: p.to_string(),
            })
        }
        _ => {}
    }
    let f = mu.evaluator().clone();
    if mu.k().is_zero() {
        return Ok(BeltramiField::zero(spec));
    }
    BeltramiField::from_fn_with_bound(spec, move |w| plane_value(&f, n, w), mu.k())
}

/// Grid whose inner half contains the level-`n` support annulus `|w| <= exp(Y/n)`.
pub fn annulus_grid(decay_bound: f64, n: u64, size: usize) -> Result<GridSpec> {
    let outer = (decay_bound / n as f64).exp();
    GridSpec::square(2.0 * outer * 1.02, size)
}
