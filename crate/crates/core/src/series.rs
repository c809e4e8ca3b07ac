//! Finite Pontryagin series with exact rational modes.
//!
//! A series `g(z) = sum_q g_q exp(2 pi i q.z)` is stored as a map from
//! reduced rational mode vectors to complex coefficients. Level membership
//! (`L q` integral) is decided exactly on the rationals; only coefficients
//! and evaluation use floating point.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn checked_lcm(a: u64, b: u64) -> Result<u64> {
    let g = a.gcd(&b);
    (a / g).checked_mul(b).ok_or(Error::Overflow("lcm"))
}

pub(crate) fn ratio_to_f64(r: &Rational64) -> f64 {
    r.to_f64().unwrap_or_else(|| *r.numer() as f64 / *r.denom() as f64)
}

/// A mode vector `q` in `Q^n`, every entry in lowest terms with positive denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RationalMode(Vec<Rational64>);

impl RationalMode {
    pub fn new(entries: Vec<Rational64>) -> Self {
        // Ratio::new already reduces and normalizes the sign of the denominator.
        RationalMode(entries)
    }

    /// Build from `(numerator, denominator)` pairs.
    pub fn from_pairs(pairs: &[(i64, i64)]) -> Result<Self> {
        pairs
            .iter()
            .map(|&(n, d)| {
                if d == 0 {
                    Err(Error::InvalidArgument("zero denominator in mode".into()))
                } else {
                    Ok(Rational64::new(n, d))
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(RationalMode)
    }

    pub fn integer(entries: &[i64]) -> Self {
        RationalMode(entries.iter().map(|&k| Rational64::from_integer(k)).collect())
    }

    pub fn zero(dimension: usize) -> Self {
        RationalMode(vec![Rational64::zero(); dimension])
    }

    pub fn entries(&self) -> &[Rational64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    /// lcm of the denominators: the smallest `L` with `L q` integral.
    pub fn level(&self) -> Result<u64> {
        self.0
            .iter()
            .try_fold(1u64, |acc, r| checked_lcm(acc, *r.denom() as u64))
    }

    /// True when `L q` is an integer vector.
    pub fn in_level(&self, level: u64) -> bool {
        self.0.iter().all(|r| (level as i64) % *r.denom() == 0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|r| ratio_to_f64(&r.abs())).sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(ratio_to_f64).collect()
    }

    pub fn scaled(&self, a: Rational64) -> Self {
        RationalMode(self.0.iter().map(|r| r * a).collect())
    }

    /// `L q` as an integer vector; `None` when `L q` is not integral.
    pub fn integer_vector(&self, level: u64) -> Option<Vec<i64>> {
        let l = Rational64::from_integer(level as i64);
        self.0
            .iter()
            .map(|r| {
                let v = r * l;
                v.is_integer().then(|| v.to_integer())
            })
            .collect()
    }

    /// `sum_j omega_j q_j`.
    pub fn dot(&self, omega: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(omega)
            .map(|(r, w)| w * (*r.numer() as f64) / (*r.denom() as f64))
            .sum()
    }
}

impl fmt::Display for RationalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, ")")
    }
}

/// A finite divisibility chain `n_1 | n_2 | ... | n_I`, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct DivisibilityChain(Vec<u64>);

impl DivisibilityChain {
    pub fn new(entries: Vec<u64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("empty divisibility chain".into()));
        }
        if entries[0] == 0 {
            return Err(Error::InvalidArgument("chain entries must be positive".into()));
        }
        for w in entries.windows(2) {
            if w[1] <= w[0] || w[1] % w[0] != 0 {
                return Err(Error::InvalidArgument(format!(
                    "chain entries must strictly increase by divisibility: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(DivisibilityChain(entries))
    }

    /// `(1!, 2!, ..., k!)`; note `1! = 1` and `2! = 2` keep the chain strict.
    pub fn factorial(k: usize) -> Result<Self> {
        let mut entries = Vec::with_capacity(k);
        let mut f: u64 = 1;
        for i in 1..=k as u64 {
            f = f.checked_mul(i).ok_or(Error::Overflow("factorial chain"))?;
            entries.push(f);
        }
        Self::new(entries)
    }

    /// `(1, r, r^2, ..., r^(k-1))`.
    pub fn geometric(ratio: u64, k: usize) -> Result<Self> {
        let mut entries = Vec::with_capacity(k);
        let mut v: u64 = 1;
        for _ in 0..k {
            entries.push(v);
            v = v.checked_mul(ratio).ok_or(Error::Overflow("geometric chain"))?;
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> u64 {
        self.0[0]
    }

    pub fn last(&self) -> u64 {
        *self.0.last().expect("non-empty chain")
    }

    pub fn resolves(&self, level: u64) -> bool {
        self.last() % level == 0
    }
}

impl TryFrom<Vec<u64>> for DivisibilityChain {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        DivisibilityChain::new(v)
    }
}

impl From<DivisibilityChain> for Vec<u64> {
    fn from(c: DivisibilityChain) -> Self {
        c.0
    }
}

/// Bracketing pair for the strip sup norm `sup_{|Im z|_inf < rho} |g(z)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripNormEstimate {
    pub rho: f64,
    pub sampled_lower: f64,
    pub majorant_upper: f64,
}

/// Trigonometric polynomial with rational modes.
#[derive(Debug, Clone, PartialEq)]
pub struct PontryaginSeries {
    dimension: usize,
    terms: BTreeMap<RationalMode, Complex64>,
}

impl PontryaginSeries {
    pub fn zero(dimension: usize) -> Self {
        PontryaginSeries {
            dimension,
            terms: BTreeMap::new(),
        }
    }

    /// Sum the given terms; repeated modes accumulate and exact zeros are dropped.
    pub fn from_terms<I>(dimension: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (RationalMode, Complex64)>,
    {
        if dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let mut s = Self::zero(dimension);
        for (q, c) in terms {
            s.add_term(q, c)?;
        }
        Ok(s)
    }

    pub fn add_term(&mut self, mode: RationalMode, coeff: Complex64) -> Result<()> {
        if mode.dimension() != self.dimension {
            return Err(Error::InvalidArgument(format!(
                "mode {mode} has dimension {}, series has {}",
                mode.dimension(),
                self.dimension
            )));
        }
        match self.terms.entry(mode) {
            Entry::Vacant(v) => {
                if !coeff.is_zero() {
                    v.insert(coeff);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&RationalMode, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, mode: &RationalMode) -> Complex64 {
        self.terms.get(mode).copied().unwrap_or_default()
    }

    /// lcm over modes of their levels; 1 for the zero series.
    pub fn series_level(&self) -> Result<u64> {
        self.terms
            .keys()
            .try_fold(1u64, |acc, q| checked_lcm(acc, q.level()?))
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        debug_assert_eq!(z.len(), self.dimension);
        self.terms
            .iter()
            .map(|(q, c)| c * character(q, z))
            .sum()
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let terms = if a.is_zero() {
            BTreeMap::new()
        } else {
            self.terms
                .iter()
                .map(|(q, c)| (q.clone(), c * a))
                .filter(|(_, c)| !c.is_zero())
                .collect()
        };
        PontryaginSeries {
            dimension: self.dimension,
            terms,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (q, c) in &other.terms {
            out.add_term(q.clone(), *c)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Keep exactly the modes with `L q` integral.
    pub fn level_project(&self, level: u64) -> Self {
        PontryaginSeries {
            dimension: self.dimension,
            terms: self
                .terms
                .iter()
                .filter(|(q, _)| q.in_level(level))
                .map(|(q, c)| (q.clone(), *c))
                .collect(),
        }
    }

    /// `sum_q |g_q| exp(2 pi rho |q|_1)`, exact per mode for the sup-norm strip.
    pub fn majorant(&self, rho: f64) -> f64 {
        self.terms
            .iter()
            .map(|(q, c)| c.norm() * (2.0 * PI * rho * q.l1_norm()).exp())
            .fold(0.0, |a, b| a + b)
    }

    pub fn strip_norm(&self, rho: f64, samples_per_period: usize) -> Result<StripNormEstimate> {
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        if samples_per_period == 0 {
            return Err(Error::InvalidArgument("samples_per_period must be positive".into()));
        }
        let majorant_upper = self.majorant(rho);
        if self.is_empty() {
            return Ok(StripNormEstimate {
                rho,
                sampled_lower: 0.0,
                majorant_upper,
            });
        }
        let period = self.series_level()? as f64;
        let rho_in = rho * (1.0 - 1e-9);
        let n = self.dimension;
        let m = samples_per_period;
        let total = m.checked_pow(n as u32).ok_or(Error::Overflow("sample count"))?;
        let mut best: f64 = 0.0;
        let mut z = vec![Complex64::zero(); n];
        for corner in 0..(1usize << n) {
            for idx in 0..total {
                let mut rem = idx;
                for (j, zj) in z.iter_mut().enumerate() {
                    let xi = rem % m;
                    rem /= m;
                    let y = if corner >> j & 1 == 1 { rho_in } else { -rho_in };
                    *zj = Complex64::new(period * xi as f64 / m as f64, y);
                }
                best = best.max(self.eval(&z).norm());
            }
        }
        Ok(StripNormEstimate {
            rho,
            sampled_lower: best.min(majorant_upper),
            majorant_upper,
        })
    }

    /// Chain-weighted norm `n_1^(2n+1) U(g_{n_1}) + sum_{i>1} n_i^(2n+1) U(g_{n_i} - g_{n_{i-1}})`
    /// with `U` the strip majorant.
    pub fn s_norm(&self, chain: &DivisibilityChain, rho: f64) -> Result<f64> {
        Ok(self.s_norm_terms(chain, rho)?.iter().fold(0.0, |a, b| a + b))
    }

    /// The individual weighted increments of [`Self::s_norm`], one per chain entry.
    pub fn s_norm_terms(&self, chain: &DivisibilityChain, rho: f64) -> Result<Vec<f64>> {
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        let level = self.series_level()?;
        if !chain.resolves(level) {
            return Err(Error::ChainDoesNotResolve {
                series_level: level,
                last: chain.last(),
            });
        }
        let exponent = 2 * self.dimension as i32 + 1;
        let mut prev = PontryaginSeries::zero(self.dimension);
        let mut out = Vec::with_capacity(chain.len());
        for &n in chain.entries() {
            let cur = self.level_project(n);
            let inc = cur.sub(&prev)?;
            out.push((n as f64).powi(exponent) * inc.majorant(rho));
            prev = cur;
        }
        Ok(out)
    }

    /// `g o h_a`: every mode `q` becomes `a q`.
    pub fn homothety_conjugate(&self, a: Rational64) -> Result<Self> {
        if a.is_zero() {
            return Err(Error::InvalidArgument("homothety factor must be nonzero".into()));
        }
        Ok(PontryaginSeries {
            dimension: self.dimension,
            terms: self
                .terms
                .iter()
                .map(|(q, c)| (q.scaled(a), *c))
                .collect(),
        })
    }

    pub fn zero_mode_coefficient(&self) -> Complex64 {
        self.coefficient(&RationalMode::zero(self.dimension))
    }
}

/// `exp(2 pi i q.z)`.
pub fn character(q: &RationalMode, z: &[Complex64]) -> Complex64 {
    let phase: Complex64 = q
        .entries()
        .iter()
        .zip(z)
        .map(|(r, zj)| zj * ratio_to_f64(r))
        .sum();
    (Complex64::i() * 2.0 * PI * phase).exp()
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    mode: Vec<[String; 2]>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SeriesDoc {
    dimension: usize,
    terms: Vec<TermDoc>,
}

impl Serialize for PontryaginSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesDoc {
            dimension: self.dimension,
            terms: self
                .terms
                .iter()
                .map(|(q, c)| TermDoc {
                    mode: q
                        .entries()
                        .iter()
                        .map(|r| [r.numer().to_string(), r.denom().to_string()])
                        .collect(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PontryaginSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = SeriesDoc::deserialize(d)?;
        let terms = doc
            .terms
            .into_iter()
            .map(|t| {
                let entries = t
                    .mode
                    .iter()
                    .map(|[n, den]| {
                        let n: i64 = n.parse().map_err(D::Error::custom)?;
                        let den: i64 = den.parse().map_err(D::Error::custom)?;
                        if den == 0 {
                            return Err(D::Error::custom("zero denominator"));
                        }
                        Ok(Rational64::new(n, den))
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                Ok((RationalMode::new(entries), Complex64::new(t.re, t.im)))
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        PontryaginSeries::from_terms(doc.dimension, terms).map_err(D::Error::custom)
    }
}

/// `1/k` as a rational, for building factorial-level modes.
pub fn unit_fraction(k: i64) -> Rational64 {
    Rational64::one() / Rational64::from_integer(k)
}
