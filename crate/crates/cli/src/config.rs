use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use solenoid_core::series::PontryaginSeries;

/// Parse a TOML config, or take the defaults when no path is given.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).map_err(|e| anyhow::anyhow!("config {}: {e}", path.display()))
}

/// Flag overrides shared by every subcommand.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeriesSource {
    /// Modes and coefficients written out.
    Explicit { series: PontryaginSeries },
    /// `sum_{i<=terms} (1/i!) cos(2 pi (z_1+...+z_n)/i!)`.
    Factorial { dimension: usize, terms: usize },
    /// Factorial modes with coefficients decaying fast enough for a finite S-norm.
    DecayingFactorial { dimension: usize, terms: usize },
}

impl SeriesSource {
    pub fn build(&self) -> Result<PontryaginSeries> {
        use solenoid_core::counterexamples::{decaying_factorial_series, diophantine_counterexample};
        Ok(match self {
            SeriesSource::Explicit { series } => series.clone(),
            SeriesSource::Factorial { dimension, terms } => diophantine_counterexample(*dimension, *terms)?,
            SeriesSource::DecayingFactorial { dimension, terms } => decaying_factorial_series(*dimension, *terms)?,
        })
    }
}

fn single_mode() -> SeriesSource {
    let text = r#"{"dimension": 2, "terms": [{"mode": [["1","2"],["1","1"]], "re": 1.0, "im": 0.0}]}"#;
    SeriesSource::Explicit {
        series: serde_json::from_str(text).expect("valid literal"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiophantineConfig {
    pub omega: Vec<f64>,
    pub gamma: f64,
    pub exponent: u32,
    /// Lattice radius of the certificate scan.
    pub radius: u64,
    pub series: SeriesSource,
    pub chain: Vec<u64>,
    pub rho: f64,
    pub delta: f64,
    /// Random complex sample points for the derivative residual.
    pub samples: usize,
    pub residual_tolerance: f64,
    pub window: usize,
    pub relative_threshold: f64,
    pub seed: u64,
}

impl Default for DiophantineConfig {
    fn default() -> Self {
        DiophantineConfig {
            omega: vec![1.0, 2f64.sqrt()],
            gamma: 1e-3,
            exponent: 2,
            radius: 40,
            series: single_mode(),
            chain: vec![1, 2, 4, 8],
            rho: 0.1,
            delta: 0.05,
            samples: 1000,
            residual_tolerance: 1e-10,
            window: 3,
            relative_threshold: 0.1,
            seed: 0,
        }
    }
}

impl DiophantineConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.tol {
            self.residual_tolerance = t;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SNormConfig {
    pub series: SeriesSource,
    pub chain: Vec<u64>,
    pub rho: f64,
    pub samples_per_period: usize,
}

impl Default for SNormConfig {
    fn default() -> Self {
        SNormConfig {
            series: SeriesSource::DecayingFactorial { dimension: 1, terms: 4 },
            chain: vec![1, 2, 6, 24],
            rho: 0.1,
            samples_per_period: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlanarCoefficient {
    /// `k (z / zbar)` on the unit disk; exact solution `z |z|^(2k/(1-k))` inside, `z` outside.
    Radial { k: f64 },
    /// `k (1 - |z|^2)^2 (a + b z)` on the unit disk, scaled so the sup is `k`.
    Smooth { k: f64, a: [f64; 2], b: [f64; 2] },
    /// Constant `value` on the disk `|z| < radius`.
    Disk { value: [f64; 2], radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeltramiConfig {
    pub coefficient: PlanarCoefficient,
    pub half_width: f64,
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Exponent of the distortion diagnostics.
    pub p: f64,
}

impl Default for BeltramiConfig {
    fn default() -> Self {
        BeltramiConfig {
            coefficient: PlanarCoefficient::Radial { k: 1.0 / 3.0 },
            half_width: 2.0,
            grid: 512,
            tol: 1e-10,
            max_iter: 500,
            p: 4.0,
        }
    }
}

impl BeltramiConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.grid {
            self.grid = n;
        }
        if let Some(t) = o.tol {
            self.tol = t;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TowerFamily {
    /// A `2 pi`-periodic coefficient repeated at every level.
    Stationary,
    /// Increments with `n_{i+1} ||dmu_i|| = weight ratio^i`.
    Geometric,
    /// Increments with `n_{i+1} ||dmu_i|| = weight`.
    Constant,
    /// The factorial counterexample coefficient truncated level by level.
    Factorial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointSet {
    pub x_count: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub y_count: usize,
}

impl Default for PointSet {
    fn default() -> Self {
        PointSet {
            x_count: 256,
            y_min: -0.5,
            y_max: 0.5,
            y_count: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TowerConfig {
    pub family: TowerFamily,
    /// Defaults to `1, 2, 4, 8, 16`, or `1, 2, 6, 24` for the factorial family.
    pub chain: Option<Vec<u64>>,
    /// Defaults to 256, or 512 for the factorial family.
    pub grid: Option<usize>,
    pub j_index: usize,
    pub points: PointSet,
    pub weight: f64,
    pub ratio: f64,
    pub s_norm_threshold: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub absolute_tolerance: f64,
    pub max_rate: f64,
    pub affine_tolerance: f64,
}

impl Default for TowerConfig {
    fn default() -> Self {
        TowerConfig {
            family: TowerFamily::Geometric,
            chain: None,
            grid: None,
            j_index: 0,
            points: PointSet::default(),
            weight: 0.1,
            ratio: 0.5,
            s_norm_threshold: 1e3,
            tol: 1e-10,
            max_iter: 500,
            absolute_tolerance: 1e-12,
            max_rate: 0.8,
            affine_tolerance: 5e-2,
        }
    }
}

impl TowerConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.grid {
            self.grid = Some(n);
        }
        if let Some(t) = o.tol {
            self.tol = t;
        }
        if self.chain.is_none() {
            self.chain = Some(match self.family {
                TowerFamily::Factorial => vec![1, 2, 6, 24],
                _ => vec![1, 2, 4, 8, 16],
            });
        }
        if self.grid.is_none() {
            self.grid = Some(match self.family {
                TowerFamily::Factorial => 512,
                _ => 256,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxGrid {
    pub half_width_x: f64,
    pub half_width_y: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub terms: usize,
    pub grid: BoxGrid,
    /// Finite-difference step of the identity check.
    pub h: f64,
    pub identity_tolerance: f64,
    pub bound_samples: usize,
    pub bound_margin: f64,
    pub tail_from: usize,
    pub tail_to: usize,
    pub fixed_x: f64,
    pub fixed_threshold: f64,
    /// Moving tails must stay above `moving_fraction / 2e` for every `N <= moving_until`.
    pub moving_until: usize,
    pub moving_fraction: f64,
    pub tail_samples: usize,
    pub seed: u64,
}

impl Default for BoxGrid {
    fn default() -> Self {
        BoxGrid {
            half_width_x: 10.0 * PI,
            half_width_y: 5.0,
            n: 256,
        }
    }
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            terms: 20,
            grid: BoxGrid::default(),
            h: 1e-5,
            identity_tolerance: 1e-6,
            bound_samples: 100_000,
            bound_margin: 1e-9,
            tail_from: 1,
            tail_to: 20,
            fixed_x: 1.0,
            fixed_threshold: 1e-12,
            moving_until: 12,
            moving_fraction: 0.9,
            tail_samples: 1024,
            seed: 0,
        }
    }
}

impl CounterexampleConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.grid {
            self.grid.n = n;
        }
        if let Some(t) = o.tol {
            self.identity_tolerance = t;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FarCoefficient {
    /// `amplitude |z|^2/(1+|z|^2) exp(i sin(x/2))`: bounded, never compactly supported.
    Ripple { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub coefficient: FarCoefficient,
    pub k: f64,
    pub radius: f64,
    pub blend: f64,
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub check_half_width: f64,
    pub check_grid: usize,
    pub residual_threshold: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            coefficient: FarCoefficient::Ripple { amplitude: 0.3 },
            k: 0.3,
            radius: 1.5,
            blend: 0.5,
            grid: 512,
            tol: 1e-10,
            max_iter: 500,
            check_half_width: 4.0,
            check_grid: 256,
            residual_threshold: 5e-2,
        }
    }
}

impl SplitConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.grid {
            self.grid = n;
        }
        if let Some(t) = o.tol {
            self.tol = t;
        }
    }
}

pub fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        bail!("{name} must be a positive number, got {v}");
    }
    Ok(())
}
