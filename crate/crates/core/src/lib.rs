//! Limit-periodic small-divisor solver and solenoidal Beltrami tower.
//!
//! * [`series`]: exact-mode Pontryagin series, level projections, strip and chain norms.
//! * [`diophantine`]: certification of frequency vectors and the mode-wise cohomological solver.
//! * [`beltrami`]: planar normal solutions via Beurling/Cauchy transforms.
//! * [`tower`]: cylinder coefficients, periodic families, pullbacks and the tower run.
//! * [`counterexamples`]: closed-form evaluators for the two divergence witnesses.

pub mod beltrami;
pub mod counterexamples;
pub mod diophantine;
pub mod error;
pub mod series;
pub mod tower;

pub use error::{Error, Result};
pub use num_complex::Complex64;
