//! Cylinder coefficients, periodic families along a divisibility chain, coefficient
//! pullbacks, the tower evaluation table and the compact-support split.
//!
//! Levels use the convention `pi_n(nu(z)) = exp(i z / n)`: a leaf point `x + i y` sits at
//! `w = exp(i (x + i y) / n)` in the level-`n` plane, so `x = n arg w`, `y = -n ln|w|`.

mod cylinder;
mod family;
mod pullback;
mod run;
mod split;

pub use cylinder::{
    annulus_grid, cylinder_to_plane, leaf_coordinates, plane_value, CylinderCoefficient, CylinderFn, Period, ProfiniteAddress,
    SUPPORT_EPSILON,
};
pub use family::{bump_increment_family, leaf_sample_points, mu_s_norm, BumpProfile, PeriodicBeltramiFamily};
pub use pullback::{coefficient_pullback, pullback_value, relative_coefficient, relative_value};
pub use run::{
    affine_renormalize, affine_renormalize_run, cauchy_diagnostics, leaf_value, tower_solve, AffineReport, CauchyOptions,
    CauchyReport, CauchyVerdict, LevelSolve, TowerConstants, TowerRun,
};
pub use split::{mobius_support_split, split_solve, MobiusSplit, OuterMap, SplitCutoff, SplitSolution};
