//! Normal solutions of the planar Beltrami equation `f_zbar = mu f_z` for compactly
//! supported `mu`, on a uniform grid with spectral singular integrals.

mod grid;
mod solver;
mod transforms;

pub use grid::{ComplexGrid, Dtype, GridSpec};
pub use solver::{
    beltrami_residual, distortion_from_nodes, distortion_report, normalize_013, residual_from_nodes, solve_normal,
    BeltramiField, DistortionReport, NormalSolutionField, PointFn, ResidualReport, SolverParams,
};
pub use transforms::{beurling_transform, cauchy_direct, cauchy_transform, BeurlingOperator, CauchyOperator, Multipole};
