//! Pareto-depth (non-dominated) sorting, exact and approximate.
//!
//! Exact depths come from longest chains in the componentwise order. The
//! approximate ranker estimates the sample density on a grid and solves the
//! upwind scheme for `U_{x_1} ··· U_{x_d} = f`, whose solution is the
//! continuum limit of the rescaled depth.

pub mod approx_rank;
pub mod density;
pub mod error;
pub mod evaluation;
pub mod exact_sort;
pub mod grid;
pub mod hj_solver;
pub mod points;

pub use approx_rank::{rank_points_pde, rank_points_subset, HRule, PdeRanker, RankerConfig};
pub use density::{check_domain, fit_domain, histogram_density, subsample, SubsampleSpec};
pub use error::{Error, Result};
pub use exact_sort::{
    longest_chain_depths, nondominated_sort_2d, pareto_fronts, sort_exact, DepthVector, SortMethod,
};
pub use grid::{GridField, GridSpec};
pub use hj_solver::{
    local_solve, residual_report, solve_scheme, NodeSolveConfig, NodeSolveMethod,
    SchemeResidualReport,
};
pub use points::{pareto_leq, project, PointCloud};
