//! Discrete mixing measures, grid-sampled densities, and the distances
//! between them.

mod discrete;
mod gaussian;
mod grid;
mod intervals;
pub mod lp;
mod wasserstein;

pub use discrete::{DiscreteMeasure, PiecewiseMeasure, UniformPiece, NORMALIZATION_TOL};
pub(crate) use gaussian::gaussian_mixture_cdf;
pub use gaussian::{convolve_gaussian, convolve_gaussian_piecewise, covering_grid, normal_cdf, normal_pdf};
pub use grid::{density_mean, density_mean_with_tol, l1_distance, GridDensity, GridSpec, DENSITY_TOL};
pub(crate) use intervals::unbounded;
pub use intervals::{is_partition_of_line, Cell, Interval, IntervalSet};
pub use wasserstein::{wasserstein1, wasserstein1_lp_oracle, wasserstein1_piecewise, LP_ORACLE_MAX_ATOMS};
