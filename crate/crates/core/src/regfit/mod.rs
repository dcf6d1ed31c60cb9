//! Mixed-regression estimation: mixture fit at a point of separation,
//! per-covariate minimum-distance estimation of the curve values, and
//! evaluation against a known model.

mod eval;
mod fit;
mod mde;
mod separation;

pub use eval::{evaluate_regression_fit, hausdorff, permutations, RegressionEval};
pub use fit::{fit_mixed_regression, pooled_error_density, ErrorModel, RegressionConfig, RegressionFit};
pub use mde::{mde_at_x, mde_general_at_x, mde_objective, MdeConfig, MdeMode, MdeResult, MAX_GRID_COMPONENTS};
pub use separation::{find_separation_point, gap_clusters, SeparationPoint, SeparationProfile, SEPARATION_GRID};
