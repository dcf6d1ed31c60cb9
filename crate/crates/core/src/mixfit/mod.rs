//! Project-smooth-denoise estimation of nonparametric mixture components.

mod components;
mod denoise;
mod eval;
mod l1lp;
mod pipeline;
mod projection;

pub use components::{estimate_components, FitDiagnostics, MixtureFit, DEGENERATE_MASS};
pub use denoise::{smooth, smoothing_grid, threshold_partition, voronoi_extend};
pub use eval::{
    ascending_order, check_outlier_mass, evaluate_mixture_fit, l1_between, off_support_excess, outlier_mass,
    MixtureEval, OutlierCheck,
};
pub use pipeline::{
    fit_mixture_density, fit_vanilla_mixture, plug_in_d, response_grid, DenoiseConfig, DenoiseSchedule, MixtureConfig,
};
pub use projection::{project_to_gaussian_mixture, Projection, ProjectionConfig, DEFAULT_ATOMS};
