//! Ground-truth models, exact density oracles, and seeded samplers.

mod dataset;
mod functions;
mod mixing;
mod models;
mod sample;

pub use dataset::{read_responses_csv, responses_to_csv, write_responses_csv, Dataset};
pub use functions::{smooth_step, RegressionFn};
pub use mixing::{MixingSpec, SmoothBase};
pub use models::{MarginalSpec, MixedRegressionModel, VanillaMixtureModel};
pub use sample::{rng_from_seed, sample_mixed_regression, sample_vanilla_mixture};
