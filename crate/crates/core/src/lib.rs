//! Estimators for nonparametric mixtures and mixed regression models with
//! convolutional Gaussian error densities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod io;
pub mod kde;
pub mod measures;
pub mod mixfit;
pub mod regfit;
pub mod synth;

pub use error::{Error, Result};
