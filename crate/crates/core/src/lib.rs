//! Asymmetric mutual information: bandwidth-free density estimation, copula-based
//! information estimators, and the tests built on them.

pub mod copula;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod io;
pub mod rng;
pub mod sample;
pub mod sce;
pub mod synth;
pub mod warning;

pub use error::{AmiError, Result};
pub use sample::Sample;
pub use warning::Warning;
