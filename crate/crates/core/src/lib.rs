//! Composite kernel densities built from weighted observations, exact
//! decomposition by categorical labels, and a Pearson equality-of-proportions
//! test on quantile shares.
//!
//! The crate is organized bottom-up:
//!
//! - [`numerics`]: special functions, bracketed root finding, adaptive
//!   quadrature. No external math dependencies.
//! - [`kernels`]: kernel families (Normal, knotted Normal, Gumbel, Weibull)
//!   parameterized by mode and bandwidth.
//! - [`bandwidth`]: Silverman, sample-standard-deviation, and fixed rules.
//! - [`density`]: composite densities, decomposition, reaggregation,
//!   quantile inversion.
//! - [`inference`]: quantile share matrices and the chi-square test.
//! - [`data`]: CSV ingestion, category binning, vote weighting.

pub mod bandwidth;
pub mod data;
pub mod density;
pub mod error;
pub mod inference;
pub mod kernels;
pub mod numerics;

pub use bandwidth::BandwidthRule;
pub use data::{CategoryBinning, DatasetSchema, WeightScheme};
pub use density::{CompositeDensity, Decomposition, KernelScheme, Observation, WeightedKernel};
pub use error::{Error, Result};
pub use inference::{ShareMatrix, TestResult};
pub use kernels::{KernelFamily, KernelSpec};
pub use numerics::Tolerance;
