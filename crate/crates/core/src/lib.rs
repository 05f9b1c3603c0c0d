//! Element-wise matrix sketching and sparse PCA from sketches.
//!
//! A data matrix is replaced by a sparse sketch built by biased entry
//! sampling (hybrid ℓ1/ℓ2, uniform, or leverage-score probabilities) or by
//! thresholding; sparse principal components are then computed from the
//! sketch and scored against the original data.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod matrix;
pub mod mixing;
pub mod rng;
pub mod sketch;
pub mod spca;
pub mod spectral;

pub use error::{Error, Result};
pub use matrix::{Entry, Matrix};
pub use spectral::{norms, top_singular_triplets, SpectralSummary, SingularTriplet, TruncatedSvd};
