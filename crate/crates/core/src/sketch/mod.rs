//! Element-wise sketches: sampling distributions, the sampler, thresholding,
//! and spectral deviation.

pub mod alias;
mod deviation;
mod distribution;
mod sampler;
mod threshold;

pub use deviation::{gram_difference_norm, spectral_deviation, SpectralDeviation};
pub use distribution::{
    hybrid_probabilities, leverage_probabilities, leverage_scores, uniform_nonzero_probabilities,
    uniform_probabilities, DistributionDescriptor, DistributionKind, LeverageScores, SamplingDistribution,
    SupportKind,
};
pub use sampler::{
    draw_sequence, sample_sketch, sample_sketch_chunked, sketch_from_draws, SketchResult, SketchSummary,
};
pub use threshold::{select_threshold, threshold_sketch, ThresholdChoice};
