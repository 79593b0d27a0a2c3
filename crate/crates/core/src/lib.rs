//! ECG delineation by keypoint heatmap estimation.
//!
//! The pipeline detects R peaks, cuts the record into R-R intervals,
//! resamples each to a fixed length, predicts one probability heatmap per
//! fiducial point with a stacked hourglass network, and thresholds each
//! heatmap's peak to decide presence. Wavelet and peak-search delineators
//! are included for comparison, along with a synthetic ECG generator that
//! supplies exact ground truth.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod error;
pub mod eval;
pub mod filter;
pub mod heatmap;
pub mod io;
pub mod net;
pub mod pipeline;
pub mod qrs;
pub mod segment;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    DelineationResult, FiducialAnnotation, IntervalDelineation, KeypointKind, KeypointPrediction, TimeSeriesRecord,
    Wave, NUM_KEYPOINTS,
};
