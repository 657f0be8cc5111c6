//! Stereo confidence from disparity plane sweeps.
//!
//! Any stereo matcher is run on the left image against horizontally
//! shifted copies of the right image. An ideal matcher answers each shift
//! `k` with the zero-shift disparity plus `k`; how far the real answers
//! stray from that ramp measures how ambiguous each pixel's match is.
//!
//! Pipeline: [`sweep::run_sweep`] → [`sweep::build_target_volume`] →
//! [`confidence::unreliability`] → [`confidence::confidence_from_unreliability`],
//! bundled as [`confidence::sweep_confidence`]. [`eval`] scores confidence
//! maps by sparsification AUC.

pub mod cli;
pub mod config;
pub mod confidence;
pub mod error;
pub mod eval;
pub mod imagery;
pub mod matcher;
pub mod parallel;
pub mod raster;
pub mod sweep;
pub mod synth;

pub use config::RunConfig;
pub use confidence::{
    confidence_from_unreliability, sweep_confidence, unreliability, ConfidenceParams,
    SweepConfidence,
};
pub use error::{Error, ErrorKind, Result};
pub use eval::{
    baseline_msm, ground_truth_confidence, optimal_auc, sparsification_auc, EvalParams, EvalReport,
};
pub use imagery::{load_disparity, load_image, save_disparity, DisparityFormat};
pub use matcher::{CensusMatcher, ExternalMatcher, ExternalMatcherSpec, MatcherConfig, StereoMatcher};
pub use raster::{ConfidenceMap, DisparityMap, RasterImage, ScalarMap};
pub use sweep::{build_target_volume, run_sweep, shift_right_image, DisparityVolume, SweepSpec};
