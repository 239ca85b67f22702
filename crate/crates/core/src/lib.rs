//! Dataset preparation and post-recognition tooling for lip-reading pipelines.
//!
//! The crate is organised along the pipeline:
//!
//! - [`annotations`]: per-frame face/lip boxes and detection statistics.
//! - [`roi`]: face-size-normalised, lip-centred square crops at several scales.
//! - [`imaging`]: pixel-grid helpers (bilinear resize, raw/PNG frame IO).
//! - [`augment`]: speed perturbation by frame resampling and seeded per-clip
//!   augmentations.
//! - [`scoring`]: character error rate.
//! - [`transcript`]: the shared `<utt_id>\t<text>` transcript file format.
//! - [`rover`]: word transition network alignment and voting.
//! - [`config`]: pipeline configuration with the default constants.

pub mod annotations;
pub mod augment;
pub mod config;
pub mod imaging;
pub mod roi;
pub mod rover;
pub mod scoring;
pub mod transcript;

pub use annotations::{BBox, DetectionRates, FrameAnnotation, SpeakerSegment};
pub use roi::{CropPlan, ScaleFactor, SegmentDisposition};
pub use rover::{Hypothesis, VoteParams, WordTransitionNetwork};
pub use scoring::{CerReport, TokenSeq};

/// Formats a scale factor or perturbation rate for use in file names:
/// `1` becomes `1.0`, `0.9` stays `0.9`.
pub fn format_factor(value: f64) -> String {
    if value.fract() == 0.0 {
        format!("{value:.1}")
    } else {
        format!("{value}")
    }
}
