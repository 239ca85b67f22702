//! Training-time clip transforms.
//!
//! Speed perturbation resamples frame indices; the four visual augmentations
//! (rotation, horizontal flip, grayscale, colour jitter) are drawn once per
//! clip from a stream keyed by `(seed, clip_id)` and applied identically to
//! every frame so motion stays temporally consistent.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::imaging::{sample_zero_fill, to_u8};

pub const DEFAULT_PERTURB_RATES: [f64; 3] = [0.9, 1.0, 1.1];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AugmentError {
    #[error("perturbation rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("`{name}` probability must lie in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("`{name}` range [{lo}, {hi}] is invalid")]
    InvalidRange { name: &'static str, lo: f64, hi: f64 },
    #[error("clip has no frames")]
    EmptyClip,
    #[error("frame {index} is {found:?}, expected {expected:?}")]
    ShapeMismatch {
        index: usize,
        expected: (u32, u32),
        found: (u32, u32),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PerturbRate(f64);

impl PerturbRate {
    pub fn new(rate: f64) -> Result<Self, AugmentError> {
        if rate > 0.0 && rate.is_finite() {
            Ok(Self(rate))
        } else {
            Err(AugmentError::InvalidRate(rate))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PerturbRate {
    type Error = AugmentError;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<PerturbRate> for f64 {
    fn from(r: PerturbRate) -> Self {
        r.0
    }
}

/// Source frame for each output frame of a clip played at `rate`.
///
/// The output has `round(T / rate)` frames and frame `j` maps to
/// `min(floor(j * rate), T - 1)`. Rates above `2 * T` yield an empty list.
pub fn resample_indices(total_frames: usize, rate: PerturbRate) -> Vec<usize> {
    if total_frames == 0 {
        return Vec::new();
    }
    let len = (total_frames as f64 / rate.value()).round() as usize;
    (0..len)
        .map(|j| ((j as f64 * rate.value()).floor() as usize).min(total_frames - 1))
        .collect()
}

/// Name of a perturbed copy, e.g. `S217_001@0.9`.
pub fn perturbed_clip_id(clip_id: &str, rate: PerturbRate) -> String {
    format!("{clip_id}@{}", crate::format_factor(rate.value()))
}

/// Ranges and probabilities for per-clip augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSpec {
    /// Rotation angle range in degrees; positive is counter-clockwise.
    pub rotate_degrees: [f64; 2],
    pub hflip_prob: f64,
    pub grayscale_prob: f64,
    pub brightness: [f64; 2],
    pub contrast: [f64; 2],
    pub saturation: [f64; 2],
    pub seed: u64,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self {
            rotate_degrees: [-10.0, 10.0],
            hflip_prob: 0.5,
            grayscale_prob: 0.2,
            brightness: [0.8, 1.2],
            contrast: [0.8, 1.2],
            saturation: [0.8, 1.2],
            seed: 0,
        }
    }
}

impl AugmentSpec {
    /// A spec whose every draw is the identity transform.
    pub fn identity(seed: u64) -> Self {
        Self {
            rotate_degrees: [0.0, 0.0],
            hflip_prob: 0.0,
            grayscale_prob: 0.0,
            brightness: [1.0, 1.0],
            contrast: [1.0, 1.0],
            saturation: [1.0, 1.0],
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        for (name, value) in [("hflip", self.hflip_prob), ("grayscale", self.grayscale_prob)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(AugmentError::InvalidProbability { name, value });
            }
        }
        let [lo, hi] = self.rotate_degrees;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(AugmentError::InvalidRange {
                name: "rotate_degrees",
                lo,
                hi,
            });
        }
        for (name, [lo, hi]) in [
            ("brightness", self.brightness),
            ("contrast", self.contrast),
            ("saturation", self.saturation),
        ] {
            if !(lo > 0.0 && hi.is_finite() && lo <= hi) {
                return Err(AugmentError::InvalidRange { name, lo, hi });
            }
        }
        Ok(())
    }
}

/// A fully resolved transform for one clip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentTransform {
    pub angle_deg: f64,
    pub hflip: bool,
    pub grayscale: bool,
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
}

impl AugmentTransform {
    pub const IDENTITY: Self = Self {
        angle_deg: 0.0,
        hflip: false,
        grayscale: false,
        brightness: 1.0,
        contrast: 1.0,
        saturation: 1.0,
    };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }
}

fn clip_rng(seed: u64, clip_id: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(clip_id.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

fn draw_in<R: Rng>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    let u: f64 = rng.random();
    if lo == hi {
        lo
    } else {
        lo + (hi - lo) * u
    }
}

/// Draws the transform for `clip_id`. The same `(seed, clip_id)` always
/// gives the same transform, independent of call order or thread.
pub fn sample_augment(spec: &AugmentSpec, clip_id: &str) -> Result<AugmentTransform, AugmentError> {
    spec.validate()?;
    let mut rng = clip_rng(spec.seed, clip_id);
    // Fixed draw order: every field consumes exactly one value.
    let angle_deg = draw_in(&mut rng, spec.rotate_degrees);
    let hflip = rng.random::<f64>() < spec.hflip_prob;
    let grayscale = rng.random::<f64>() < spec.grayscale_prob;
    let brightness = draw_in(&mut rng, spec.brightness);
    let contrast = draw_in(&mut rng, spec.contrast);
    let saturation = draw_in(&mut rng, spec.saturation);
    Ok(AugmentTransform {
        angle_deg,
        hflip,
        grayscale,
        brightness,
        contrast,
        saturation,
    })
}

/// Applies one transform to every frame of a clip.
///
/// Order: rotation, horizontal flip, brightness, contrast, saturation,
/// grayscale.
pub fn apply_augment(frames: &[RgbImage], transform: &AugmentTransform) -> Result<Vec<RgbImage>, AugmentError> {
    let first = frames.first().ok_or(AugmentError::EmptyClip)?;
    let expected = first.dimensions();
    for (index, f) in frames.iter().enumerate() {
        if f.dimensions() != expected {
            return Err(AugmentError::ShapeMismatch {
                index,
                expected,
                found: f.dimensions(),
            });
        }
    }
    Ok(frames.iter().map(|f| apply_frame(f, transform)).collect())
}

fn apply_frame(frame: &RgbImage, t: &AugmentTransform) -> RgbImage {
    if t.is_identity() {
        return frame.clone();
    }
    let mut out = if t.angle_deg != 0.0 {
        rotate(frame, t.angle_deg)
    } else {
        frame.clone()
    };
    if t.hflip {
        image::imageops::flip_horizontal_in_place(&mut out);
    }
    if t.brightness != 1.0 || t.contrast != 1.0 || t.saturation != 1.0 {
        out = color_jitter(&out, t.brightness, t.contrast, t.saturation);
    }
    if t.grayscale {
        for p in out.pixels_mut() {
            let l = luma(p);
            *p = Rgb([l, l, l]);
        }
    }
    out
}

/// ITU-R 601 luma in integer arithmetic; exact on already-gray pixels.
fn luma(p: &Rgb<u8>) -> u8 {
    let v = 299 * u32::from(p[0]) + 587 * u32::from(p[1]) + 114 * u32::from(p[2]);
    ((v + 500) / 1000) as u8
}

fn luma_f(p: [f64; 3]) -> f64 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

fn rotate(frame: &RgbImage, angle_deg: f64) -> RgbImage {
    let (w, h) = frame.dimensions();
    let cx = (f64::from(w) - 1.0) / 2.0;
    let cy = (f64::from(h) - 1.0) / 2.0;
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    RgbImage::from_fn(w, h, |x, y| {
        let dx = f64::from(x) - cx;
        let dy = f64::from(y) - cy;
        let sx = cx + dx * cos - dy * sin;
        let sy = cy + dx * sin + dy * cos;
        let v = sample_zero_fill(frame, sx, sy);
        Rgb([to_u8(v[0]), to_u8(v[1]), to_u8(v[2])])
    })
}

fn color_jitter(frame: &RgbImage, brightness: f64, contrast: f64, saturation: f64) -> RgbImage {
    let clamp = |v: f64| v.clamp(0.0, 255.0);
    let mut px: Vec<[f64; 3]> = frame
        .pixels()
        .map(|p| [f64::from(p[0]), f64::from(p[1]), f64::from(p[2])])
        .collect();
    if brightness != 1.0 {
        for p in &mut px {
            *p = p.map(|v| clamp(v * brightness));
        }
    }
    if contrast != 1.0 {
        let mean = px.iter().map(|&p| luma_f(p)).sum::<f64>() / px.len() as f64;
        for p in &mut px {
            *p = p.map(|v| clamp((v - mean) * contrast + mean));
        }
    }
    if saturation != 1.0 {
        for p in &mut px {
            let gray = luma_f(*p);
            *p = p.map(|v| clamp((v - gray) * saturation + gray));
        }
    }
    let (w, h) = frame.dimensions();
    let mut out = RgbImage::new(w, h);
    for (dst, src) in out.pixels_mut().zip(px) {
        *dst = Rgb(src.map(to_u8));
    }
    out
}
