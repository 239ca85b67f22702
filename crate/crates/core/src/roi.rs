//! Multi-scale lip ROI geometry.
//!
//! The crop side is derived from the mean face size over a segment,
//! `L = mean((W + H) / 8) * scale`, so the same scale covers the same facial
//! area regardless of how far the speaker sits from the camera. Every frame
//! is centred on the lip-box midpoint; frames without a lip detection borrow
//! the centre of the temporally nearest detected frame (ties go to the
//! earlier one).
//!
//! A segment whose face or lip detection rate does not exceed one half is
//! discarded.

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::SpeakerSegment;
use crate::imaging::resize_bilinear;

/// Scale factors used for the multi-scale crops.
pub const DEFAULT_SCALES: [f64; 6] = [0.6, 0.8, 1.0, 1.25, 1.5, 1.75];
pub const DEFAULT_OUTPUT_SIZE: u32 = 112;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoiError {
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("segment `{0}` has no face detections")]
    NoFaceDetections(String),
    #[error("segment `{0}` has no lip detections")]
    NoLipDetections(String),
    #[error("frame index {index} out of range for {total} frames")]
    FrameOutOfRange { index: usize, total: usize },
    #[error("output size must be at least 1")]
    InvalidOutputSize,
    #[error("input image is empty")]
    EmptyImage,
    #[error("invalid crop plan: {0}")]
    InvalidPlan(String),
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ScaleFactor(f64);

impl ScaleFactor {
    pub fn new(value: f64) -> Result<Self, RoiError> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(RoiError::InvalidScale(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ScaleFactor {
    type Error = RoiError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ScaleFactor> for f64 {
    fn from(s: ScaleFactor) -> Self {
        s.0
    }
}

/// Which frames contribute to the mean face size.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeBasis {
    /// Every frame with a face box.
    #[default]
    FaceDetected,
    /// Only frames with both a face and a lip box.
    JointDetected,
}

/// Side length of the square ROI, in source pixels, averaged over
/// face-detected frames.
pub fn crop_size(segment: &SpeakerSegment, scale: ScaleFactor) -> Result<f64, RoiError> {
    crop_size_with(segment, scale, SizeBasis::FaceDetected)
}

pub fn crop_size_with(segment: &SpeakerSegment, scale: ScaleFactor, basis: SizeBasis) -> Result<f64, RoiError> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for frame in segment.frames() {
        let Some(face) = frame.face else { continue };
        if basis == SizeBasis::JointDetected && frame.lip.is_none() {
            continue;
        }
        sum += f64::from(face.width() + face.height()) / 8.0;
        count += 1;
    }
    if count == 0 {
        return Err(RoiError::NoFaceDetections(segment.segment_id().to_owned()));
    }
    Ok(sum / count as f64 * scale.value())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipCenters {
    pub centers: Vec<(f64, f64)>,
    /// True where the centre was borrowed from a neighbouring frame.
    pub filled: Vec<bool>,
}

/// One centre per frame `0..T`, gap-filled from the nearest detected lip.
pub fn lip_centers(segment: &SpeakerSegment) -> Result<LipCenters, RoiError> {
    let total = segment.total_frames() as usize;
    let mut detected: Vec<Option<(f64, f64)>> = vec![None; total];
    for frame in segment.frames() {
        if let Some(lip) = frame.lip {
            detected[frame.frame_index as usize] = Some(lip.center());
        }
    }
    if detected.iter().all(Option::is_none) {
        return Err(RoiError::NoLipDetections(segment.segment_id().to_owned()));
    }

    // Nearest detection at or after each frame.
    let mut next: Vec<Option<usize>> = vec![None; total];
    let mut upcoming = None;
    for i in (0..total).rev() {
        if detected[i].is_some() {
            upcoming = Some(i);
        }
        next[i] = upcoming;
    }

    let mut centers = Vec::with_capacity(total);
    let mut filled = Vec::with_capacity(total);
    let mut previous: Option<usize> = None;
    for i in 0..total {
        if let Some(c) = detected[i] {
            previous = Some(i);
            centers.push(c);
            filled.push(false);
            continue;
        }
        let source = match (previous, next[i]) {
            (Some(p), Some(n)) => {
                if i - p <= n - i {
                    p
                } else {
                    n
                }
            }
            (Some(p), None) => p,
            (None, Some(n)) => n,
            (None, None) => unreachable!("at least one lip detection exists"),
        };
        centers.push(detected[source].expect("source frame is detected"));
        filled.push(true);
    }
    Ok(LipCenters { centers, filled })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Bilinear,
}

/// Resolved square ROI for every frame of a segment at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CropPlanRepr")]
pub struct CropPlan {
    segment_id: String,
    scale: ScaleFactor,
    side: f64,
    output_size: u32,
    interp: Interpolation,
    centers: Vec<[f64; 2]>,
    filled: Vec<bool>,
}

#[derive(Deserialize)]
struct CropPlanRepr {
    segment_id: String,
    scale: ScaleFactor,
    side: f64,
    output_size: u32,
    #[serde(default)]
    interp: Interpolation,
    centers: Vec<[f64; 2]>,
    filled: Vec<bool>,
}

impl TryFrom<CropPlanRepr> for CropPlan {
    type Error = RoiError;

    fn try_from(r: CropPlanRepr) -> Result<Self, Self::Error> {
        if !(r.side > 0.0 && r.side.is_finite()) {
            return Err(RoiError::InvalidPlan(format!("side must be positive, got {}", r.side)));
        }
        if r.output_size == 0 {
            return Err(RoiError::InvalidOutputSize);
        }
        if r.centers.is_empty() || r.centers.len() != r.filled.len() {
            return Err(RoiError::InvalidPlan(format!(
                "{} centers but {} filled flags",
                r.centers.len(),
                r.filled.len()
            )));
        }
        Ok(Self {
            segment_id: r.segment_id,
            scale: r.scale,
            side: r.side,
            output_size: r.output_size,
            interp: r.interp,
            centers: r.centers,
            filled: r.filled,
        })
    }
}

/// Integer source window `[x0, x0 + side) x [y0, y0 + side)`; may extend
/// past the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceWindow {
    pub x0: i64,
    pub y0: i64,
    pub side: u32,
}

impl CropPlan {
    pub fn segment_id(&self) -> &str {
        &self.segment_id
    }

    pub fn scale(&self) -> ScaleFactor {
        self.scale
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn output_size(&self) -> u32 {
        self.output_size
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interp
    }

    pub fn centers(&self) -> &[[f64; 2]] {
        &self.centers
    }

    pub fn filled(&self) -> &[bool] {
        &self.filled
    }

    pub fn total_frames(&self) -> usize {
        self.centers.len()
    }

    /// Crop side after rounding to whole pixels (never below 1).
    pub fn source_side(&self) -> u32 {
        (self.side.round() as u32).max(1)
    }

    pub fn source_window(&self, frame_index: usize) -> Result<SourceWindow, RoiError> {
        let [cx, cy] = *self.centers.get(frame_index).ok_or(RoiError::FrameOutOfRange {
            index: frame_index,
            total: self.centers.len(),
        })?;
        let side = self.source_side();
        let half = i64::from(side / 2);
        Ok(SourceWindow {
            x0: cx.round() as i64 - half,
            y0: cy.round() as i64 - half,
            side,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("crop plans always serialise")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    FaceRateLow,
    LipRateLow,
}

impl DiscardReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FaceRateLow => "face_rate_low",
            Self::LipRateLow => "lip_rate_low",
        }
    }
}

impl std::fmt::Display for DiscardReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentDisposition {
    Planned(CropPlan),
    Discarded(DiscardReason),
}

/// Applies the discard rule, then resolves side and per-frame centres.
pub fn plan_crops(
    segment: &SpeakerSegment,
    scale: ScaleFactor,
    output_size: u32,
) -> Result<SegmentDisposition, RoiError> {
    plan_crops_with(segment, scale, output_size, SizeBasis::FaceDetected)
}

pub fn plan_crops_with(
    segment: &SpeakerSegment,
    scale: ScaleFactor,
    output_size: u32,
    basis: SizeBasis,
) -> Result<SegmentDisposition, RoiError> {
    if output_size == 0 {
        return Err(RoiError::InvalidOutputSize);
    }
    if let Some(reason) = discard_reason(segment) {
        return Ok(SegmentDisposition::Discarded(reason));
    }
    let side = crop_size_with(segment, scale, basis)?;
    let LipCenters { centers, filled } = lip_centers(segment)?;
    Ok(SegmentDisposition::Planned(CropPlan {
        segment_id: segment.segment_id().to_owned(),
        scale,
        side,
        output_size,
        interp: Interpolation::Bilinear,
        centers: centers.into_iter().map(|(x, y)| [x, y]).collect(),
        filled,
    }))
}

/// `Some` when the face or lip detection rate is at most one half.
/// Compared on integer counts so the boundary is exact.
pub fn discard_reason(segment: &SpeakerSegment) -> Option<DiscardReason> {
    let counts = segment.detection_counts();
    if 2 * u64::from(counts.face) <= u64::from(counts.total) {
        Some(DiscardReason::FaceRateLow)
    } else if 2 * u64::from(counts.lip) <= u64::from(counts.total) {
        Some(DiscardReason::LipRateLow)
    } else {
        None
    }
}

/// Cuts the plan's square for `frame_index` out of `image` (zero-padding
/// outside the image) and resizes it to `output_size` squared.
pub fn crop_frame(image: &RgbImage, plan: &CropPlan, frame_index: usize) -> Result<RgbImage, RoiError> {
    if image.width() == 0 || image.height() == 0 {
        return Err(RoiError::EmptyImage);
    }
    let window = plan.source_window(frame_index)?;
    let patch = extract_window(image, window);
    Ok(resize_bilinear(&patch, plan.output_size, plan.output_size))
}

/// Copies the window out of `image`, leaving out-of-bounds pixels black.
pub fn extract_window(image: &RgbImage, window: SourceWindow) -> RgbImage {
    let (w, h) = (i64::from(image.width()), i64::from(image.height()));
    let mut patch = RgbImage::new(window.side, window.side);
    let side = i64::from(window.side);
    let x_lo = window.x0.max(0);
    let x_hi = (window.x0 + side).min(w);
    let y_lo = window.y0.max(0);
    let y_hi = (window.y0 + side).min(h);
    for y in y_lo..y_hi {
        for x in x_lo..x_hi {
            let p = *image.get_pixel(x as u32, y as u32);
            patch.put_pixel((x - window.x0) as u32, (y - window.y0) as u32, p);
        }
    }
    patch
}
