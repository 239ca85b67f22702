//! Per-frame face/lip annotations and their JSON container.
//!
//! A document holds one or more [`SpeakerSegment`]s. Each segment lists the
//! frames where a detector produced a face and/or lip box:
//!
//! ```json
//! {"segments":[{"segment_id":"S217_001","speaker_id":"S217","total_frames":3,
//!   "fps":25,"transcript":null,
//!   "frames":[{"i":0,"face":[10,10,90,90],"lip":[35,60,65,75]}]}]}
//! ```
//!
//! Frames absent from `frames` count as "not detected" for both face and lip.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_FPS: f64 = 25.0;

#[derive(Debug, Error, PartialEq)]
pub enum AnnotationError {
    #[error("annotation parse error at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("segment `{segment_id}`: {kind}")]
    Validation { segment_id: String, kind: ValidationError },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("`total_frames` is missing")]
    MissingTotalFrames,
    #[error("`total_frames` must be at least 1")]
    EmptySegment,
    #[error("`fps` must be positive, got {0}")]
    InvalidFps(f64),
    #[error("frame index {0} appears more than once")]
    DuplicateFrame(u32),
    #[error("frame index {index} is outside 0..{total}")]
    FrameOutOfRange { index: u32, total: u32 },
    #[error("degenerate {kind} box {coords:?} (needs right > left and bottom > top)")]
    DegenerateBox { kind: &'static str, coords: [u32; 4] },
}

/// Axis-aligned box in integer pixels, `[left, top)` inclusive to
/// `[right, bottom)` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u32; 4]", into = "[u32; 4]")]
pub struct BBox {
    left_x: u32,
    top_y: u32,
    right_x: u32,
    bottom_y: u32,
}

impl BBox {
    pub fn new(left_x: u32, top_y: u32, right_x: u32, bottom_y: u32) -> Result<Self, ValidationError> {
        if right_x <= left_x || bottom_y <= top_y {
            return Err(ValidationError::DegenerateBox {
                kind: "bounding",
                coords: [left_x, top_y, right_x, bottom_y],
            });
        }
        Ok(Self {
            left_x,
            top_y,
            right_x,
            bottom_y,
        })
    }

    pub fn left_x(&self) -> u32 {
        self.left_x
    }

    pub fn top_y(&self) -> u32 {
        self.top_y
    }

    pub fn right_x(&self) -> u32 {
        self.right_x
    }

    pub fn bottom_y(&self) -> u32 {
        self.bottom_y
    }

    pub fn width(&self) -> u32 {
        self.right_x - self.left_x
    }

    pub fn height(&self) -> u32 {
        self.bottom_y - self.top_y
    }

    /// Midpoint of the box; may be half-integral.
    pub fn center(&self) -> (f64, f64) {
        (
            (f64::from(self.left_x) + f64::from(self.right_x)) / 2.0,
            (f64::from(self.top_y) + f64::from(self.bottom_y)) / 2.0,
        )
    }

    pub fn to_array(self) -> [u32; 4] {
        [self.left_x, self.top_y, self.right_x, self.bottom_y]
    }
}

impl TryFrom<[u32; 4]> for BBox {
    type Error = ValidationError;

    fn try_from(value: [u32; 4]) -> Result<Self, Self::Error> {
        BBox::new(value[0], value[1], value[2], value[3])
    }
}

impl From<BBox> for [u32; 4] {
    fn from(b: BBox) -> Self {
        b.to_array()
    }
}

/// Detections for a single frame. Either box may be absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameAnnotation {
    #[serde(rename = "i")]
    pub frame_index: u32,
    pub face: Option<BBox>,
    pub lip: Option<BBox>,
}

impl FrameAnnotation {
    pub fn new(frame_index: u32, face: Option<BBox>, lip: Option<BBox>) -> Self {
        Self { frame_index, face, lip }
    }
}

/// A contiguous annotated clip of one speaker.
///
/// Frames are kept sorted by index without duplicates and every index is
/// below `total_frames`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeakerSegment {
    segment_id: String,
    speaker_id: String,
    total_frames: u32,
    fps: f64,
    transcript: Option<String>,
    frames: Vec<FrameAnnotation>,
}

impl SpeakerSegment {
    /// Builds a segment, sorting `frames` by index. Fails on duplicates,
    /// out-of-range indices or `total_frames == 0`.
    pub fn new(
        segment_id: impl Into<String>,
        speaker_id: impl Into<String>,
        total_frames: u32,
        mut frames: Vec<FrameAnnotation>,
    ) -> Result<Self, AnnotationError> {
        let segment_id = segment_id.into();
        let fail = |kind| AnnotationError::Validation {
            segment_id: segment_id.clone(),
            kind,
        };
        if total_frames == 0 {
            return Err(fail(ValidationError::EmptySegment));
        }
        frames.sort_by_key(|f| f.frame_index);
        for pair in frames.windows(2) {
            if pair[0].frame_index == pair[1].frame_index {
                return Err(fail(ValidationError::DuplicateFrame(pair[0].frame_index)));
            }
        }
        if let Some(last) = frames.last() {
            if last.frame_index >= total_frames {
                return Err(fail(ValidationError::FrameOutOfRange {
                    index: last.frame_index,
                    total: total_frames,
                }));
            }
        }
        Ok(Self {
            segment_id,
            speaker_id: speaker_id.into(),
            total_frames,
            fps: DEFAULT_FPS,
            transcript: None,
            frames,
        })
    }

    pub fn with_fps(mut self, fps: f64) -> Result<Self, AnnotationError> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(AnnotationError::Validation {
                segment_id: self.segment_id,
                kind: ValidationError::InvalidFps(fps),
            });
        }
        self.fps = fps;
        Ok(self)
    }

    pub fn with_transcript(mut self, transcript: impl Into<String>) -> Self {
        self.transcript = Some(transcript.into());
        self
    }

    pub fn segment_id(&self) -> &str {
        &self.segment_id
    }

    pub fn speaker_id(&self) -> &str {
        &self.speaker_id
    }

    pub fn total_frames(&self) -> u32 {
        self.total_frames
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn transcript(&self) -> Option<&str> {
        self.transcript.as_deref()
    }

    pub fn frames(&self) -> &[FrameAnnotation] {
        &self.frames
    }

    pub fn detection_counts(&self) -> DetectionCounts {
        let mut counts = DetectionCounts {
            total: self.total_frames,
            ..DetectionCounts::default()
        };
        for f in &self.frames {
            counts.face += u32::from(f.face.is_some());
            counts.lip += u32::from(f.lip.is_some());
            counts.joint += u32::from(f.face.is_some() && f.lip.is_some());
        }
        counts
    }

    /// Fractions of the `T` frames with a face, a lip, and both.
    pub fn detection_rates(&self) -> DetectionRates {
        self.detection_counts().rates()
    }
}

/// Raw detection counts over a segment of `total` frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DetectionCounts {
    pub total: u32,
    pub face: u32,
    pub lip: u32,
    pub joint: u32,
}

impl DetectionCounts {
    pub fn rates(&self) -> DetectionRates {
        let t = f64::from(self.total);
        DetectionRates {
            face: f64::from(self.face) / t,
            lip: f64::from(self.lip) / t,
            joint: f64::from(self.joint) / t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRates {
    pub face: f64,
    pub lip: f64,
    pub joint: f64,
}

/// Segments parsed from one document, plus the ids of segments whose frame
/// list arrived out of order and was re-sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationDocument {
    pub segments: Vec<SpeakerSegment>,
    pub resorted: Vec<String>,
}

#[derive(Deserialize)]
struct RawDocument {
    segments: Vec<RawSegment>,
}

#[derive(Deserialize)]
struct RawSegment {
    segment_id: String,
    speaker_id: String,
    total_frames: Option<u32>,
    fps: Option<f64>,
    transcript: Option<String>,
    #[serde(default)]
    frames: Vec<RawFrame>,
}

#[derive(Deserialize)]
struct RawFrame {
    i: u32,
    face: Option<[u32; 4]>,
    lip: Option<[u32; 4]>,
}

fn checked_box(coords: Option<[u32; 4]>, kind: &'static str) -> Result<Option<BBox>, ValidationError> {
    coords
        .map(|c| BBox::try_from(c).map_err(|_| ValidationError::DegenerateBox { kind, coords: c }))
        .transpose()
}

#[derive(Serialize)]
struct DocumentRef<'a> {
    segments: &'a [SpeakerSegment],
}

/// Parses an annotation document. Blank input is an empty document.
pub fn parse_annotations(input: &str) -> Result<AnnotationDocument, AnnotationError> {
    if input.trim().is_empty() {
        return Ok(AnnotationDocument {
            segments: Vec::new(),
            resorted: Vec::new(),
        });
    }
    let de = &mut serde_json::Deserializer::from_str(input);
    let raw: RawDocument = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        AnnotationError::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;

    let mut segments = Vec::with_capacity(raw.segments.len());
    let mut resorted = Vec::new();
    for seg in raw.segments {
        let total = seg.total_frames.ok_or_else(|| AnnotationError::Validation {
            segment_id: seg.segment_id.clone(),
            kind: ValidationError::MissingTotalFrames,
        })?;
        if seg.frames.windows(2).any(|w| w[0].i > w[1].i) {
            log::warn!("segment `{}`: frames out of order, re-sorted", seg.segment_id);
            resorted.push(seg.segment_id.clone());
        }
        let frames = seg
            .frames
            .iter()
            .map(|f| {
                Ok(FrameAnnotation::new(
                    f.i,
                    checked_box(f.face, "face")?,
                    checked_box(f.lip, "lip")?,
                ))
            })
            .collect::<Result<Vec<_>, ValidationError>>()
            .map_err(|kind| AnnotationError::Validation {
                segment_id: seg.segment_id.clone(),
                kind,
            })?;
        let mut built = SpeakerSegment::new(seg.segment_id, seg.speaker_id, total, frames)?;
        if let Some(fps) = seg.fps {
            built = built.with_fps(fps)?;
        }
        if let Some(text) = seg.transcript {
            built = built.with_transcript(text);
        }
        segments.push(built);
    }
    Ok(AnnotationDocument { segments, resorted })
}

/// Serialises segments back into the document schema.
pub fn to_json(segments: &[SpeakerSegment]) -> String {
    serde_json::to_string(&DocumentRef { segments }).expect("annotation types always serialise")
}
