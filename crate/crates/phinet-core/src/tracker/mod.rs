//! Multi-object tracking on top of per-frame detections: a Kalman/Hungarian
//! tracker, a greedy IoU baseline, CLEAR-MOT scoring, synthetic scenario
//! generation, and plain-text detection file I/O.

pub mod hungarian;
pub mod iou_track;
pub mod kalman;
pub mod mot_io;
pub mod score;
pub mod sort;
pub mod synth;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrackError {
    #[error("box has non-positive area ({width} x {height})")]
    NonPositiveArea { width: f64, height: f64 },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("frame {frame}: duplicate {which} id {id}")]
    DuplicateId {
        which: &'static str,
        frame: usize,
        id: i64,
    },
    #[error("ground truth is empty")]
    NoGroundTruth,
}

/// Axis-aligned box in pixel coordinates, top-left anchored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bbox {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl Bbox {
    pub fn new(left: f64, top: f64, width: f64, height: f64) -> Self {
        Bbox {
            left,
            top,
            width,
            height,
        }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Intersection over union. Degenerate boxes are a caller bug, not a
    /// zero-overlap case, so they error instead of returning 0.
    pub fn iou(&self, other: &Bbox) -> Result<f64, TrackError> {
        for b in [self, other] {
            if b.width <= 0.0 || b.height <= 0.0 {
                return Err(TrackError::NonPositiveArea {
                    width: b.width,
                    height: b.height,
                });
            }
        }
        let ix = (self.left + self.width).min(other.left + other.width) - self.left.max(other.left);
        let iy = (self.top + self.height).min(other.top + other.height) - self.top.max(other.top);
        let inter = ix.max(0.0) * iy.max(0.0);
        Ok(inter / (self.area() + other.area() - inter))
    }
}

/// Forgiving overlap for association: anything degenerate simply can't match.
pub(crate) fn overlap(a: &Bbox, b: &Bbox) -> f64 {
    a.iou(b).unwrap_or(0.0)
}

/// One row of a detection or annotation file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// 1-based frame number.
    pub frame: usize,
    /// Track or object id; -1 for raw (untracked) detections.
    pub id: i64,
    pub bbox: Bbox,
    pub confidence: f64,
}

/// A tracker's output for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Track {
    pub id: u64,
    pub bbox: Bbox,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SortParams {
    /// Frames a track survives without a matching detection.
    pub max_age: u32,
    /// Consecutive hits before a track is reported (except during startup).
    pub min_hits: u32,
    /// Minimum IoU for a detection-track association.
    pub iou_threshold: f64,
}

impl Default for SortParams {
    fn default() -> Self {
        SortParams {
            max_age: 1,
            min_hits: 3,
            iou_threshold: 0.3,
        }
    }
}

/// Drive a per-frame tracker over a whole detection list. Frames are visited
/// contiguously from the first to the last seen, so trackers age correctly
/// across frames with no detections. Output rows carry the track id and
/// confidence 1.0.
pub fn track_stream(
    detections: &[Detection],
    mut step: impl FnMut(&[Bbox]) -> Vec<Track>,
) -> Vec<Detection> {
    let Some(last_frame) = detections.iter().map(|d| d.frame).max() else {
        return Vec::new();
    };
    let first_frame = detections.iter().map(|d| d.frame).min().unwrap_or(1);
    let mut by_frame: std::collections::BTreeMap<usize, Vec<Bbox>> = std::collections::BTreeMap::new();
    for d in detections {
        by_frame.entry(d.frame).or_default().push(d.bbox);
    }
    let mut out = Vec::new();
    for frame in first_frame..=last_frame {
        let boxes = by_frame.get(&frame).map_or(&[][..], Vec::as_slice);
        for track in step(boxes) {
            out.push(Detection {
                frame,
                id: track.id as i64,
                bbox: track.bbox,
                confidence: 1.0,
            });
        }
    }
    out
}
