//! Plain-text detection files, one box per line:
//!
//! ```text
//! frame,id,bb_left,bb_top,bb_width,bb_height,conf,-1,-1,-1
//! ```
//!
//! Frames are 1-based; raw detections carry id -1. Lines need at least the
//! first seven fields; anything after is ignored on input and written as -1.

use super::{Bbox, Detection, TrackError};

pub fn parse_mot(text: &str) -> Result<Vec<Detection>, TrackError> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 7 {
            return Err(TrackError::Parse {
                line: lineno,
                reason: format!("expected at least 7 fields, found {}", fields.len()),
            });
        }
        let parse_f64 = |name: &str, s: &str| -> Result<f64, TrackError> {
            s.parse::<f64>().map_err(|_| TrackError::Parse {
                line: lineno,
                reason: format!("bad {name} value {s:?}"),
            })
        };
        let frame: usize = fields[0].parse().map_err(|_| TrackError::Parse {
            line: lineno,
            reason: format!("bad frame number {:?}", fields[0]),
        })?;
        if frame == 0 {
            return Err(TrackError::Parse {
                line: lineno,
                reason: "frame numbers are 1-based".into(),
            });
        }
        let id: i64 = fields[1].parse().map_err(|_| TrackError::Parse {
            line: lineno,
            reason: format!("bad id {:?}", fields[1]),
        })?;
        rows.push(Detection {
            frame,
            id,
            bbox: Bbox::new(
                parse_f64("bb_left", fields[2])?,
                parse_f64("bb_top", fields[3])?,
                parse_f64("bb_width", fields[4])?,
                parse_f64("bb_height", fields[5])?,
            ),
            confidence: parse_f64("conf", fields[6])?,
        });
    }
    Ok(rows)
}

pub fn format_mot(rows: &[Detection]) -> String {
    let mut out = String::new();
    for d in rows {
        out.push_str(&format!(
            "{},{},{:.2},{:.2},{:.2},{:.2},{:.2},-1,-1,-1\n",
            d.frame, d.id, d.bbox.left, d.bbox.top, d.bbox.width, d.bbox.height, d.confidence
        ));
    }
    out
}
