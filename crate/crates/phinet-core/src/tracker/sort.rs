//! Online tracking-by-detection: predict every track one frame ahead with its
//! Kalman filter, associate detections to predictions by IoU via minimum-cost
//! assignment, then update matched tracks, age unmatched ones, and start new
//! tracks from unmatched detections.

use super::hungarian::{assign, CostMatrix};
use super::kalman::KalmanBoxFilter;
use super::{overlap, Bbox, SortParams, Track};

struct TrackState {
    id: u64,
    kf: KalmanBoxFilter,
    hit_streak: u32,
    age_since_update: u32,
}

pub struct SortTracker {
    params: SortParams,
    tracks: Vec<TrackState>,
    next_id: u64,
    frame_count: u64,
}

impl SortTracker {
    pub fn new(params: SortParams) -> Self {
        SortTracker {
            params,
            tracks: Vec::new(),
            next_id: 1,
            frame_count: 0,
        }
    }

    /// Advance one frame. Returns the tracks confirmed for this frame, in
    /// ascending id order. Call once per frame even when there are no
    /// detections, so coasting tracks age out.
    pub fn step(&mut self, detections: &[Bbox]) -> Vec<Track> {
        self.frame_count += 1;

        let predictions: Vec<Bbox> = self.tracks.iter_mut().map(|t| t.kf.predict()).collect();

        let mut det_match: Vec<Option<usize>> = vec![None; detections.len()];
        let mut track_matched = vec![false; self.tracks.len()];
        if !detections.is_empty() && !self.tracks.is_empty() {
            let cost = CostMatrix::from_fn(detections.len(), predictions.len(), |d, t| {
                1.0 - overlap(&detections[d], &predictions[t])
            });
            for (d, assigned) in assign(&cost).into_iter().enumerate() {
                if let Some(t) = assigned {
                    if overlap(&detections[d], &predictions[t]) >= self.params.iou_threshold {
                        det_match[d] = Some(t);
                        track_matched[t] = true;
                    }
                }
            }
        }

        for (d, m) in det_match.iter().enumerate() {
            if let Some(t) = *m {
                let track = &mut self.tracks[t];
                if track.age_since_update > 0 {
                    track.hit_streak = 0;
                }
                track.kf.update(&detections[d]);
                track.age_since_update = 0;
                track.hit_streak += 1;
            }
        }
        for (t, matched) in track_matched.iter().enumerate() {
            if !matched {
                self.tracks[t].age_since_update += 1;
            }
        }
        for (d, m) in det_match.iter().enumerate() {
            if m.is_none() {
                self.tracks.push(TrackState {
                    id: self.next_id,
                    kf: KalmanBoxFilter::new(&detections[d]),
                    hit_streak: 0,
                    age_since_update: 0,
                });
                self.next_id += 1;
            }
        }

        let max_age = self.params.max_age;
        self.tracks.retain(|t| t.age_since_update <= max_age);

        // A track is reported when it was updated this frame and has either a
        // long enough streak or the sequence is still in its startup window.
        let min_hits = self.params.min_hits;
        let frame = self.frame_count;
        self.tracks
            .iter()
            .filter(|t| {
                t.age_since_update == 0
                    && (t.hit_streak >= min_hits || frame <= u64::from(min_hits))
            })
            .map(|t| Track {
                id: t.id,
                bbox: t.kf.bbox(),
            })
            .collect()
    }
}
