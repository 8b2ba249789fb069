//! Greedy IoU tracker: the no-motion-model baseline. Each detection claims
//! the unclaimed track whose previous box overlaps it best (above the
//! threshold); tracks that miss a single frame are terminated. Cheap, and a
//! useful lower bound for how much the Kalman tracker's coasting buys.

use super::{overlap, Bbox, Track};

pub struct IouTracker {
    iou_threshold: f64,
    tracks: Vec<(u64, Bbox)>,
    next_id: u64,
}

impl IouTracker {
    pub fn new(iou_threshold: f64) -> Self {
        IouTracker {
            iou_threshold,
            tracks: Vec::new(),
            next_id: 1,
        }
    }

    /// Advance one frame; every detection is reported, either under the id of
    /// the track it continues or under a fresh one.
    pub fn step(&mut self, detections: &[Bbox]) -> Vec<Track> {
        let mut claimed = vec![false; self.tracks.len()];
        let mut out = Vec::with_capacity(detections.len());
        let mut survivors: Vec<(u64, Bbox)> = Vec::new();

        for det in detections {
            let mut best: Option<(usize, f64)> = None;
            for (t, (_, last)) in self.tracks.iter().enumerate() {
                if claimed[t] {
                    continue;
                }
                let ov = overlap(det, last);
                if ov >= self.iou_threshold && best.is_none_or(|(_, b)| ov > b) {
                    best = Some((t, ov));
                }
            }
            let id = match best {
                Some((t, _)) => {
                    claimed[t] = true;
                    self.tracks[t].0
                }
                None => {
                    let id = self.next_id;
                    self.next_id += 1;
                    id
                }
            };
            survivors.push((id, *det));
            out.push(Track { id, bbox: *det });
        }

        self.tracks = survivors;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_motion_keeps_one_id() {
        let mut tracker = IouTracker::new(0.3);
        let mut ids = std::collections::BTreeSet::new();
        for t in 0..30 {
            let tracks = tracker.step(&[Bbox::new(3.0 * t as f64, 50.0, 30.0, 60.0)]);
            ids.insert(tracks[0].id);
        }
        assert_eq!(ids.len(), 1);
    }

    #[test]
    fn a_single_missed_frame_fragments_the_track() {
        let mut tracker = IouTracker::new(0.3);
        let box_at = |t: f64| Bbox::new(3.0 * t, 50.0, 30.0, 60.0);
        let before = tracker.step(&[box_at(0.0)])[0].id;
        tracker.step(&[box_at(1.0)]);
        tracker.step(&[]); // dropout
        let after = tracker.step(&[box_at(3.0)])[0].id;
        assert_ne!(before, after);
    }

    #[test]
    fn best_overlap_wins_when_two_tracks_compete() {
        let mut tracker = IouTracker::new(0.1);
        tracker.step(&[
            Bbox::new(0.0, 0.0, 20.0, 20.0),
            Bbox::new(15.0, 0.0, 20.0, 20.0),
        ]);
        // One detection overlapping both previous boxes, closer to the second.
        let tracks = tracker.step(&[Bbox::new(13.0, 0.0, 20.0, 20.0)]);
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].id, 2);
    }

    #[test]
    fn every_detection_is_reported() {
        let mut tracker = IouTracker::new(0.3);
        let tracks = tracker.step(&[
            Bbox::new(0.0, 0.0, 10.0, 10.0),
            Bbox::new(100.0, 0.0, 10.0, 10.0),
            Bbox::new(200.0, 0.0, 10.0, 10.0),
        ]);
        assert_eq!(tracks.len(), 3);
        let ids: Vec<u64> = tracks.iter().map(|t| t.id).collect();
        assert_eq!(ids, vec![1, 2, 3]);
    }
}
