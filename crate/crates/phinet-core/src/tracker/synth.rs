//! Seeded synthetic tracking scenarios: ground truth plus a detector
//! simulated by dropout and positional jitter. Useful for exercising the
//! trackers end to end without shipping video data.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Bbox, Detection};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub ground_truth: Vec<Detection>,
    /// Simulated detector output: id -1, possibly jittered, possibly missing.
    pub detections: Vec<Detection>,
}

fn emit(
    scenario: &mut Scenario,
    rng: &mut ChaCha8Rng,
    frame: usize,
    id: i64,
    bbox: Bbox,
    dropout: f64,
    jitter: f64,
) {
    scenario.ground_truth.push(Detection {
        frame,
        id,
        bbox,
        confidence: 1.0,
    });
    if dropout > 0.0 && rng.gen::<f64>() < dropout {
        return;
    }
    let mut noisy = bbox;
    if jitter > 0.0 {
        noisy.left += rng.gen_range(-jitter..jitter);
        noisy.top += rng.gen_range(-jitter..jitter);
    }
    scenario.detections.push(Detection {
        frame,
        id: -1,
        bbox: noisy,
        confidence: 1.0,
    });
}

/// Objects gliding along parallel, non-overlapping lanes with a perfect
/// detector: the easiest possible sequence.
pub fn well_separated(num_objects: usize, num_frames: usize, _seed: u64) -> Scenario {
    let mut scenario = Scenario {
        ground_truth: Vec::new(),
        detections: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for frame in 1..=num_frames {
        let t = (frame - 1) as f64;
        for k in 0..num_objects {
            let bbox = Bbox::new(20.0 + 3.0 * t, 40.0 + 90.0 * k as f64, 30.0, 60.0);
            emit(&mut scenario, &mut rng, frame, k as i64 + 1, bbox, 0.0, 0.0);
        }
    }
    scenario
}

/// Two objects walking toward each other in almost the same lane, passing
/// mid-sequence, with an imperfect detector. The hard case for trackers
/// without a motion model.
pub fn crossing(num_frames: usize, dropout: f64, jitter: f64, seed: u64) -> Scenario {
    let mut scenario = Scenario {
        ground_truth: Vec::new(),
        detections: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for frame in 1..=num_frames {
        let t = (frame - 1) as f64;
        let a = Bbox::new(20.0 + 5.0 * t, 200.0, 30.0, 60.0);
        let b = Bbox::new(590.0 - 5.0 * t, 212.0, 30.0, 60.0);
        emit(&mut scenario, &mut rng, frame, 1, a, dropout, jitter);
        emit(&mut scenario, &mut rng, frame, 2, b, dropout, jitter);
    }
    scenario
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn well_separated_objects_never_overlap() {
        let s = well_separated(5, 100, 0);
        assert_eq!(s.ground_truth.len(), 500);
        assert_eq!(s.detections.len(), 500);
        let mut frames: BTreeMap<usize, Vec<Bbox>> = BTreeMap::new();
        for d in &s.ground_truth {
            frames.entry(d.frame).or_default().push(d.bbox);
        }
        for boxes in frames.values() {
            for i in 0..boxes.len() {
                for j in i + 1..boxes.len() {
                    assert_eq!(boxes[i].iou(&boxes[j]).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn perfect_detector_copies_the_truth() {
        let s = well_separated(3, 20, 0);
        for (gt, det) in s.ground_truth.iter().zip(s.detections.iter()) {
            assert_eq!(det.bbox, gt.bbox);
            assert_eq!(det.id, -1);
        }
    }

    #[test]
    fn crossing_objects_swap_sides() {
        let s = crossing(100, 0.0, 0.0, 0);
        let first: Vec<&Detection> = s.ground_truth.iter().filter(|d| d.frame == 1).collect();
        let last: Vec<&Detection> = s.ground_truth.iter().filter(|d| d.frame == 100).collect();
        assert!(first[0].bbox.left < first[1].bbox.left); // object 1 starts left
        assert!(last[0].bbox.left > last[1].bbox.left); // and ends right
    }

    #[test]
    fn dropout_removes_detections_but_not_truth() {
        let s = crossing(100, 0.3, 0.0, 7);
        assert_eq!(s.ground_truth.len(), 200);
        assert!(s.detections.len() < 200);
        assert!(s.detections.len() > 100);
    }

    #[test]
    fn scenarios_are_reproducible_by_seed() {
        assert_eq!(crossing(50, 0.2, 2.0, 9), crossing(50, 0.2, 2.0, 9));
        assert_ne!(
            crossing(50, 0.2, 2.0, 9).detections,
            crossing(50, 0.2, 2.0, 10).detections
        );
    }
}
