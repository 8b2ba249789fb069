//! CLEAR-MOT scoring of tracker output against ground truth.
//!
//! Per frame, matches from the previous frame are carried forward when they
//! still overlap (IoU ≥ 0.5); remaining boxes are matched by minimum-cost
//! assignment on 1−IoU, accepting pairs at the same gate. An object that
//! matches a different hypothesis id than it last did counts one id switch.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::hungarian::{assign, CostMatrix};
use super::{Detection, TrackError};

const MATCH_GATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotScore {
    /// 1 − (misses + false positives + id switches) / ground-truth boxes.
    /// Can go negative when errors outnumber the ground truth.
    pub mota: f64,
    /// Mean 1−IoU over matched pairs (0 is perfect; 1.0 when nothing matched).
    pub motp: f64,
    pub id_switches: u64,
    pub false_positives: u64,
    pub misses: u64,
    pub matches: u64,
    pub ground_truth_boxes: u64,
}

fn by_frame(rows: &[Detection], which: &'static str) -> Result<BTreeMap<usize, Vec<Detection>>, TrackError> {
    let mut frames: BTreeMap<usize, Vec<Detection>> = BTreeMap::new();
    for det in rows {
        let bucket = frames.entry(det.frame).or_default();
        if bucket.iter().any(|d| d.id == det.id) {
            return Err(TrackError::DuplicateId {
                which,
                frame: det.frame,
                id: det.id,
            });
        }
        bucket.push(*det);
    }
    Ok(frames)
}

pub fn score(ground_truth: &[Detection], hypotheses: &[Detection]) -> Result<MotScore, TrackError> {
    if ground_truth.is_empty() {
        return Err(TrackError::NoGroundTruth);
    }
    let gt_frames = by_frame(ground_truth, "ground truth")?;
    let hyp_frames = by_frame(hypotheses, "hypothesis")?;

    let mut mapping: HashMap<i64, i64> = HashMap::new(); // object id -> last hyp id
    let mut id_switches = 0u64;
    let mut false_positives = 0u64;
    let mut misses = 0u64;
    let mut matches = 0u64;
    let mut distance = 0.0f64;

    let frames: BTreeSet<usize> = gt_frames.keys().chain(hyp_frames.keys()).copied().collect();
    let empty = Vec::new();
    for frame in frames {
        let gts = gt_frames.get(&frame).unwrap_or(&empty);
        let hyps = hyp_frames.get(&frame).unwrap_or(&empty);
        let mut gt_taken = vec![false; gts.len()];
        let mut hyp_taken = vec![false; hyps.len()];

        // Keep last frame's correspondences wherever they still hold.
        for (g, gt) in gts.iter().enumerate() {
            if let Some(&prev_hyp) = mapping.get(&gt.id) {
                if let Some(h) = hyps.iter().position(|h| h.id == prev_hyp) {
                    if !hyp_taken[h] {
                        let iou = gt.bbox.iou(&hyps[h].bbox)?;
                        if iou >= MATCH_GATE {
                            gt_taken[g] = true;
                            hyp_taken[h] = true;
                            matches += 1;
                            distance += 1.0 - iou;
                        }
                    }
                }
            }
        }

        // Optimal assignment over whatever is left.
        let free_gt: Vec<usize> = (0..gts.len()).filter(|&g| !gt_taken[g]).collect();
        let free_hyp: Vec<usize> = (0..hyps.len()).filter(|&h| !hyp_taken[h]).collect();
        if !free_gt.is_empty() && !free_hyp.is_empty() {
            let mut ious = vec![0.0f64; free_gt.len() * free_hyp.len()];
            for (i, &g) in free_gt.iter().enumerate() {
                for (j, &h) in free_hyp.iter().enumerate() {
                    ious[i * free_hyp.len() + j] = gts[g].bbox.iou(&hyps[h].bbox)?;
                }
            }
            let cost = CostMatrix::new(
                free_gt.len(),
                free_hyp.len(),
                ious.iter().map(|iou| 1.0 - iou).collect(),
            );
            for (i, assigned) in assign(&cost).into_iter().enumerate() {
                let Some(j) = assigned else { continue };
                let iou = ious[i * free_hyp.len() + j];
                if iou < MATCH_GATE {
                    continue;
                }
                let (gt, hyp) = (&gts[free_gt[i]], &hyps[free_hyp[j]]);
                gt_taken[free_gt[i]] = true;
                hyp_taken[free_hyp[j]] = true;
                matches += 1;
                distance += 1.0 - iou;
                if let Some(&prev) = mapping.get(&gt.id) {
                    if prev != hyp.id {
                        id_switches += 1;
                    }
                }
                mapping.insert(gt.id, hyp.id);
            }
        }

        misses += gt_taken.iter().filter(|&&t| !t).count() as u64;
        false_positives += hyp_taken.iter().filter(|&&t| !t).count() as u64;
    }

    let gt_total = ground_truth.len() as u64;
    Ok(MotScore {
        mota: 1.0 - (misses + false_positives + id_switches) as f64 / gt_total as f64,
        motp: if matches == 0 {
            1.0
        } else {
            distance / matches as f64
        },
        id_switches,
        false_positives,
        misses,
        matches,
        ground_truth_boxes: gt_total,
    })
}
