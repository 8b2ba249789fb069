//! Input builders shared by the benchmark targets: seeded random detection
//! sets and cost matrices sized like real tracking workloads.

use phinet_core::tracker::hungarian::CostMatrix;
use phinet_core::Bbox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `count` boxes scattered over a 4000x4000 canvas, 20-60 px per side.
pub fn random_boxes(count: usize, seed: u64) -> Vec<Bbox> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            Bbox::new(
                rng.gen_range(0.0..4000.0),
                rng.gen_range(0.0..4000.0),
                rng.gen_range(20.0..60.0),
                rng.gen_range(20.0..60.0),
            )
        })
        .collect()
}

/// The same boxes one frame later: a small common drift plus per-box noise,
/// so a tracker re-associates rather than spawning fresh ids.
pub fn drifted(boxes: &[Bbox], seed: u64) -> Vec<Bbox> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    boxes
        .iter()
        .map(|b| {
            Bbox::new(
                b.left + 2.0 + rng.gen_range(-0.5..0.5),
                b.top + 1.0 + rng.gen_range(-0.5..0.5),
                b.width,
                b.height,
            )
        })
        .collect()
}

pub fn random_cost_matrix(rows: usize, cols: usize, seed: u64) -> CostMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CostMatrix::from_fn(rows, cols, |_, _| rng.gen_range(0.0..1.0))
}
