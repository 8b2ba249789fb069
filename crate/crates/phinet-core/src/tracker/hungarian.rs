//! Minimum-cost assignment via the Hungarian algorithm with potentials,
//! O(n²m). Deterministic: rows are processed in order and ties resolve to the
//! lowest column index, so equal-cost assignments always come out the same.

/// Dense row-major cost matrix.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "cost matrix size mismatch");
        CostMatrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CostMatrix { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    fn transposed(&self) -> CostMatrix {
        CostMatrix::from_fn(self.cols, self.rows, |r, c| self.at(c, r))
    }
}

/// Minimum-cost assignment. Every index on the smaller side is matched; the
/// returned vector maps each row to its column (None when rows outnumber
/// columns and the row is left over).
pub fn assign(cost: &CostMatrix) -> Vec<Option<usize>> {
    if cost.rows == 0 || cost.cols == 0 {
        return vec![None; cost.rows];
    }
    if cost.rows > cost.cols {
        let flipped = solve(&cost.transposed());
        let mut out = vec![None; cost.rows];
        for (col, row) in flipped.into_iter().enumerate() {
            out[row] = Some(col);
        }
        return out;
    }
    solve(cost).into_iter().map(Some).collect()
}

/// Total cost of an assignment produced by [`assign`].
pub fn assignment_cost(cost: &CostMatrix, assignment: &[Option<usize>]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| cost.at(r, c)))
        .sum()
}

// Potentials formulation (1-indexed internally): for each row, grow an
// alternating tree of tight edges until a free column is found, then augment.
// Requires rows <= cols; returns a full row -> column matching.
fn solve(cost: &CostMatrix) -> Vec<usize> {
    let (n, m) = (cost.rows, cost.cols);
    debug_assert!(n <= m);
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut matched_row = vec![0usize; m + 1]; // column -> row, 0 = free
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let slack = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Walk the alternating tree back, flipping matched edges.
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=m {
        if matched_row[j] != 0 {
            row_to_col[matched_row[j] - 1] = j - 1;
        }
    }
    row_to_col
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive minimum over all row->column injections; the ground truth
    /// for small matrices.
    pub fn brute_force_cost(cost: &CostMatrix) -> f64 {
        fn recurse(cost: &CostMatrix, row: usize, taken: &mut Vec<bool>, acc: f64, best: &mut f64) {
            let assignable = cost.rows.min(cost.cols);
            let assigned = taken.iter().filter(|&&t| t).count();
            if assigned == assignable || row == cost.rows {
                if assigned == assignable {
                    *best = best.min(acc);
                }
                return;
            }
            // Row may stay empty only if rows outnumber columns.
            if cost.rows > cost.cols {
                recurse(cost, row + 1, taken, acc, best);
            }
            for c in 0..cost.cols {
                if !taken[c] {
                    taken[c] = true;
                    recurse(cost, row + 1, taken, acc + cost.at(row, c), best);
                    taken[c] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        let mut taken = vec![false; cost.cols];
        recurse(cost, 0, &mut taken, 0.0, &mut best);
        best
    }

    #[test]
    fn three_by_three_by_hand() {
        // Optimal picks 1 + 2 + 2 = 5 on the anti-diagonalish pattern.
        let cost = CostMatrix::new(3, 3, vec![4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0]);
        let assignment = assign(&cost);
        assert_eq!(assignment, vec![Some(1), Some(0), Some(2)]);
        assert_eq!(assignment_cost(&cost, &assignment), 5.0);
    }

    #[test]
    fn all_zero_costs_pick_the_diagonal() {
        let cost = CostMatrix::new(4, 4, vec![0.0; 16]);
        assert_eq!(
            assign(&cost),
            vec![Some(0), Some(1), Some(2), Some(3)]
        );
    }

    #[test]
    fn wide_matrix_matches_every_row() {
        let cost = CostMatrix::new(2, 4, vec![9.0, 1.0, 9.0, 9.0, 9.0, 9.0, 9.0, 2.0]);
        assert_eq!(assign(&cost), vec![Some(1), Some(3)]);
    }

    #[test]
    fn tall_matrix_leaves_rows_unmatched() {
        let cost = CostMatrix::new(3, 1, vec![5.0, 1.0, 3.0]);
        assert_eq!(assign(&cost), vec![None, Some(0), None]);
    }

    #[test]
    fn empty_dimensions() {
        assert!(assign(&CostMatrix::new(0, 3, vec![])).is_empty());
        assert_eq!(assign(&CostMatrix::new(2, 0, vec![])), vec![None, None]);
    }

    #[test]
    fn negative_costs_are_fine() {
        let cost = CostMatrix::new(2, 2, vec![-5.0, 0.0, 0.0, -5.0]);
        let a = assign(&cost);
        assert_eq!(assignment_cost(&cost, &a), -10.0);
    }

    #[test]
    fn matches_brute_force_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let rows = rng.gen_range(1..=5);
            let cols = rng.gen_range(1..=5);
            let cost = CostMatrix::from_fn(rows, cols, |_, _| rng.gen_range(0.0..10.0));
            let a = assign(&cost);
            let got = assignment_cost(&cost, &a);
            let want = brute_force_cost(&cost);
            assert!(
                (got - want).abs() < 1e-9,
                "trial {trial}: {rows}x{cols} got {got}, brute force {want}"
            );
        }
    }

    #[test]
    fn deterministic_under_ties() {
        let cost = CostMatrix::new(3, 3, vec![1.0; 9]);
        let first = assign(&cost);
        for _ in 0..5 {
            assert_eq!(assign(&cost), first);
        }
        assert_eq!(first, vec![Some(0), Some(1), Some(2)]);
    }
}
