//! Exact rectangular linear sum assignment.
//!
//! `solve_lsa` is a shortest-augmenting-path Hungarian variant that handles
//! rectangular matrices with rows <= cols natively. `brute_force_lsa`
//! enumerates all injective maps and serves as the test oracle.

use crate::error::LsaError;

/// Nonnegative real cost matrix with `rows <= cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LsaError> {
        if rows == 0 || cols == 0 {
            return Err(LsaError::InvalidMatrix("empty matrix".into()));
        }
        if rows > cols {
            return Err(LsaError::InvalidMatrix(format!(
                "rows {rows} > cols {cols}; pad columns before solving"
            )));
        }
        if data.len() != rows * cols {
            return Err(LsaError::InvalidMatrix(format!(
                "expected {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LsaError::InvalidMatrix("non-finite entry".into()));
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LsaError> {
        let r = rows.len();
        let c = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LsaError::InvalidMatrix("ragged rows".into()));
        }
        CostMatrix::new(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Total injective row -> column map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    col_of_row: Vec<usize>,
}

impl Assignment {
    pub fn new(col_of_row: Vec<usize>) -> Self {
        Assignment { col_of_row }
    }

    pub fn col(&self, row: usize) -> usize {
        self.col_of_row[row]
    }

    pub fn len(&self) -> usize {
        self.col_of_row.len()
    }

    pub fn is_empty(&self) -> bool {
        self.col_of_row.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.col_of_row
    }

    /// Inverse permutation; only meaningful for square assignments.
    pub fn inverse(&self) -> Assignment {
        let mut inv = vec![usize::MAX; self.col_of_row.len()];
        for (r, &c) in self.col_of_row.iter().enumerate() {
            inv[c] = r;
        }
        Assignment { col_of_row: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.col_of_row.iter().enumerate().all(|(r, &c)| r == c)
    }

    pub fn total_cost(&self, c: &CostMatrix) -> f64 {
        self.col_of_row
            .iter()
            .enumerate()
            .map(|(r, &col)| c.at(r, col))
            .sum()
    }
}

/// Minimum-cost assignment via shortest augmenting paths with potentials.
pub fn solve_lsa(c: &CostMatrix) -> Result<(Assignment, f64), LsaError> {
    let nr = c.rows;
    let nc = c.cols;

    let mut u = vec![0.0f64; nr];
    let mut v = vec![0.0f64; nc];
    let mut col_of_row = vec![usize::MAX; nr];
    let mut row_of_col = vec![usize::MAX; nc];

    for cur_row in 0..nr {
        // Dijkstra over columns for an augmenting path from cur_row.
        let mut shortest = vec![f64::INFINITY; nc];
        let mut path = vec![usize::MAX; nc];
        let mut visited_col = vec![false; nc];
        let mut visited_rows: Vec<usize> = Vec::new();
        let mut min_val = 0.0;
        let mut i = cur_row;
        let mut sink = usize::MAX;

        while sink == usize::MAX {
            visited_rows.push(i);
            let mut lowest = f64::INFINITY;
            let mut index = usize::MAX;
            for j in 0..nc {
                if visited_col[j] {
                    continue;
                }
                let r = min_val + c.at(i, j) - u[i] - v[j];
                if r < shortest[j] {
                    shortest[j] = r;
                    path[j] = i;
                }
                if shortest[j] < lowest
                    || (shortest[j] == lowest && row_of_col[j] == usize::MAX)
                {
                    lowest = shortest[j];
                    index = j;
                }
            }
            if index == usize::MAX || lowest == f64::INFINITY {
                return Err(LsaError::InvalidMatrix("infeasible matrix".into()));
            }
            min_val = lowest;
            visited_col[index] = true;
            if row_of_col[index] == usize::MAX {
                sink = index;
            } else {
                i = row_of_col[index];
            }
        }

        u[cur_row] += min_val;
        for &r in &visited_rows {
            if r != cur_row {
                u[r] += min_val - shortest[col_of_row[r]];
            }
        }
        for (j, vis) in visited_col.iter().enumerate() {
            if *vis {
                v[j] -= min_val - shortest[j];
            }
        }

        // Augment backwards along the alternating path.
        let mut j = sink;
        loop {
            let r = path[j];
            row_of_col[j] = r;
            let prev = col_of_row[r];
            col_of_row[r] = j;
            if r == cur_row {
                break;
            }
            j = prev;
        }
    }

    let assignment = Assignment::new(col_of_row);
    let cost = assignment.total_cost(c);
    Ok((assignment, cost))
}

/// Exhaustive oracle: enumerates every injective row -> column map in
/// lexicographic order and keeps the strictly best, so ties break to the
/// lexicographically smallest assignment vector.
pub fn brute_force_lsa(c: &CostMatrix) -> Result<(Assignment, f64), LsaError> {
    if c.cols > 9 {
        return Err(LsaError::TooLarge(c.cols));
    }
    let mut best_cost = f64::INFINITY;
    let mut best: Vec<usize> = Vec::new();
    let mut used = vec![false; c.cols];
    let mut current = Vec::with_capacity(c.rows);

    fn recurse(
        c: &CostMatrix,
        used: &mut [bool],
        current: &mut Vec<usize>,
        acc: f64,
        best_cost: &mut f64,
        best: &mut Vec<usize>,
    ) {
        if current.len() == c.rows() {
            if acc < *best_cost {
                *best_cost = acc;
                *best = current.clone();
            }
            return;
        }
        let row = current.len();
        for j in 0..c.cols() {
            if used[j] {
                continue;
            }
            used[j] = true;
            current.push(j);
            recurse(c, used, current, acc + c.at(row, j), best_cost, best);
            current.pop();
            used[j] = false;
        }
    }

    recurse(c, &mut used, &mut current, 0.0, &mut best_cost, &mut best);
    Ok((Assignment::new(best), best_cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_by_one() {
        let c = CostMatrix::from_rows(&[vec![0.0]]).unwrap();
        let (a, cost) = solve_lsa(&c).unwrap();
        assert_eq!(a.as_slice(), &[0]);
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn two_by_two() {
        let c = CostMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let (a, cost) = solve_lsa(&c).unwrap();
        assert_eq!(a.as_slice(), &[0, 1]);
        assert_eq!(cost, 2.0);
    }

    #[test]
    fn three_by_three() {
        let c = CostMatrix::from_rows(&[
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ])
        .unwrap();
        let (a, cost) = solve_lsa(&c).unwrap();
        assert_eq!(cost, 5.0);
        assert_eq!(a.as_slice(), &[1, 0, 2]);
    }

    #[test]
    fn diagonal_zeros() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..5).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        let c = CostMatrix::from_rows(&rows).unwrap();
        let (a, cost) = brute_force_lsa(&c).unwrap();
        assert!(a.is_identity());
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(CostMatrix::new(2, 1, vec![0.0, 1.0]).is_err());
        assert!(CostMatrix::new(1, 1, vec![f64::NAN]).is_err());
        let big = CostMatrix::new(1, 10, vec![0.0; 10]).unwrap();
        assert!(matches!(brute_force_lsa(&big), Err(LsaError::TooLarge(10))));
    }

    fn random_matrix(rng: &mut impl Rng, m: usize, n: usize) -> CostMatrix {
        let data: Vec<f64> = (0..m * n).map(|_| rng.gen_range(0.0..100.0)).collect();
        CostMatrix::new(m, n, data).unwrap()
    }

    #[test]
    fn oracle_equivalence_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.gen_range(1..=7);
            let m = rng.gen_range(1..=n);
            let c = random_matrix(&mut rng, m, n);
            let (_, fast) = solve_lsa(&c).unwrap();
            let (_, slow) = brute_force_lsa(&c).unwrap();
            assert!(
                (fast - slow).abs() <= 1e-9 * slow.abs().max(1.0),
                "lsa {fast} != oracle {slow}"
            );
        }
    }

    #[test]
    fn rectangular_5x7_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = random_matrix(&mut rng, 5, 7);
        let (_, fast) = solve_lsa(&c).unwrap();
        let (_, slow) = brute_force_lsa(&c).unwrap();
        assert!((fast - slow).abs() <= 1e-9);
    }

    #[test]
    fn row_permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_matrix(&mut rng, 4, 6);
        let (a, cost) = solve_lsa(&c).unwrap();
        // Swap rows 0 and 2.
        let perm = [2usize, 1, 0, 3];
        let rows: Vec<Vec<f64>> = perm
            .iter()
            .map(|&i| (0..6).map(|j| c.at(i, j)).collect())
            .collect();
        let cp = CostMatrix::from_rows(&rows).unwrap();
        let (ap, costp) = solve_lsa(&cp).unwrap();
        assert!((cost - costp).abs() <= 1e-9);
        for (new_row, &old_row) in perm.iter().enumerate() {
            assert_eq!(ap.col(new_row), a.col(old_row));
        }
    }

    #[test]
    fn row_constant_shift_keeps_argmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let c = random_matrix(&mut rng, 4, 4);
            let (a, _) = solve_lsa(&c).unwrap();
            let shift = 13.5;
            let rows: Vec<Vec<f64>> = (0..4)
                .map(|i| {
                    (0..4)
                        .map(|j| c.at(i, j) + if i == 2 { shift } else { 0.0 })
                        .collect()
                })
                .collect();
            let cs = CostMatrix::from_rows(&rows).unwrap();
            let (a2, _) = solve_lsa(&cs).unwrap();
            // Compare costs of both assignments under the shifted matrix;
            // optima may be non-unique, so assert equal optimality.
            assert!((a.total_cost(&cs) - a2.total_cost(&cs)).abs() <= 1e-9);
        }
    }
}
