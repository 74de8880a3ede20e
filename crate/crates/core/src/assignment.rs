//! Unbalanced minimum-cost assignment.
//!
//! Given a nonnegative `M x N` cost matrix with `M >= N`, pick one entry in
//! every column, all in distinct rows, minimizing the sum. Solved with the
//! shortest-augmenting-path form of the Kuhn-Munkres method, which handles the
//! rectangular case directly (equivalent to padding with zero-cost dummy
//! columns). Among equal-cost optima the lexicographically smallest
//! row-per-column vector is returned.

use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::DMatrix;

/// Rows beyond which [`brute_force_assignment`] refuses to enumerate.
pub const BRUTE_FORCE_MAX_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentProblem<T: Real> {
    cost: DMatrix<T>,
}

impl<T: Real> AssignmentProblem<T> {
    pub fn new(cost: DMatrix<T>) -> Result<Self> {
        let (m, n) = cost.shape();
        if m < n {
            return Err(Error::InfeasibleAssignment { rows: m, cols: n });
        }
        for c in 0..n {
            for r in 0..m {
                let v = cost[(r, c)];
                if !(v >= T::zero()) || !v.is_finite() {
                    return Err(Error::InvalidCost { row: r, col: c });
                }
            }
        }
        Ok(AssignmentProblem { cost })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged cost matrix".into()));
        }
        Self::new(DMatrix::from_fn(m, n, |r, c| rows[r][c]))
    }

    pub fn cost(&self) -> &DMatrix<T> {
        &self.cost
    }

    pub fn n_rows(&self) -> usize {
        self.cost.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.cost.ncols()
    }

    /// Sum of the selected entries, accumulated in column order.
    pub fn total(&self, row_of_column: &[usize]) -> T {
        row_of_column.iter().enumerate().fold(T::zero(), |acc, (c, &r)| acc + self.cost[(r, c)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult<T> {
    /// Zero-based row chosen for each column; pairwise distinct.
    pub row_of_column: Vec<usize>,
    pub total_cost: T,
}

/// Minimum cost of assigning `cols` (in order) to distinct rows from `rows`.
/// Returns the row chosen per column (indices into the full matrix).
///
/// Columns play the role of the smaller "worker" side, so the cost is
/// `O(n^2 m)`.
fn hungarian<T: Real>(cost: &DMatrix<T>, rows: &[usize], cols: &[usize]) -> Vec<usize> {
    let n = cols.len();
    let m = rows.len();
    debug_assert!(n <= m);
    if n == 0 {
        return Vec::new();
    }
    let inf = T::max_value().unwrap();
    // 1-based potentials, index 0 is the virtual source.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); m + 1];
    // owner[j] = worker (1-based) currently matched to job j, 0 if free.
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[(rows[j - 1], cols[i0 - 1])] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![usize::MAX; n];
    for j in 1..=m {
        if owner[j] != 0 {
            out[owner[j] - 1] = rows[j - 1];
        }
    }
    out
}

/// Exact unbalanced assignment with lexicographic tie-breaking.
pub fn solve_unbalanced<T: Real>(problem: &AssignmentProblem<T>) -> AssignmentResult<T> {
    let cost = problem.cost();
    let (m, n) = cost.shape();
    let all_rows: Vec<usize> = (0..m).collect();
    let all_cols: Vec<usize> = (0..n).collect();
    let first = hungarian(cost, &all_rows, &all_cols);
    let optimum = problem.total(&first);
    let slack = T::cost_slack() * (T::one() + optimum.abs());

    // Fix columns left to right, each to the smallest row that still admits
    // an optimal completion.
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    let mut prefix = T::zero();
    for c in 0..n {
        let rest_cols: Vec<usize> = (c + 1..n).collect();
        let mut fixed = None;
        for r in 0..m {
            if chosen.contains(&r) {
                continue;
            }
            let here = prefix + cost[(r, c)];
            if here > optimum + slack {
                continue;
            }
            let free: Vec<usize> = (0..m).filter(|x| *x != r && !chosen.contains(x)).collect();
            let tail = hungarian(cost, &free, &rest_cols);
            let tail_cost = tail.iter().zip(&rest_cols).fold(T::zero(), |acc, (&rr, &cc)| acc + cost[(rr, cc)]);
            if here + tail_cost <= optimum + slack {
                fixed = Some(r);
                break;
            }
        }
        // The unconstrained optimum's own row always qualifies, so a match is
        // found; fall back to it defensively against rounding.
        let r = fixed.unwrap_or(first[c]);
        prefix += cost[(r, c)];
        chosen.push(r);
    }
    let total_cost = problem.total(&chosen);
    AssignmentResult { row_of_column: chosen, total_cost }
}

/// Exhaustive enumeration of all injective column-to-row maps, visited in
/// lexicographic order so the first optimum found is the lexicographically
/// smallest.
pub fn brute_force_assignment<T: Real>(problem: &AssignmentProblem<T>) -> Result<AssignmentResult<T>> {
    let (m, n) = problem.cost().shape();
    if m > BRUTE_FORCE_MAX_ROWS {
        return Err(Error::OracleTooLarge { rows: m, limit: BRUTE_FORCE_MAX_ROWS });
    }
    let mut best: Option<(T, Vec<usize>)> = None;
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; m];
    enumerate(problem, &mut current, &mut used, &mut best);
    let (total_cost, row_of_column) = best.expect("m >= n guarantees one injective map");
    Ok(AssignmentResult { row_of_column, total_cost })
}

fn enumerate<T: Real>(
    problem: &AssignmentProblem<T>,
    current: &mut Vec<usize>,
    used: &mut [bool],
    best: &mut Option<(T, Vec<usize>)>,
) {
    if current.len() == problem.n_cols() {
        let total = problem.total(current);
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            *best = Some((total, current.clone()));
        }
        return;
    }
    for r in 0..used.len() {
        if used[r] {
            continue;
        }
        used[r] = true;
        current.push(r);
        enumerate(problem, current, used, best);
        current.pop();
        used[r] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(rows: &[&[f64]]) -> AssignmentProblem<f64> {
        AssignmentProblem::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn one_by_one() {
        let p = problem(&[&[0.0]]);
        let r = solve_unbalanced(&p);
        assert_eq!(r.row_of_column, vec![0]);
        assert_eq!(r.total_cost, 0.0);
        assert_eq!(brute_force_assignment(&p).unwrap().total_cost, 0.0);
    }

    #[test]
    fn three_by_two() {
        let p = problem(&[&[1.0, 2.0], &[3.0, 0.0], &[5.0, 4.0]]);
        let r = solve_unbalanced(&p);
        assert_eq!(r.row_of_column, vec![0, 1]);
        assert_eq!(r.total_cost, 1.0);
        assert_eq!(brute_force_assignment(&p).unwrap(), r);
    }

    #[test]
    fn zero_diagonal_found() {
        let mut rows = vec![vec![1.0; 4]; 4];
        for i in 0..4 {
            rows[i][i] = 0.0;
        }
        let p = AssignmentProblem::from_rows(&rows).unwrap();
        let r = brute_force_assignment(&p).unwrap();
        assert_eq!(r.row_of_column, vec![0, 1, 2, 3]);
        assert_eq!(r.total_cost, 0.0);
        assert_eq!(solve_unbalanced(&p), r);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let p = problem(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(solve_unbalanced(&p).row_of_column, vec![0, 1]);
        let p = problem(&[&[5.0, 0.0], &[0.0, 5.0], &[0.0, 0.0]]);
        // Optima with cost 0: (1,0), (1,2), (2,0). Smallest is (1,0).
        assert_eq!(solve_unbalanced(&p).row_of_column, vec![1, 0]);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            AssignmentProblem::<f64>::from_rows(&[vec![1.0, 2.0]]),
            Err(Error::InfeasibleAssignment { rows: 1, cols: 2 })
        );
        assert_eq!(AssignmentProblem::from_rows(&[vec![1.0], vec![-1.0]]), Err(Error::InvalidCost { row: 1, col: 0 }));
        assert_eq!(AssignmentProblem::from_rows(&[vec![f64::NAN]]), Err(Error::InvalidCost { row: 0, col: 0 }));
        let big = AssignmentProblem::new(DMatrix::<f64>::zeros(11, 1)).unwrap();
        assert_eq!(brute_force_assignment(&big), Err(Error::OracleTooLarge { rows: 11, limit: 10 }));
    }

    #[test]
    fn empty_column_set() {
        let p = AssignmentProblem::new(DMatrix::<f64>::zeros(3, 0)).unwrap();
        let r = solve_unbalanced(&p);
        assert!(r.row_of_column.is_empty());
        assert_eq!(r.total_cost, 0.0);
    }

    #[test]
    fn small_integer_matrices_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..1000 {
            let p = AssignmentProblem::new(DMatrix::from_fn(5, 3, |_, _| rng.random_range(0..10) as f64)).unwrap();
            assert_eq!(solve_unbalanced(&p), brute_force_assignment(&p).unwrap());
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force(m in 1usize..=8, n_frac in 0.0f64..1.0, seed in any::<u64>()) {
            let n = 1 + ((m.min(4) - 1) as f64 * n_frac).round() as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = AssignmentProblem::new(DMatrix::from_fn(m, n, |_, _| rng.random::<f64>() * 10.0)).unwrap();
            let fast = solve_unbalanced(&p);
            let slow = brute_force_assignment(&p).unwrap();
            prop_assert_eq!(fast.total_cost, slow.total_cost);
            prop_assert_eq!(fast.total_cost, p.total(&fast.row_of_column));
        }

        #[test]
        fn column_shift_moves_cost_not_argmin(seed in any::<u64>(), col in 0usize..3, shift in 0u32..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = DMatrix::from_fn(6, 3, |_, _| rng.random_range(0..10) as f64);
            let mut shifted = base.clone();
            shifted.column_mut(col).add_scalar_mut(shift as f64);
            let a = solve_unbalanced(&AssignmentProblem::new(base).unwrap());
            let b = solve_unbalanced(&AssignmentProblem::new(shifted).unwrap());
            prop_assert_eq!(&a.row_of_column, &b.row_of_column);
            prop_assert_eq!(a.total_cost + shift as f64, b.total_cost);
        }

        #[test]
        fn row_permutation_preserves_cost(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = DMatrix::from_fn(7, 3, |_, _| rng.random::<f64>());
            let mut perm: Vec<usize> = (0..7).collect();
            for i in (1..7).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let permuted = DMatrix::from_fn(7, 3, |r, c| base[(perm[r], c)]);
            let a = solve_unbalanced(&AssignmentProblem::new(base).unwrap());
            let b = solve_unbalanced(&AssignmentProblem::new(permuted).unwrap());
            // Continuous costs: the optimum is unique, so rows map through perm.
            let mapped: Vec<usize> = b.row_of_column.iter().map(|&r| perm[r]).collect();
            prop_assert_eq!(a.row_of_column, mapped);
        }
    }
}
