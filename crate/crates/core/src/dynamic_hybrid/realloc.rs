//! Refilling empty RF chains by minimum-cost antenna reallocation.
//!
//! After per-antenna selection, `N_RF^0` chains may be empty. Exactly
//! `N_RF^0` antennas are moved, one into each empty chain; candidates are
//! limited to chains that currently drive more than one antenna. Moving
//! antenna `a` from its best chain to chain `l` raises the objective by
//! `G(a, l) = f_a(l) - f_a(l*) >= 0`, and the cheapest move set is an
//! unbalanced assignment over `G`.
//!
//! If the chosen moves would strip every antenna from one source chain, the
//! stripped antenna with the largest move cost stays put, its row leaves `G`,
//! and the assignment is solved again.

use super::selection::SelectionScores;
use super::AnalogBeamformer;
use crate::assignment::{solve_unbalanced, AssignmentProblem};
use crate::error::{Error, Result};
use crate::scalar::{CMatrix, Real};
use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ReallocationPlan<T: Real> {
    /// Chains driving no antenna, ascending.
    pub empty_chains: Vec<usize>,
    /// Antennas on chains with at least two antennas, ascending.
    pub movable_antennas: Vec<usize>,
    /// `G`, one row per movable antenna and one column per empty chain.
    pub cost: DMatrix<T>,
    /// `(antenna, target chain)` pairs applied, in empty-chain order.
    pub chosen_moves: Vec<(usize, usize)>,
}

impl<T: Real> ReallocationPlan<T> {
    /// Total objective increase of the chosen moves.
    pub fn chosen_cost(&self) -> T {
        self.chosen_moves.iter().fold(T::zero(), |acc, &(a, l)| {
            let row = self.movable_antennas.iter().position(|&x| x == a).unwrap();
            let col = self.empty_chains.iter().position(|&x| x == l).unwrap();
            acc + self.cost[(row, col)]
        })
    }
}

/// Bookkeeping of one analog update.
#[derive(Debug, Clone, PartialEq)]
pub struct ReallocationReport<T: Real> {
    pub n_rf0: usize,
    /// Present when `n_rf0 > 0`.
    pub plan: Option<ReallocationPlan<T>>,
    /// Number of assignment re-solves triggered by a source chain emptying.
    pub resolves: usize,
    /// Antennas whose chain changed relative to the selection candidate.
    pub moved: usize,
}

/// Reallocation cost matrix for a candidate that leaves chains empty.
pub fn build_reallocation_cost<T: Real>(
    candidate: &AnalogBeamformer<T>,
    scores: &SelectionScores<T>,
) -> Result<ReallocationPlan<T>> {
    let empty_chains = candidate.empty_chains();
    let mut movable_antennas: Vec<usize> =
        candidate.antennas_of_chain().iter().filter(|s| s.len() > 1).flatten().copied().collect();
    movable_antennas.sort_unstable();
    if movable_antennas.len() < empty_chains.len() {
        return Err(Error::InfeasibleReallocation { movable: movable_antennas.len(), empty: empty_chains.len() });
    }
    let chains = candidate.chain_of_antenna();
    // Differences of the same stored scores: the argmin guarantees >= 0.
    let cost = DMatrix::from_fn(movable_antennas.len(), empty_chains.len(), |r, c| {
        let a = movable_antennas[r];
        scores.score(a, empty_chains[c]) - scores.score(a, chains[a])
    });
    Ok(ReallocationPlan { empty_chains, movable_antennas, cost, chosen_moves: Vec::new() })
}

/// Analog update: per-antenna selection followed by reallocation so that no
/// RF chain is left empty.
pub fn km_analog_update<T: Real>(
    targets: &[CMatrix<T>],
    digitals: &[CMatrix<T>],
) -> Result<(AnalogBeamformer<T>, ReallocationReport<T>)> {
    let scores = SelectionScores::new(targets, digitals)?;
    reallocate(&scores)
}

pub(super) fn reallocate<T: Real>(scores: &SelectionScores<T>) -> Result<(AnalogBeamformer<T>, ReallocationReport<T>)> {
    let candidate = scores.candidate();
    let n_rf0 = candidate.empty_chains().len();
    if n_rf0 == 0 {
        return Ok((candidate, ReallocationReport { n_rf0, plan: None, resolves: 0, moved: 0 }));
    }
    let mut plan = build_reallocation_cost(&candidate, scores)?;
    let n_rf = candidate.n_rf();
    let chains = candidate.chain_of_antenna();

    // Rows of G still in play (indices into plan.movable_antennas).
    let mut live: Vec<usize> = (0..plan.movable_antennas.len()).collect();
    let mut resolves = 0;
    let moves = loop {
        if live.len() < n_rf0 {
            return Err(Error::InfeasibleReallocation { movable: live.len(), empty: n_rf0 });
        }
        let sub = DMatrix::from_fn(live.len(), n_rf0, |r, c| plan.cost[(live[r], c)]);
        let solution = solve_unbalanced(&AssignmentProblem::new(sub)?);

        let mut remaining: Vec<usize> = candidate.antennas_of_chain().iter().map(Vec::len).collect();
        // Largest move cost seen per source chain and the live-row index
        // that produced it.
        let mut worst: Vec<Option<(T, usize)>> = vec![None; n_rf];
        let mut emptied = None;
        let mut moves = Vec::with_capacity(n_rf0);
        for (col, &r) in solution.row_of_column.iter().enumerate() {
            let row = live[r];
            let antenna = plan.movable_antennas[row];
            let source = chains[antenna];
            let g = plan.cost[(row, col)];
            remaining[source] -= 1;
            if worst[source].is_none_or(|(m, _)| m < g) {
                worst[source] = Some((g, r));
            }
            moves.push((antenna, plan.empty_chains[col]));
            if remaining[source] == 0 {
                emptied = Some(source);
                break;
            }
        }
        match emptied {
            None => break moves,
            Some(chain) => {
                let (_, r) = worst[chain].expect("an emptied chain had at least one move");
                live.remove(r);
                resolves += 1;
            }
        }
    };

    let mut new_chains = chains.to_vec();
    let mut phases = candidate.phases();
    for &(antenna, target) in &moves {
        new_chains[antenna] = target;
        phases[antenna] = scores.phase(antenna, target);
    }
    plan.chosen_moves = moves;
    let moved = new_chains.iter().zip(chains).filter(|(a, b)| a != b).count();
    let analog = AnalogBeamformer::from_parts(n_rf, new_chains, &phases);
    Ok((analog, ReallocationReport { n_rf0, plan: Some(plan), resolves, moved }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamic_hybrid::selection_objective;
    use crate::scalar::{cone, cplx, czero};

    /// K = 1, `F_BB = I`: the target rows directly set the selection scores
    /// `1 - 2|x_il|`.
    fn fixture(rows: &[&[f64]]) -> (Vec<CMatrix<f64>>, Vec<CMatrix<f64>>) {
        let n_rf = rows[0].len();
        let t = DMatrix::from_fn(rows.len(), n_rf, |i, l| cplx(rows[i][l], 0.0));
        let d = DMatrix::from_fn(n_rf, n_rf, |r, c| if r == c { cone() } else { czero() });
        (vec![t], vec![d])
    }

    fn total_objective(f: &AnalogBeamformer<f64>, targets: &[CMatrix<f64>], digitals: &[CMatrix<f64>]) -> f64 {
        (0..f.n_tx()).map(|i| selection_objective(i, f.chain_of_antenna()[i], f.phase(i), digitals, targets)).sum()
    }

    /// Best objective over every partition that leaves no chain empty, each
    /// antenna at its optimal phase for its chain.
    fn exhaustive(targets: &[CMatrix<f64>], digitals: &[CMatrix<f64>]) -> f64 {
        let scores = SelectionScores::new(targets, digitals).unwrap();
        let (n_tx, n_rf) = (scores.n_tx(), scores.n_rf());
        let mut best = f64::INFINITY;
        let mut chains = vec![0usize; n_tx];
        loop {
            let mut used = vec![false; n_rf];
            chains.iter().for_each(|&l| used[l] = true);
            if used.iter().all(|u| *u) {
                let v: f64 = chains.iter().enumerate().map(|(i, &l)| scores.objective(i, l)).sum();
                best = best.min(v);
            }
            let mut i = 0;
            loop {
                if i == n_tx {
                    return best;
                }
                chains[i] += 1;
                if chains[i] < n_rf {
                    break;
                }
                chains[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn no_empty_chain_returns_candidate() {
        let (t, d) = fixture(&[&[1.0, 0.1], &[0.2, 0.9]]);
        let (f, report) = km_analog_update(&t, &d).unwrap();
        assert_eq!(report.n_rf0, 0);
        assert_eq!(f, select_candidate(&t, &d));
    }

    fn select_candidate(t: &[CMatrix<f64>], d: &[CMatrix<f64>]) -> AnalogBeamformer<f64> {
        SelectionScores::new(t, d).unwrap().candidate()
    }

    #[test]
    fn single_move_one_by_one_cost() {
        // Chain 0 holds antennas 0 and 1, chain 1 holds antenna 2, chain 2 empty.
        let (t, d) = fixture(&[&[1.0, 0.0, 0.6], &[1.0, 0.0, 0.3], &[0.0, 1.0, 0.9]]);
        let cand = select_candidate(&t, &d);
        let scores = SelectionScores::new(&t, &d).unwrap();
        let plan = build_reallocation_cost(&cand, &scores).unwrap();
        assert_eq!(plan.empty_chains, vec![2]);
        assert_eq!(plan.movable_antennas, vec![0, 1]);
        for (r, &a) in plan.movable_antennas.iter().enumerate() {
            let here = selection_objective(a, 0, scores.phase(a, 0), &d, &t);
            let there = selection_objective(a, 2, scores.phase(a, 2), &d, &t);
            assert!((plan.cost[(r, 0)] - (there - here)).abs() < 1e-14);
        }
    }

    #[test]
    fn tied_chains_cost_nothing() {
        let (t, d) = fixture(&[&[0.8, 0.0, 0.8], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let cand = select_candidate(&t, &d);
        let scores = SelectionScores::new(&t, &d).unwrap();
        let plan = build_reallocation_cost(&cand, &scores).unwrap();
        assert_eq!(plan.cost[(0, 0)], 0.0);
        let (f, report) = reallocate(&scores).unwrap();
        assert_eq!(report.plan.unwrap().chosen_moves, vec![(0, 2)]);
        assert!(f.check(1e-12).is_ok());
    }

    #[test]
    fn three_antennas_two_chains_moves_cheapest() {
        // Everyone prefers chain 0; moving antenna 1 to chain 1 is cheapest.
        let (t, d) = fixture(&[&[1.0, 0.2], &[1.0, 0.7], &[0.9, 0.1]]);
        let cand = select_candidate(&t, &d);
        assert_eq!(cand.chain_of_antenna(), &[0, 0, 0]);
        let (f, report) = km_analog_update(&t, &d).unwrap();
        assert_eq!(report.n_rf0, 1);
        assert_eq!(report.moved, 1);
        assert_eq!(f.chain_of_antenna(), &[0, 1, 0]);
        // Enumerate both... all three possible single moves.
        let scores = SelectionScores::new(&t, &d).unwrap();
        let increases: Vec<f64> = (0..3).map(|a| scores.score(a, 1) - scores.score(a, 0)).collect();
        let best = (0..3).min_by(|&a, &b| increases[a].partial_cmp(&increases[b]).unwrap()).unwrap();
        assert_eq!(best, 1);
        assert!((total_objective(&f, &t, &d) - exhaustive(&t, &d)).abs() < 1e-12);
    }

    #[test]
    fn emptied_source_keeps_costliest_antenna() {
        // Chains 0 = {0, 1}, 1 = {2, 3}; chains 2 and 3 empty. The first
        // assignment moves both antennas of chain 0, so antenna 1 (the more
        // expensive move) stays and the problem is re-solved.
        let (t, d) =
            fixture(&[&[1.0, 0.0, 0.9, 0.875], &[1.0, 0.0, 0.75, 0.85], &[0.0, 1.0, 0.1, 0.1], &[0.0, 1.0, 0.25, 0.0]]);
        let (f, report) = km_analog_update(&t, &d).unwrap();
        assert_eq!(report.n_rf0, 2);
        assert_eq!(report.resolves, 1);
        assert!(f.check(1e-12).is_ok());
        assert_eq!(f.chain_of_antenna(), &[3, 0, 1, 2]);
        let plan = report.plan.unwrap();
        assert!((plan.chosen_cost() - 1.75).abs() < 1e-12);
        let want = exhaustive(&t, &d);
        assert!((total_objective(&f, &t, &d) - want).abs() < 1e-12, "{} vs {want}", total_objective(&f, &t, &d));
    }

    #[test]
    fn costs_nonnegative_and_moves_exact() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut with_moves = 0;
        for _ in 0..1000 {
            let n_tx = rng.random_range(4..12);
            let n_rf = rng.random_range(2..=n_tx.min(6));
            let t = DMatrix::from_fn(n_tx, 2, |_, _| cplx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let d = DMatrix::from_fn(n_rf, 2, |_, _| cplx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let scores = SelectionScores::new(std::slice::from_ref(&t), std::slice::from_ref(&d)).unwrap();
            let cand = scores.candidate();
            if cand.empty_chains().is_empty() {
                continue;
            }
            let plan = build_reallocation_cost(&cand, &scores).unwrap();
            assert!(plan.cost.iter().all(|g| *g >= 0.0));
            let (f, report) = reallocate(&scores).unwrap();
            assert!(f.check(1e-12).is_ok());
            assert_eq!(report.moved, report.n_rf0);
            with_moves += 1;
        }
        assert!(with_moves > 100);
    }
}
