//! Per-antenna RF-chain and phase selection.

use super::AnalogBeamformer;
use crate::error::{Error, Result};
use crate::scalar::{abs, abs2, unit_phase, CMatrix, Real};
use num_complex::Complex;

/// `sum_k ||F~_k(i,:) - phase * F_BBk(l,:)||^2` evaluated directly.
pub fn selection_objective<T: Real>(
    antenna: usize,
    chain: usize,
    phase: Complex<T>,
    digitals: &[CMatrix<T>],
    targets: &[CMatrix<T>],
) -> T {
    targets.iter().zip(digitals).fold(T::zero(), |acc, (t, d)| {
        (0..t.ncols()).fold(acc, |a, s| a + abs2(t[(antenna, s)] - phase * d[(chain, s)]))
    })
}

/// Precomputed correlation data for the analog update.
///
/// With `A_i^l = sum_k F~_k(i,:) F_BBk(l,:)^H` and the optimal phase
/// `A/|A|`, the per-antenna objective is
/// `sum_k ||F_BBk(l,:)||^2 - 2|A_i^l| + sum_k ||F~_k(i,:)||^2`.
#[derive(Debug, Clone)]
pub struct SelectionScores<T: Real> {
    correlation: CMatrix<T>,
    chain_energy: Vec<T>,
    target_energy: Vec<T>,
}

impl<T: Real> SelectionScores<T> {
    pub fn new(targets: &[CMatrix<T>], digitals: &[CMatrix<T>]) -> Result<Self> {
        let (n_tx, n_rf) = match (targets.first(), digitals.first()) {
            (Some(t), Some(d)) => (t.nrows(), d.nrows()),
            _ => return Err(Error::Dimension("no users".into())),
        };
        if targets.len() != digitals.len()
            || targets
                .iter()
                .zip(digitals)
                .any(|(t, d)| t.nrows() != n_tx || d.nrows() != n_rf || t.ncols() != d.ncols())
        {
            return Err(Error::Dimension("targets and digital beamformers disagree".into()));
        }
        let mut correlation = CMatrix::<T>::zeros(n_tx, n_rf);
        for (t, d) in targets.iter().zip(digitals) {
            correlation += t * d.adjoint();
        }
        let chain_energy = (0..n_rf)
            .map(|l| digitals.iter().fold(T::zero(), |acc, d| d.row(l).iter().fold(acc, |a, z| a + abs2(*z))))
            .collect();
        let target_energy = (0..n_tx)
            .map(|i| targets.iter().fold(T::zero(), |acc, t| t.row(i).iter().fold(acc, |a, z| a + abs2(*z))))
            .collect();
        Ok(SelectionScores { correlation, chain_energy, target_energy })
    }

    pub fn n_tx(&self) -> usize {
        self.correlation.nrows()
    }

    pub fn n_rf(&self) -> usize {
        self.correlation.ncols()
    }

    /// `A_i^l`.
    pub fn correlation(&self, antenna: usize, chain: usize) -> Complex<T> {
        self.correlation[(antenna, chain)]
    }

    /// Selection score `sum_k ||F_BBk(l,:)||^2 - 2|A_i^l|` (objective without
    /// the antenna's constant target energy).
    pub fn score(&self, antenna: usize, chain: usize) -> T {
        let a = abs(self.correlation[(antenna, chain)]);
        self.chain_energy[chain] - (a + a)
    }

    /// Per-antenna objective at the optimal phase for `chain`.
    pub fn objective(&self, antenna: usize, chain: usize) -> T {
        self.score(antenna, chain) + self.target_energy[antenna]
    }

    /// Optimal phase `A/|A|`, `1` when `A = 0`.
    pub fn phase(&self, antenna: usize, chain: usize) -> Complex<T> {
        unit_phase(self.correlation[(antenna, chain)])
    }

    /// Lowest-score chain for `antenna`; ties go to the lower index.
    pub fn best_chain(&self, antenna: usize) -> usize {
        let mut best = 0;
        let mut best_score = self.score(antenna, 0);
        for l in 1..self.n_rf() {
            let s = self.score(antenna, l);
            if s < best_score {
                best = l;
                best_score = s;
            }
        }
        best
    }

    /// Unconstrained per-antenna optimum; may leave chains empty.
    pub fn candidate(&self) -> AnalogBeamformer<T> {
        let chains: Vec<usize> = (0..self.n_tx()).map(|i| self.best_chain(i)).collect();
        let phases: Vec<Complex<T>> = chains.iter().enumerate().map(|(i, &l)| self.phase(i, l)).collect();
        AnalogBeamformer::from_parts(self.n_rf(), chains, &phases)
    }
}

/// Per-antenna chain selection and optimal phases. The "every chain in use"
/// constraint is not enforced here.
pub fn select_chain_per_antenna<T: Real>(
    targets: &[CMatrix<T>],
    digitals: &[CMatrix<T>],
) -> Result<AnalogBeamformer<T>> {
    Ok(SelectionScores::new(targets, digitals)?.candidate())
}
