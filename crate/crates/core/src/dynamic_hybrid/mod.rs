//! Stage 2: hybrid approximation of the fully-digital beamformers on a
//! dynamic-subarray front end.
//!
//! The analog beamformer connects every antenna to exactly one RF chain
//! through a unit-modulus phase shifter, and every RF chain must drive at
//! least one antenna. The design alternates between
//!
//! * an analog update: each antenna independently picks its best chain and
//!   phase, then empty chains are refilled by the minimum-cost set of antenna
//!   moves (an unbalanced assignment problem), and
//! * a least-squares digital update, which is a per-row scaled adjoint
//!   product because `F_RF^H F_RF` is diagonal.

mod alternate;
mod realloc;
mod selection;

pub use alternate::{
    alternate_stage2, approximation_error, digital_ls_update, fixed_subarray_stage2, normalize_power, random_analog,
    Stage2Options,
};
pub use realloc::{build_reallocation_cost, km_analog_update, ReallocationPlan, ReallocationReport};
pub use selection::{select_chain_per_antenna, selection_objective, SelectionScores};

use crate::scalar::{abs, czero, CMatrix, Real};
use nalgebra::DMatrix;
use num_complex::Complex;

/// Dynamic-subarray analog beamformer `F_RF` (`N_T x N_RF`) together with its
/// antenna partition.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogBeamformer<T: Real> {
    matrix: CMatrix<T>,
    chain_of_antenna: Vec<usize>,
    antennas_of_chain: Vec<Vec<usize>>,
}

/// A violated hardware constraint, reported by [`AnalogBeamformer::check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintViolation {
    /// A nonzero entry is not unit modulus.
    UnitModulus { antenna: usize },
    /// A row does not have exactly one nonzero entry.
    RowSupport { antenna: usize, nonzeros: usize },
    /// An RF chain drives no antenna.
    EmptyChain { chain: usize },
    /// Matrix and partition bookkeeping disagree.
    Inconsistent { antenna: usize },
}

impl<T: Real> AnalogBeamformer<T> {
    /// Builds `F_RF` from a chain index and a unit-modulus phase per antenna.
    /// Empty chains are permitted here; see [`AnalogBeamformer::check`].
    pub fn from_parts(n_rf: usize, chain_of_antenna: Vec<usize>, phases: &[Complex<T>]) -> Self {
        assert_eq!(chain_of_antenna.len(), phases.len(), "one phase per antenna");
        let n_tx = chain_of_antenna.len();
        let mut matrix = DMatrix::from_element(n_tx, n_rf, czero());
        let mut antennas_of_chain = vec![Vec::new(); n_rf];
        for (i, (&l, &ph)) in chain_of_antenna.iter().zip(phases).enumerate() {
            assert!(l < n_rf, "chain index {l} out of range");
            matrix[(i, l)] = ph;
            antennas_of_chain[l].push(i);
        }
        AnalogBeamformer { matrix, chain_of_antenna, antennas_of_chain }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn chain_of_antenna(&self) -> &[usize] {
        &self.chain_of_antenna
    }

    /// Antennas driven by each chain, ascending.
    pub fn antennas_of_chain(&self) -> &[Vec<usize>] {
        &self.antennas_of_chain
    }

    pub fn n_tx(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_rf(&self) -> usize {
        self.matrix.ncols()
    }

    /// The single nonzero entry of row `antenna`.
    pub fn phase(&self, antenna: usize) -> Complex<T> {
        self.matrix[(antenna, self.chain_of_antenna[antenna])]
    }

    pub fn phases(&self) -> Vec<Complex<T>> {
        (0..self.n_tx()).map(|i| self.phase(i)).collect()
    }

    /// Chains with no antenna, ascending.
    pub fn empty_chains(&self) -> Vec<usize> {
        (0..self.n_rf()).filter(|&l| self.antennas_of_chain[l].is_empty()).collect()
    }

    /// Checks unit modulus (to `tol`), one nonzero per row, no empty column
    /// and internal consistency.
    pub fn check(&self, tol: T) -> Result<(), ConstraintViolation> {
        for i in 0..self.n_tx() {
            let row = self.matrix.row(i);
            let nonzeros = row.iter().filter(|z| **z != czero()).count();
            if nonzeros != 1 {
                return Err(ConstraintViolation::RowSupport { antenna: i, nonzeros });
            }
            let l = self.chain_of_antenna[i];
            if self.matrix[(i, l)] == czero() || !self.antennas_of_chain[l].contains(&i) {
                return Err(ConstraintViolation::Inconsistent { antenna: i });
            }
            if (abs(self.matrix[(i, l)]) - T::one()).abs() > tol {
                return Err(ConstraintViolation::UnitModulus { antenna: i });
            }
        }
        let listed: usize = self.antennas_of_chain.iter().map(Vec::len).sum();
        if listed != self.n_tx() {
            return Err(ConstraintViolation::Inconsistent { antenna: listed.min(self.n_tx()) });
        }
        if let Some(chain) = self.empty_chains().first() {
            return Err(ConstraintViolation::EmptyChain { chain: *chain });
        }
        Ok(())
    }
}

/// One iteration of the alternation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry<T> {
    /// 1-based iteration counter.
    pub iter: usize,
    /// Objective after the analog update.
    pub delta1: T,
    /// Objective after the digital update.
    pub delta2: T,
    /// Chains left empty by per-antenna selection before reallocation.
    pub n_rf0: usize,
    /// Antennas whose chain differs between the selection candidate and the
    /// returned analog beamformer.
    pub moved: usize,
    /// Times the assignment was re-solved because a move emptied a chain.
    pub resolves: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridSolution<T: Real> {
    pub analog: AnalogBeamformer<T>,
    /// `N_RF x N_s` per user.
    pub digital: Vec<CMatrix<T>>,
    /// `sum_k ||F~_k - F_RF F_BBk||_F^2` at termination, before power
    /// normalization.
    pub approximation_error: T,
    pub trace: Vec<TraceEntry<T>>,
    pub converged: bool,
}

impl<T: Real> HybridSolution<T> {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// `F_k = F_RF F_BBk` for every user.
    pub fn overall_beamformers(&self) -> Vec<CMatrix<T>> {
        self.digital.iter().map(|d| self.analog.matrix() * d).collect()
    }

    pub fn user_power(&self, user: usize) -> T {
        crate::scalar::fro2(&(self.analog.matrix() * &self.digital[user]))
    }
}
