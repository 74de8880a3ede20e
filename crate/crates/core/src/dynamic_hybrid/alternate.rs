use super::realloc::reallocate;
use super::selection::SelectionScores;
use super::{AnalogBeamformer, HybridSolution, TraceEntry};
use crate::error::{Error, Result};
use crate::scalar::{abs2, cplx, czero, expj, CMatrix, Real};
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::Rng;

/// Stopping rule of the alternation: `|delta1 - delta2| < tolerance` (an
/// absolute gap) or `max_iters` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage2Options<T> {
    pub tolerance: T,
    pub max_iters: usize,
}

impl<T: Real> Default for Stage2Options<T> {
    fn default() -> Self {
        Stage2Options { tolerance: T::lit(1e-4), max_iters: 200 }
    }
}

/// Least-squares digital beamformers for a fixed analog beamformer:
/// `F_BBk = (F_RF^H F_RF)^{-1} F_RF^H F~_k`, using that the Gram matrix is
/// `diag(|S_l|)`.
pub fn digital_ls_update<T: Real>(analog: &AnalogBeamformer<T>, targets: &[CMatrix<T>]) -> Vec<CMatrix<T>> {
    targets
        .iter()
        .map(|t| {
            let mut d = DMatrix::from_element(analog.n_rf(), t.ncols(), czero());
            for (l, antennas) in analog.antennas_of_chain().iter().enumerate() {
                if antennas.is_empty() {
                    continue;
                }
                let inv = T::one() / T::lit(antennas.len() as f64);
                for &i in antennas {
                    let w = analog.phase(i).conj();
                    for s in 0..t.ncols() {
                        d[(l, s)] += w * t[(i, s)];
                    }
                }
                for s in 0..t.ncols() {
                    d[(l, s)] *= cplx(inv, T::zero());
                }
            }
            d
        })
        .collect()
}

/// `sum_k ||F~_k - F_RF F_BBk||_F^2`, exploiting the single nonzero per row of
/// `F_RF`.
pub fn approximation_error<T: Real>(
    analog: &AnalogBeamformer<T>,
    digitals: &[CMatrix<T>],
    targets: &[CMatrix<T>],
) -> T {
    let chains = analog.chain_of_antenna();
    targets.iter().zip(digitals).fold(T::zero(), |acc, (t, d)| {
        (0..t.nrows()).fold(acc, |acc, i| {
            let ph = analog.phase(i);
            let l = chains[i];
            (0..t.ncols()).fold(acc, |a, s| a + abs2(t[(i, s)] - ph * d[(l, s)]))
        })
    })
}

/// Random feasible analog beamformer: every chain first gets one distinct
/// antenna, the rest are spread uniformly, phases uniform on the circle.
pub fn random_analog<T: Real, R: Rng + ?Sized>(n_tx: usize, n_rf: usize, rng: &mut R) -> Result<AnalogBeamformer<T>> {
    if n_rf == 0 || n_rf > n_tx {
        return Err(Error::Config { key: "n_rf", reason: format!("need 1 <= n_rf <= n_tx, got {n_rf} and {n_tx}") });
    }
    let mut order: Vec<usize> = (0..n_tx).collect();
    order.shuffle(rng);
    let mut chains = vec![0; n_tx];
    for (pos, &antenna) in order.iter().enumerate() {
        chains[antenna] = if pos < n_rf { pos } else { rng.random_range(0..n_rf) };
    }
    let phases: Vec<Complex<T>> =
        (0..n_tx).map(|_| expj(T::lit(rng.random::<f64>() * std::f64::consts::TAU))).collect();
    Ok(AnalogBeamformer::from_parts(n_rf, chains, &phases))
}

/// Scales each `F_BBk` so that `||F_RF F_BBk||_F^2 = P_k`. Users with zero
/// power get a zero digital beamformer.
pub fn normalize_power<T: Real>(
    analog: &AnalogBeamformer<T>,
    digitals: &mut [CMatrix<T>],
    user_powers: &[T],
) -> Result<()> {
    for (k, (d, &p)) in digitals.iter_mut().zip(user_powers).enumerate() {
        if p == T::zero() {
            d.fill(czero());
            continue;
        }
        let norm2 = analog.antennas_of_chain().iter().enumerate().fold(T::zero(), |acc, (l, s)| {
            let row: T = d.row(l).iter().fold(T::zero(), |a, z| a + abs2(*z));
            acc + T::lit(s.len() as f64) * row
        });
        if !(norm2 > T::zero()) {
            return Err(Error::DegenerateProjection { user: k });
        }
        let s = (p / norm2).sqrt();
        d.iter_mut().for_each(|z| *z *= cplx(s, T::zero()));
    }
    Ok(())
}

fn check_targets<T: Real>(targets: &[CMatrix<T>], user_powers: &[T], n_rf: usize) -> Result<usize> {
    let n_tx = targets.first().ok_or_else(|| Error::Dimension("no users".into()))?.nrows();
    if targets.len() != user_powers.len() || targets.iter().any(|t| t.nrows() != n_tx) {
        return Err(Error::Dimension("targets and user powers disagree".into()));
    }
    if n_rf == 0 || n_rf > n_tx {
        return Err(Error::Config { key: "n_rf", reason: format!("need 1 <= n_rf <= n_tx, got {n_rf} and {n_tx}") });
    }
    Ok(n_tx)
}

/// Alternating minimization over the dynamic-subarray set, starting from a
/// random feasible analog beamformer, followed by per-user power
/// normalization.
pub fn alternate_stage2<T: Real, R: Rng + ?Sized>(
    targets: &[CMatrix<T>],
    user_powers: &[T],
    n_rf: usize,
    options: Stage2Options<T>,
    rng: &mut R,
) -> Result<HybridSolution<T>> {
    let n_tx = check_targets(targets, user_powers, n_rf)?;
    let analog = random_analog(n_tx, n_rf, rng)?;
    iterate(targets, user_powers, analog, options, |digitals| {
        let scores = SelectionScores::new(targets, digitals)?;
        let (analog, report) = reallocate(&scores)?;
        Ok((analog, report.n_rf0, report.moved, report.resolves))
    })
}

/// Baseline with a frozen contiguous partition: antenna `i` drives chain
/// `i / (N_T / N_RF)`. Only phases and digital beamformers are updated.
pub fn fixed_subarray_stage2<T: Real>(
    targets: &[CMatrix<T>],
    user_powers: &[T],
    n_rf: usize,
    options: Stage2Options<T>,
) -> Result<HybridSolution<T>> {
    let n_tx = check_targets(targets, user_powers, n_rf)?;
    if n_tx % n_rf != 0 {
        return Err(Error::Config {
            key: "n_rf",
            reason: format!("fixed subarrays need n_tx ({n_tx}) divisible by n_rf ({n_rf})"),
        });
    }
    let block = n_tx / n_rf;
    let chains: Vec<usize> = (0..n_tx).map(|i| i / block).collect();
    let start = AnalogBeamformer::from_parts(n_rf, chains.clone(), &vec![cplx(T::one(), T::zero()); n_tx]);
    iterate(targets, user_powers, start, options, |digitals| {
        let scores = SelectionScores::new(targets, digitals)?;
        let phases: Vec<Complex<T>> = chains.iter().enumerate().map(|(i, &l)| scores.phase(i, l)).collect();
        Ok((AnalogBeamformer::from_parts(n_rf, chains.clone(), &phases), 0, 0, 0))
    })
}

type AnalogStep<T> = (AnalogBeamformer<T>, usize, usize, usize);

fn iterate<T: Real, F>(
    targets: &[CMatrix<T>],
    user_powers: &[T],
    mut analog: AnalogBeamformer<T>,
    options: Stage2Options<T>,
    mut analog_update: F,
) -> Result<HybridSolution<T>>
where
    F: FnMut(&[CMatrix<T>]) -> Result<AnalogStep<T>>,
{
    let mut digital = digital_ls_update(&analog, targets);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut delta2 = approximation_error(&analog, &digital, targets);
    for iter in 1..=options.max_iters {
        let (next, n_rf0, moved, resolves) = analog_update(&digital)?;
        analog = next;
        let delta1 = approximation_error(&analog, &digital, targets);
        digital = digital_ls_update(&analog, targets);
        delta2 = approximation_error(&analog, &digital, targets);
        trace.push(TraceEntry { iter, delta1, delta2, n_rf0, moved, resolves });
        if (delta1 - delta2).abs() < options.tolerance {
            converged = true;
            break;
        }
    }
    normalize_power(&analog, &mut digital, user_powers)?;
    Ok(HybridSolution { analog, digital, approximation_error: delta2, trace, converged })
}
