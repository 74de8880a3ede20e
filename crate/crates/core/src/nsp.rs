//! Stage 3: null-space projection of the digital beamformers.
//!
//! User `k`'s digital beamformer is projected onto the null space of the
//! stacked equivalent channels `W_i^H H_i F_RF` of every other user, which
//! removes its interference at those users, and is then rescaled to its power
//! budget.

use crate::channel::ChannelRealization;
use crate::dynamic_hybrid::{normalize_power, HybridSolution};
use crate::error::{Error, Result};
use crate::linalg::full_right_svd;
use crate::scalar::{fro, CMatrix, Real};
use nalgebra::DMatrix;

/// Equivalent channels `H_eq,i = W_i^H H_i F_RF` (`N_s x N_RF`) and, for each
/// user, the stack of all the other users' blocks in user order.
#[derive(Debug, Clone)]
pub struct EquivalentChannelStack<T: Real> {
    pub per_user_equivalent: Vec<CMatrix<T>>,
    pub stacked_excluding: Vec<CMatrix<T>>,
}

impl<T: Real> EquivalentChannelStack<T> {
    pub fn new(channels: &ChannelRealization<T>, combiners: &[CMatrix<T>], analog: &CMatrix<T>) -> Self {
        let per_user_equivalent: Vec<CMatrix<T>> =
            combiners.iter().zip(channels.matrices()).map(|(w, h)| w.adjoint() * h * analog).collect();
        let n_rf = analog.ncols();
        let stacked_excluding = (0..per_user_equivalent.len())
            .map(|k| {
                let others: Vec<&CMatrix<T>> =
                    per_user_equivalent.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, m)| m).collect();
                let rows: usize = others.iter().map(|m| m.nrows()).sum();
                let mut stack = CMatrix::<T>::zeros(rows, n_rf);
                let mut at = 0;
                for m in others {
                    stack.view_mut((at, 0), (m.nrows(), n_rf)).copy_from(m);
                    at += m.nrows();
                }
                stack
            })
            .collect();
        EquivalentChannelStack { per_user_equivalent, stacked_excluding }
    }
}

/// Orthonormal basis (as columns) of the numerical null space of `mat`:
/// right-singular vectors whose singular value is at most `tol * sigma_max`.
/// A zero or empty matrix yields the identity.
pub fn null_space_basis<T: Real>(mat: &CMatrix<T>, tol: T) -> Result<CMatrix<T>> {
    let (r, c) = mat.shape();
    if c == 0 {
        return Err(Error::Dimension("null space of a matrix with no columns".into()));
    }
    if r == 0 {
        return Ok(CMatrix::identity(c, c));
    }
    let (sigma, v) = full_right_svd(mat)?;
    let sigma_max = sigma[0];
    if !(sigma_max > T::zero()) {
        return Ok(CMatrix::identity(c, c));
    }
    let rank = sigma.iter().filter(|s| **s > tol * sigma_max).count();
    Ok(v.columns(rank, c - rank).into_owned())
}

/// Orthogonal projector `B (B^H B)^{-1} B^H` onto the span of `basis`.
pub fn projector<T: Real>(basis: &CMatrix<T>) -> Result<CMatrix<T>> {
    let gram = basis.adjoint() * basis;
    let inv = gram.try_inverse().ok_or_else(|| Error::Dimension("basis is rank deficient".into()))?;
    Ok(basis * inv * basis.adjoint())
}

/// Projects every user's digital beamformer onto the null space of the other
/// users' equivalent channels and renormalizes to `user_powers`. The analog
/// beamformer is left untouched.
pub fn project_digital<T: Real>(
    solution: &HybridSolution<T>,
    channels: &ChannelRealization<T>,
    combiners: &[CMatrix<T>],
    user_powers: &[T],
) -> Result<HybridSolution<T>> {
    let k_users = solution.digital.len();
    if combiners.len() != k_users || channels.n_users() != k_users || user_powers.len() != k_users {
        return Err(Error::Dimension("user counts disagree".into()));
    }
    let stack = EquivalentChannelStack::new(channels, combiners, solution.analog.matrix());
    let mut digital = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let d = &solution.digital[k];
        if user_powers[k] == T::zero() {
            digital.push(DMatrix::zeros(d.nrows(), d.ncols()));
            continue;
        }
        let basis = null_space_basis(&stack.stacked_excluding[k], T::rank_tol())?;
        if basis.ncols() == 0 {
            return Err(Error::InterferenceUncancellable { user: k });
        }
        let projected = projector(&basis)? * d;
        let before = fro(&(solution.analog.matrix() * d));
        let after = fro(&(solution.analog.matrix() * &projected));
        if !(after > T::lit(1e-12) * before) {
            return Err(Error::DegenerateProjection { user: k });
        }
        digital.push(projected);
    }
    normalize_power(&solution.analog, &mut digital, user_powers)?;
    Ok(HybridSolution {
        analog: solution.analog.clone(),
        digital,
        approximation_error: solution.approximation_error,
        trace: solution.trace.clone(),
        converged: solution.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cone, cplx, czero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| cplx(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn orthonormal(b: &CMatrix<f64>) -> bool {
        fro(&(b.adjoint() * b - CMatrix::<f64>::identity(b.ncols(), b.ncols()))) < 1e-12
    }

    #[test]
    fn explicit_kernel() {
        let m = DMatrix::from_fn(2, 4, |r, c| if r == c { cone() } else { czero() });
        let b = null_space_basis(&m, 1e-10).unwrap();
        assert_eq!(b.shape(), (4, 2));
        assert!(orthonormal(&b));
        assert!(fro(&(&m * &b)) < 1e-14);
    }

    #[test]
    fn full_rank_square_has_trivial_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = null_space_basis(&random(&mut rng, 5, 5), 1e-10).unwrap();
        assert_eq!(b.ncols(), 0);
    }

    #[test]
    fn zero_and_empty_matrices_give_identity() {
        assert_eq!(null_space_basis(&CMatrix::<f64>::zeros(3, 4), 1e-10).unwrap(), CMatrix::identity(4, 4));
        assert_eq!(null_space_basis(&CMatrix::<f64>::zeros(0, 4), 1e-10).unwrap(), CMatrix::identity(4, 4));
    }

    #[test]
    fn generic_ten_by_sixteen() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let m = random(&mut rng, 10, 16);
            let b = null_space_basis(&m, 1e-10).unwrap();
            assert_eq!(b.ncols(), 6);
            assert!(orthonormal(&b));
            assert!(fro(&(&m * &b)) <= 1e-10);
        }
    }

    #[test]
    fn projector_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = null_space_basis(&random(&mut rng, 6, 10), 1e-10).unwrap();
        let q = projector(&b).unwrap();
        assert!(fro(&(&q * &q - &q)) <= 1e-10);
        assert!(fro(&(&q - q.adjoint())) <= 1e-10);
        assert!(fro(&(&q - &b * b.adjoint())) <= 1e-10);
    }
}
