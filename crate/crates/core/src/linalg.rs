//! Thin wrappers over nalgebra's complex SVD.

use crate::error::{Error, Result};
use crate::scalar::{czero, CMatrix, Real};
use nalgebra::{DMatrix, SVD};

/// SVD with singular values in decreasing order.
pub struct SortedSvd<T: Real> {
    pub u: CMatrix<T>,
    pub singular_values: Vec<T>,
    /// Rows are right-singular vectors conjugated (`V^H`).
    pub v_t: CMatrix<T>,
}

/// Thin SVD: `u` is `r x min(r,c)`, `v_t` is `min(r,c) x c`.
pub fn svd<T: Real>(m: &CMatrix<T>) -> Result<SortedSvd<T>> {
    let svd = SVD::try_new(m.clone(), true, true, T::default_epsilon(), 10_000).ok_or(Error::SvdNoConvergence)?;
    let u = svd.u.ok_or(Error::SvdNoConvergence)?;
    let v_t = svd.v_t.ok_or(Error::SvdNoConvergence)?;
    Ok(SortedSvd { u, singular_values: svd.singular_values.iter().copied().collect(), v_t })
}

/// Right-singular basis of the full column space: returns `(values, V)` with
/// `V` square `c x c` unitary and `values` of length `c` (zero-padded), sorted
/// decreasing.
pub fn full_right_svd<T: Real>(m: &CMatrix<T>) -> Result<(Vec<T>, CMatrix<T>)> {
    let (r, c) = m.shape();
    let padded = if r >= c {
        m.clone()
    } else {
        let mut p = DMatrix::from_element(c, c, czero());
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    };
    let s = svd(&padded)?;
    let mut values = s.singular_values;
    values.resize(c, T::zero());
    Ok((values, s.v_t.adjoint()))
}
