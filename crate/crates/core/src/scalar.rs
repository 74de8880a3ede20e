//! Scalar abstraction shared by every stage of the pipeline.
//!
//! All linear algebra is carried out on `DMatrix<Complex<T>>` where `T` is a
//! real floating-point type (`f32` or `f64`). Numerical thresholds that the
//! algorithms need are derived from the type's machine epsilon so the same
//! code is usable at both precisions.

use nalgebra::{ComplexField, DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Dense complex matrix.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Dense complex column vector.
pub type CVector<T> = DVector<Complex<T>>;

/// Real scalar usable by the beamforming pipeline.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the type cannot represent
    /// finite doubles (never the case for `f32`/`f64`).
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Relative singular-value threshold below which a direction counts as
    /// numerically null. `1e-10` at double precision.
    fn rank_tol() -> Self;

    /// Absolute slack used when comparing sums of costs that should be
    /// equal up to rounding.
    fn cost_slack() -> Self {
        Self::default_epsilon() * Self::lit(64.0)
    }
}

impl Real for f64 {
    fn rank_tol() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn rank_tol() -> Self {
        1e-4
    }
}

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub fn creal<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// `|z|^2`.
#[inline]
pub fn abs2<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// `|z|`, computed without intermediate overflow.
#[inline]
pub fn abs<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

/// `e^{j theta}`.
#[inline]
pub fn expj<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Unit-modulus phase of `z`, or `1 + 0j` when `z == 0` (every phase is then
/// equally good).
#[inline]
pub fn unit_phase<T: Real>(z: Complex<T>) -> Complex<T> {
    let m = abs(z);
    if m > T::zero() {
        Complex::new(z.re / m, z.im / m)
    } else {
        cone()
    }
}

/// Squared Frobenius norm.
pub fn fro2<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + abs2(*z))
}

/// Frobenius norm.
pub fn fro<T: Real>(m: &CMatrix<T>) -> T {
    fro2(m).sqrt()
}

/// Scales every entry of a complex matrix by a real factor.
pub fn scale<T: Real>(m: &CMatrix<T>, s: T) -> CMatrix<T> {
    m.map(|z| Complex::new(z.re * s, z.im * s))
}

/// Converts a complex matrix between scalar precisions.
pub fn convert_matrix<T: Real, U: Real>(m: &CMatrix<T>) -> CMatrix<U> {
    m.map(|z| Complex::new(U::lit(z.re.to_f64_lossy()), U::lit(z.im.to_f64_lossy())))
}

/// `a^H`; spelled out so call sites read like the math.
#[inline]
pub fn herm<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m.adjoint()
}

/// Real part of a complex scalar treated through `ComplexField`, used for
/// Hermitian diagonals.
#[inline]
pub fn re<T: Real>(z: Complex<T>) -> T {
    <Complex<T> as ComplexField>::real(z)
}
