//! Achievable spectral efficiency with Gaussian signalling.
//!
//! For user `k` with combiner `W_k` and overall beamformers `F_i`,
//!
//! ```text
//! C_k = W_k^H H_k (sum_{i != k} F_i F_i^H) H_k^H W_k + sigma^2 W_k^H W_k
//! R_k = log2 det(I + C_k^{-1} W_k^H H_k F_k F_k^H H_k^H W_k)
//! ```
//!
//! The determinant is evaluated as `det(I + X X^H)` with `X = L^{-1} W^H H F_k`
//! and `C_k = L L^H`, which keeps the argument Hermitian positive definite.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::scalar::{fro2, re, CMatrix, Real};
use nalgebra::Cholesky;

/// Whether other users' beams count as interference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterferenceMode {
    Included,
    /// Treat every user as alone on the channel (the fully-digital reference).
    Excluded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport<T> {
    /// Bits/s/Hz per user.
    pub per_user_se: Vec<T>,
    pub mean_se: T,
    pub sum_se: T,
    /// `sum_{i != k} ||W_k^H H_k F_i||_F^2`.
    pub iui_power: Vec<T>,
    /// `||W_k^H H_k F_k||_F^2`.
    pub desired_power: Vec<T>,
}

fn check_dims<T: Real>(
    user: usize,
    combiners: &[CMatrix<T>],
    channels: &ChannelRealization<T>,
    beamformers: &[CMatrix<T>],
) -> Result<()> {
    let k = channels.n_users();
    if combiners.len() != k || beamformers.len() != k || user >= k {
        return Err(Error::Dimension(format!(
            "user {user}: {k} channels, {} combiners, {} beamformers",
            combiners.len(),
            beamformers.len()
        )));
    }
    let h = channels.matrix(user);
    if combiners[user].nrows() != h.nrows() || beamformers.iter().any(|f| f.nrows() != h.ncols()) {
        return Err(Error::Dimension("combiner or beamformer does not fit the channel".into()));
    }
    Ok(())
}

/// `C_k` with interference from every other user's beamformer.
pub fn interference_plus_noise_cov<T: Real>(
    user: usize,
    combiners: &[CMatrix<T>],
    channels: &ChannelRealization<T>,
    beamformers: &[CMatrix<T>],
    noise_power: T,
) -> Result<CMatrix<T>> {
    cov(user, combiners, channels, beamformers, noise_power, InterferenceMode::Included)
}

fn cov<T: Real>(
    user: usize,
    combiners: &[CMatrix<T>],
    channels: &ChannelRealization<T>,
    beamformers: &[CMatrix<T>],
    noise_power: T,
    mode: InterferenceMode,
) -> Result<CMatrix<T>> {
    if !(noise_power > T::zero()) {
        return Err(Error::InvalidNoise);
    }
    check_dims(user, combiners, channels, beamformers)?;
    let w = &combiners[user];
    let wh = w.adjoint() * channels.matrix(user);
    let mut c = (w.adjoint() * w).map(|z| z * crate::scalar::creal(noise_power));
    if mode == InterferenceMode::Included {
        for (i, f) in beamformers.iter().enumerate() {
            if i != user {
                let g = &wh * f;
                c += &g * g.adjoint();
            }
        }
    }
    Ok(c)
}

/// `log2 det(I + C^{-1} G G^H)` for Hermitian positive definite `C`.
/// Returns `None` if `C` is not positive definite.
pub fn log2_det_ratio<T: Real>(cov: &CMatrix<T>, signal: &CMatrix<T>) -> Option<T> {
    let chol = Cholesky::new(cov.clone())?;
    let x = chol.l().solve_lower_triangular(signal)?;
    let n = cov.nrows();
    let m = CMatrix::<T>::identity(n, n) + &x * x.adjoint();
    let l = Cholesky::new(m)?.l();
    let ln_det = (0..n).fold(T::zero(), |acc, i| acc + re(l[(i, i)]).ln());
    Some((ln_det + ln_det) / T::ln_2())
}

/// Spectral efficiency of `user`, interference included.
pub fn spectral_efficiency<T: Real>(
    user: usize,
    combiners: &[CMatrix<T>],
    channels: &ChannelRealization<T>,
    beamformers: &[CMatrix<T>],
    noise_power: T,
) -> Result<T> {
    rate(user, combiners, channels, beamformers, noise_power, InterferenceMode::Included)
}

fn rate<T: Real>(
    user: usize,
    combiners: &[CMatrix<T>],
    channels: &ChannelRealization<T>,
    beamformers: &[CMatrix<T>],
    noise_power: T,
    mode: InterferenceMode,
) -> Result<T> {
    let c = cov(user, combiners, channels, beamformers, noise_power, mode)?;
    let g = combiners[user].adjoint() * channels.matrix(user) * &beamformers[user];
    let r = log2_det_ratio(&c, &g).ok_or(Error::SingularCovariance { user })?;
    Ok(r.max(T::zero()))
}

/// Per-user, mean and sum spectral efficiency plus interference diagnostics.
pub fn evaluate<T: Real>(
    channels: &ChannelRealization<T>,
    combiners: &[CMatrix<T>],
    beamformers: &[CMatrix<T>],
    noise_power: T,
    mode: InterferenceMode,
) -> Result<RateReport<T>> {
    let k = channels.n_users();
    let mut per_user_se = Vec::with_capacity(k);
    let mut iui_power = Vec::with_capacity(k);
    let mut desired_power = Vec::with_capacity(k);
    for user in 0..k {
        per_user_se.push(rate(user, combiners, channels, beamformers, noise_power, mode)?);
        let wh = combiners[user].adjoint() * channels.matrix(user);
        let mut iui = T::zero();
        for (i, f) in beamformers.iter().enumerate() {
            let p = fro2(&(&wh * f));
            if i == user {
                desired_power.push(p);
            } else {
                iui += p;
            }
        }
        iui_power.push(iui);
    }
    let sum_se = per_user_se.iter().fold(T::zero(), |a, b| a + *b);
    let mean_se = sum_se / T::lit(k as f64);
    Ok(RateReport { per_user_se, mean_se, sum_se, iui_power, desired_power })
}
