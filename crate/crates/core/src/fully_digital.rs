//! Stage 1: interference-free fully-digital design.
//!
//! Each user's channel is diagonalized by its SVD, `H_k = U_k D_k V_k^H`. The
//! beamformer is `V_k(:, 1:N_s) P_k^{1/2}` and the combiner `U_k(:, 1:N_s)`,
//! with the diagonal `P_k` obtained by one waterfilling pass over all
//! `K N_s` streams under the joint budget `sum_k Tr(P_k) = P`.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::svd;
use crate::scalar::{abs2, cplx, unit_phase, CMatrix, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct FullyDigitalSolution<T: Real> {
    /// `N_T x N_s` per user.
    pub beamformers: Vec<CMatrix<T>>,
    /// `N_R x N_s` per user, orthonormal columns.
    pub combiners: Vec<CMatrix<T>>,
    pub stream_powers: Vec<Vec<T>>,
    /// `P_k = Tr(P_k)`.
    pub user_powers: Vec<T>,
    /// Leading `N_s` singular values of each channel, decreasing.
    pub singular_values: Vec<Vec<T>>,
}

/// Joint waterfilling: `p_i = max(0, level - noise / g_i)`, with the water
/// level chosen so the powers sum to `total_power`.
///
/// The active set is found in closed form by scanning the gains in
/// decreasing order; zero gains never receive power.
pub fn waterfill<T: Real>(gains: &[T], total_power: T, noise_power: T) -> Result<Vec<T>> {
    if !(noise_power > T::zero()) {
        return Err(Error::InvalidNoise);
    }
    if !(total_power > T::zero()) {
        return Err(Error::Config { key: "total_power", reason: "must be positive".into() });
    }
    if gains.iter().any(|g| !(*g >= T::zero())) {
        return Err(Error::Config { key: "gains", reason: "must be nonnegative".into() });
    }
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > T::zero()).collect();
    if order.is_empty() {
        return Err(Error::NoUsableStream);
    }
    // Stable sort: equal gains keep index order.
    order.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap());

    let floor = |i: usize| noise_power / gains[i];
    let mut active = 1;
    let mut floor_sum = floor(order[0]);
    let mut level = total_power + floor_sum;
    for m in 2..=order.len() {
        let next = floor(order[m - 1]);
        let candidate = (total_power + floor_sum + next) / T::lit(m as f64);
        if candidate > next {
            active = m;
            floor_sum += next;
            level = candidate;
        } else {
            break;
        }
    }
    let mut powers = vec![T::zero(); gains.len()];
    for &i in &order[..active] {
        powers[i] = (level - floor(i)).max(T::zero());
    }
    Ok(powers)
}

/// Per-user SVD beamformers and combiners with joint waterfilling.
pub fn svd_stage<T: Real>(
    channels: &ChannelRealization<T>,
    n_streams: usize,
    total_power: T,
    noise_power: T,
) -> Result<FullyDigitalSolution<T>> {
    if n_streams == 0 || n_streams > channels.n_rx() || n_streams > channels.n_tx() {
        return Err(Error::Dimension(format!(
            "{n_streams} streams for {}x{} channels",
            channels.n_rx(),
            channels.n_tx()
        )));
    }
    let k_users = channels.n_users();
    let mut lefts = Vec::with_capacity(k_users);
    let mut rights = Vec::with_capacity(k_users);
    let mut singular_values = Vec::with_capacity(k_users);
    for (k, h) in channels.matrices().enumerate() {
        let s = svd(h)?;
        let sv = &s.singular_values;
        if !(sv[0] > T::zero()) || sv[n_streams - 1] <= T::rank_tol() * sv[0] {
            return Err(Error::DegenerateChannel { user: k, streams: n_streams });
        }
        let mut u = s.u.columns(0, n_streams).into_owned();
        let mut v = s.v_t.rows(0, n_streams).adjoint();
        // Make the largest-magnitude entry of each right-singular vector real
        // positive; rotate the paired left vector identically.
        for j in 0..n_streams {
            let mut best = 0;
            let mut best_mag = T::zero();
            for i in 0..v.nrows() {
                let m = abs2(v[(i, j)]);
                if m > best_mag {
                    best_mag = m;
                    best = i;
                }
            }
            let rot = unit_phase(v[(best, j)]).conj();
            v.column_mut(j).iter_mut().for_each(|z| *z *= rot);
            u.column_mut(j).iter_mut().for_each(|z| *z *= rot);
            v[(best, j)].im = T::zero();
        }
        lefts.push(u);
        rights.push(v);
        singular_values.push(sv[..n_streams].to_vec());
    }

    let gains: Vec<T> = singular_values.iter().flatten().map(|s| *s * *s).collect();
    let powers = waterfill(&gains, total_power, noise_power)?;
    let stream_powers: Vec<Vec<T>> = powers.chunks(n_streams).map(|c| c.to_vec()).collect();
    let user_powers = stream_powers.iter().map(|p| p.iter().fold(T::zero(), |a, b| a + *b)).collect();

    let beamformers = rights
        .iter()
        .zip(&stream_powers)
        .map(|(v, p)| {
            let mut f = v.clone();
            for (j, pj) in p.iter().enumerate() {
                let s = cplx(pj.sqrt(), T::zero());
                f.column_mut(j).iter_mut().for_each(|z| *z *= s);
            }
            f
        })
        .collect();

    Ok(FullyDigitalSolution { beamformers, combiners: lefts, stream_powers, user_powers, singular_values })
}

impl<T: Real> FullyDigitalSolution<T> {
    pub fn n_users(&self) -> usize {
        self.beamformers.len()
    }

    pub fn total_power(&self) -> T {
        self.user_powers.iter().fold(T::zero(), |a, b| a + *b)
    }

    /// `W_k^H H_k F_k` for each user (diagonal for a correct solution).
    pub fn effective_channels(&self, channels: &ChannelRealization<T>) -> Vec<CMatrix<T>> {
        (0..self.n_users()).map(|k| self.combiners[k].adjoint() * channels.matrix(k) * &self.beamformers[k]).collect()
    }
}
