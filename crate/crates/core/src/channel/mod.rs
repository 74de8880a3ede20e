//! Narrowband clustered mmWave channels.
//!
//! Each user channel is a sum of `N_c * N_ray` rank-one ray contributions
//!
//! ```text
//! H_k = sqrt(N_T N_R rho_k / (N_c N_ray)) * sum_c sum_r alpha_cr a_r(theta_cr) a_t(phi_cr)^H
//! ```
//!
//! with i.i.d. `CN(0, 1)` gains, uniform cluster mean angles and Laplacian
//! intra-cluster offsets. The ray parameters are kept next to the matrix so a
//! realization can be replayed or re-synthesized exactly.

mod io;

pub use io::{read_channel, read_channel_file, write_channel, write_channel_file};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::scalar::{cplx, czero, expj, fro, CMatrix, CVector, Real};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Normalized uniform-linear-array steering vector
/// `(1/sqrt(N)) [1, e^{j 2 pi d sin(theta)}, ..., e^{j 2 pi d (N-1) sin(theta)}]`.
pub fn array_response<T: Real>(n_antennas: usize, angle_rad: T, spacing_wavelengths: T) -> CVector<T> {
    let norm = T::one() / T::lit(n_antennas as f64).sqrt();
    let step = T::two_pi() * spacing_wavelengths * angle_rad.sin();
    DVector::from_fn(n_antennas, |n, _| {
        let ph = expj(step * T::lit(n as f64));
        cplx(ph.re * norm, ph.im * norm)
    })
}

/// Per-user cluster parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterChannelParams {
    pub n_clusters: usize,
    pub n_rays: usize,
    /// Standard deviation of the Laplacian intra-cluster angle offset.
    pub angular_spread_rad: f64,
    /// Linear path gain. Zero yields an all-zero channel.
    pub path_loss_linear: f64,
    /// Interval the cluster mean angles are drawn from, `[lo, hi)`.
    pub mean_angle_range: (f64, f64),
}

impl Default for ClusterChannelParams {
    fn default() -> Self {
        ClusterChannelParams {
            n_clusters: 6,
            n_rays: 15,
            angular_spread_rad: 10f64.to_radians(),
            path_loss_linear: 1.0,
            mean_angle_range: (0.0, 2.0 * PI),
        }
    }
}

impl ClusterChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 {
            return Err(Error::Config { key: "n_clusters", reason: "must be at least 1".into() });
        }
        if self.n_rays == 0 {
            return Err(Error::Config { key: "n_rays", reason: "must be at least 1".into() });
        }
        if !(self.angular_spread_rad >= 0.0) || !self.angular_spread_rad.is_finite() {
            return Err(Error::Config { key: "angular_spread", reason: "must be finite and nonnegative".into() });
        }
        if !(self.path_loss_linear >= 0.0) || !self.path_loss_linear.is_finite() {
            return Err(Error::Config { key: "path_loss", reason: "must be finite and nonnegative".into() });
        }
        let (lo, hi) = self.mean_angle_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config {
                key: "mean_angle_range",
                reason: "must be a finite interval with lo <= hi".into(),
            });
        }
        Ok(())
    }
}

/// Per-user path-loss draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathLossModel {
    /// Unit path gain; path loss is folded into the SNR.
    Unity,
    /// `PL(d) = reference_loss_db + 10 * exponent * log10(d / 1 m)` with the
    /// user distance uniform on `(0, cell_radius_m]`.
    LogDistance { exponent: f64, reference_loss_db: f64, cell_radius_m: f64 },
}

impl PathLossModel {
    /// Free-space loss at 1 m for the given carrier, a common reference value.
    pub fn free_space_reference_db(carrier_hz: f64) -> f64 {
        const C: f64 = 299_792_458.0;
        20.0 * (4.0 * PI * carrier_hz / C).log10()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            PathLossModel::Unity => 1.0,
            PathLossModel::LogDistance { exponent, reference_loss_db, cell_radius_m } => {
                // (0, R]: 1 - U[0,1) lies in (0, 1].
                let d = cell_radius_m * (1.0 - rng.random::<f64>());
                let loss_db = reference_loss_db + 10.0 * exponent * d.log10();
                10f64.powf(-loss_db / 10.0)
            }
        }
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray<T> {
    pub cluster: usize,
    pub gain: Complex<T>,
    /// Angle of departure at the base station.
    pub aod: T,
    /// Angle of arrival at the user.
    pub aoa: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel<T: Real> {
    /// `N_R x N_T` channel matrix.
    pub matrix: CMatrix<T>,
    pub path_loss: T,
    pub n_clusters: usize,
    pub n_rays: usize,
    /// Ray records in generation order; empty if the matrix was imported
    /// without them.
    pub rays: Vec<Ray<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Real> {
    pub seed: Option<u64>,
    pub spacing_wavelengths: T,
    pub users: Vec<UserChannel<T>>,
}

impl<T: Real> ChannelRealization<T> {
    /// Wraps bare matrices (no ray records).
    pub fn from_matrices(matrices: Vec<CMatrix<T>>) -> Result<Self> {
        let (nr, nt) = matrices
            .first()
            .map(|m| m.shape())
            .ok_or_else(|| Error::Dimension("at least one user channel is required".into()))?;
        if matrices.iter().any(|m| m.shape() != (nr, nt)) {
            return Err(Error::Dimension("user channels must share one shape".into()));
        }
        Ok(ChannelRealization {
            seed: None,
            spacing_wavelengths: T::lit(0.5),
            users: matrices
                .into_iter()
                .map(|matrix| UserChannel { matrix, path_loss: T::one(), n_clusters: 0, n_rays: 0, rays: Vec::new() })
                .collect(),
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_rx(&self) -> usize {
        self.users[0].matrix.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.users[0].matrix.ncols()
    }

    pub fn matrix(&self, user: usize) -> &CMatrix<T> {
        &self.users[user].matrix
    }

    pub fn matrices(&self) -> impl Iterator<Item = &CMatrix<T>> {
        self.users.iter().map(|u| &u.matrix)
    }

    /// Re-synthesizes user `k`'s matrix from its stored rays.
    pub fn reconstruct(&self, user: usize) -> CMatrix<T> {
        let u = &self.users[user];
        synthesize(
            u.matrix.nrows(),
            u.matrix.ncols(),
            u.path_loss,
            u.n_clusters,
            u.n_rays,
            &u.rays,
            self.spacing_wavelengths,
        )
    }

    /// Largest relative Frobenius gap between stored matrices and their ray
    /// reconstructions. Zero-norm matrices compare absolutely.
    pub fn reconstruction_error(&self) -> T {
        (0..self.n_users())
            .map(|k| {
                let h = self.matrix(k);
                let gap = fro(&(h - self.reconstruct(k)));
                let n = fro(h);
                if n > T::zero() {
                    gap / n
                } else {
                    gap
                }
            })
            .fold(T::zero(), |a, b| a.max(b))
    }
}

fn synthesize<T: Real>(
    n_rx: usize,
    n_tx: usize,
    path_loss: T,
    n_clusters: usize,
    n_rays: usize,
    rays: &[Ray<T>],
    spacing: T,
) -> CMatrix<T> {
    let mut h = DMatrix::from_element(n_rx, n_tx, czero());
    if rays.is_empty() {
        return h;
    }
    let paths = T::lit((n_clusters * n_rays) as f64);
    let scale = (T::lit((n_tx * n_rx) as f64) * path_loss / paths).sqrt();
    for ray in rays {
        let ar = array_response(n_rx, ray.aoa, spacing);
        let at = array_response(n_tx, ray.aod, spacing);
        let g = ray.gain * cplx(scale, T::zero());
        for c in 0..n_tx {
            let tc = at[c].conj();
            for r in 0..n_rx {
                h[(r, c)] += g * ar[r] * tc;
            }
        }
    }
    h
}

/// Zero-mean Laplacian sample with the given standard deviation.
fn laplacian<R: Rng + ?Sized>(rng: &mut R, std_dev: f64) -> f64 {
    if std_dev == 0.0 {
        return 0.0;
    }
    let b = std_dev / std::f64::consts::SQRT_2;
    let u: f64 = rng.random::<f64>() - 0.5;
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// `CN(0, 1)`: real and imaginary parts i.i.d. `N(0, 1/2)`.
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    (re * s, im * s)
}

fn uniform_in<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draws one channel realization. `params` holds one entry per user.
pub fn generate_channel<T: Real, R: Rng + ?Sized>(
    cfg: &SystemConfig,
    params: &[ClusterChannelParams],
    rng: &mut R,
) -> Result<ChannelRealization<T>> {
    cfg.validate()?;
    if params.len() != cfg.n_users {
        return Err(Error::Dimension(format!("{} cluster parameter sets for {} users", params.len(), cfg.n_users)));
    }
    let spacing = T::lit(cfg.antenna_spacing_wavelengths);
    let mut users = Vec::with_capacity(cfg.n_users);
    for p in params {
        p.validate()?;
        let mut rays = Vec::with_capacity(p.n_clusters * p.n_rays);
        for c in 0..p.n_clusters {
            let mean_aod = uniform_in(rng, p.mean_angle_range);
            let mean_aoa = uniform_in(rng, p.mean_angle_range);
            for _ in 0..p.n_rays {
                let (gr, gi) = complex_gaussian(rng);
                let aod = mean_aod + laplacian(rng, p.angular_spread_rad);
                let aoa = mean_aoa + laplacian(rng, p.angular_spread_rad);
                rays.push(Ray { cluster: c, gain: cplx(T::lit(gr), T::lit(gi)), aod: T::lit(aod), aoa: T::lit(aoa) });
            }
        }
        let path_loss = T::lit(p.path_loss_linear);
        let matrix = synthesize(cfg.n_rx, cfg.n_tx, path_loss, p.n_clusters, p.n_rays, &rays, spacing);
        users.push(UserChannel { matrix, path_loss, n_clusters: p.n_clusters, n_rays: p.n_rays, rays });
    }
    Ok(ChannelRealization { seed: None, spacing_wavelengths: spacing, users })
}
