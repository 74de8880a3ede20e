//! End-to-end design for one channel realization.

use crate::channel::ChannelRealization;
use crate::config::{SnrMode, SystemConfig};
use crate::dynamic_hybrid::{alternate_stage2, fixed_subarray_stage2, HybridSolution, Stage2Options};
use crate::error::{Error, Result};
use crate::fully_digital::{svd_stage, FullyDigitalSolution};
use crate::metrics::{evaluate, InterferenceMode, RateReport};
use crate::nsp::project_digital;
use crate::scalar::{fro2, Real};
use rand::Rng;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Dynamic,
    Fixed,
    FullyDigital,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dynamic, Method::Fixed, Method::FullyDigital];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dynamic => "dynamic",
            Method::Fixed => "fixed",
            Method::FullyDigital => "fully_digital",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config { key: "methods", reason: format!("unknown method `{s}`") })
    }
}

/// Received power per antenna averaged over users, for an isotropic transmit
/// covariance of total power `P`: `(1/K) sum_k P ||H_k||_F^2 / (N_T N_R)`.
pub fn isotropic_received_power<T: Real>(channels: &ChannelRealization<T>, total_power: f64) -> f64 {
    let k = channels.n_users() as f64;
    let scale = total_power / (channels.n_tx() * channels.n_rx()) as f64;
    channels.matrices().map(|h| fro2(h).to_f64_lossy() * scale).sum::<f64>() / k
}

/// Stage 1 together with the noise power it was computed for.
#[derive(Debug, Clone)]
pub struct Stage1<T: Real> {
    pub solution: FullyDigitalSolution<T>,
    pub noise_power: T,
}

pub fn run_stage1<T: Real>(cfg: &SystemConfig, mode: SnrMode, channels: &ChannelRealization<T>) -> Result<Stage1<T>> {
    let received = match mode {
        SnrMode::Nominal => 0.0,
        SnrMode::ReceivedPower => isotropic_received_power(channels, cfg.total_power()),
    };
    let noise = cfg.noise_power(mode, received);
    if !(noise > 0.0) || !noise.is_finite() {
        return Err(Error::InvalidNoise);
    }
    let noise_power = T::lit(noise);
    let solution = svd_stage(channels, cfg.n_streams, T::lit(cfg.total_power()), noise_power)?;
    Ok(Stage1 { solution, noise_power })
}

#[derive(Debug, Clone)]
pub struct MethodOutcome<T: Real> {
    pub method: Method,
    pub report: RateReport<T>,
    /// Stage-2 result before null-space projection (hybrid methods only).
    pub stage2: Option<HybridSolution<T>>,
    /// Final hybrid design after projection (hybrid methods only).
    pub design: Option<HybridSolution<T>>,
}

/// Runs one method on top of a stage-1 solution. Hybrid methods are evaluated
/// with inter-user interference, the fully-digital reference without.
pub fn run_method<T: Real, R: Rng + ?Sized>(
    method: Method,
    channels: &ChannelRealization<T>,
    stage1: &Stage1<T>,
    n_rf: usize,
    options: Stage2Options<T>,
    rng: &mut R,
) -> Result<MethodOutcome<T>> {
    let fd = &stage1.solution;
    let stage2 = match method {
        Method::FullyDigital => {
            let report =
                evaluate(channels, &fd.combiners, &fd.beamformers, stage1.noise_power, InterferenceMode::Excluded)?;
            return Ok(MethodOutcome { method, report, stage2: None, design: None });
        }
        Method::Dynamic => alternate_stage2(&fd.beamformers, &fd.user_powers, n_rf, options, rng)?,
        Method::Fixed => fixed_subarray_stage2(&fd.beamformers, &fd.user_powers, n_rf, options)?,
    };
    let design = project_digital(&stage2, channels, &fd.combiners, &fd.user_powers)?;
    let report = evaluate(
        channels,
        &fd.combiners,
        &design.overall_beamformers(),
        stage1.noise_power,
        InterferenceMode::Included,
    )?;
    Ok(MethodOutcome { method, report, stage2: Some(stage2), design: Some(design) })
}
