//! Hybrid beamforming for millimeter-wave downlink multiuser MIMO with a
//! dynamic-subarray base station.
//!
//! The design runs in three stages:
//!
//! 1. [`fully_digital`]: per-user SVD beamformers and combiners with joint
//!    waterfilling, ignoring inter-user interference.
//! 2. [`dynamic_hybrid`]: alternating minimization of the gap between the
//!    fully-digital beamformers and `F_RF F_BBk`, where the analog update
//!    uses an unbalanced assignment ([`assignment`]) to keep every RF chain
//!    connected to at least one antenna.
//! 3. [`nsp`]: null-space projection of the digital beamformers to cancel
//!    inter-user interference.
//!
//! [`channel`] draws clustered channels and [`metrics`] evaluates spectral
//! efficiency. Every numerical routine is generic over the real scalar type
//! (`f32` or `f64`); the aliases below fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assignment;
pub mod channel;
pub mod config;
pub mod dynamic_hybrid;
pub mod error;
pub mod fully_digital;
pub mod linalg;
pub mod metrics;
pub mod nsp;
pub mod pipeline;
pub mod scalar;

pub use config::{NoiseSpec, SnrMode, SystemConfig};
pub use error::{Error, Result};
pub use scalar::{CMatrix, CVector, Real};

pub type ChannelRealization64 = channel::ChannelRealization<f64>;
pub type FullyDigitalSolution64 = fully_digital::FullyDigitalSolution<f64>;
pub type HybridSolution64 = dynamic_hybrid::HybridSolution<f64>;
pub type AnalogBeamformer64 = dynamic_hybrid::AnalogBeamformer<f64>;
pub type AssignmentProblem64 = assignment::AssignmentProblem<f64>;
pub type RateReport64 = metrics::RateReport<f64>;
pub type CMatrix64 = CMatrix<f64>;

pub type ChannelRealization32 = channel::ChannelRealization<f32>;
pub type HybridSolution32 = dynamic_hybrid::HybridSolution<f32>;
