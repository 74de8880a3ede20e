//! Dimensional and physical parameters of the downlink system.

use crate::error::{Error, Result};

/// How the receiver noise level is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    /// Absolute noise power per receive antenna, in dBm.
    PowerDbm(f64),
    /// Target signal-to-noise ratio in dB; the noise power is derived from it.
    TargetSnrDb(f64),
}

/// Convention used to turn a target SNR into a noise power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrMode {
    /// `sigma^2 = P / SNR`: path loss is absorbed into the SNR.
    #[default]
    Nominal,
    /// `sigma^2 = P_rx / SNR` with `P_rx` the mean per-antenna received
    /// power under isotropic transmission, `(1/K) sum_k P ||H_k||_F^2 / (N_T N_R)`.
    ReceivedPower,
}

impl SnrMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SnrMode::Nominal => "nominal",
            SnrMode::ReceivedPower => "received_power",
        }
    }
}

impl std::str::FromStr for SnrMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nominal" => Ok(SnrMode::Nominal),
            "received_power" => Ok(SnrMode::ReceivedPower),
            other => Err(format!("unknown snr mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Base-station antennas.
    pub n_tx: usize,
    /// Transmit RF chains.
    pub n_rf: usize,
    /// Antennas per user.
    pub n_rx: usize,
    pub n_users: usize,
    /// Data streams per user.
    pub n_streams: usize,
    pub total_power_dbm: f64,
    pub noise: NoiseSpec,
    pub carrier_hz: f64,
    pub antenna_spacing_wavelengths: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_tx: 64,
            n_rf: 16,
            n_rx: 4,
            n_users: 6,
            n_streams: 2,
            total_power_dbm: 30.0,
            noise: NoiseSpec::TargetSnrDb(10.0),
            carrier_hz: 28e9,
            antenna_spacing_wavelengths: 0.5,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SystemConfig {
    /// Checks `K N_s <= N_RF <= N_T`, `N_s <= N_R` and positivity.
    pub fn validate(&self) -> Result<()> {
        let dims: [(&'static str, usize); 5] = [
            ("n_tx", self.n_tx),
            ("n_rf", self.n_rf),
            ("n_rx", self.n_rx),
            ("n_users", self.n_users),
            ("n_streams", self.n_streams),
        ];
        for (key, v) in dims {
            if v == 0 {
                return Err(Error::Config { key, reason: "must be at least 1".into() });
            }
        }
        let total_streams = self.n_users * self.n_streams;
        if total_streams > self.n_rf {
            return Err(Error::Config {
                key: "n_rf",
                reason: format!("n_users * n_streams = {total_streams} exceeds n_rf = {}", self.n_rf),
            });
        }
        if self.n_rf > self.n_tx {
            return Err(Error::Config {
                key: "n_rf",
                reason: format!("n_rf = {} exceeds n_tx = {}", self.n_rf, self.n_tx),
            });
        }
        if self.n_streams > self.n_rx {
            return Err(Error::Config {
                key: "n_streams",
                reason: format!("n_streams = {} exceeds n_rx = {}", self.n_streams, self.n_rx),
            });
        }
        if !self.total_power_dbm.is_finite() {
            return Err(Error::Config { key: "total_power_dbm", reason: "must be finite".into() });
        }
        match self.noise {
            NoiseSpec::PowerDbm(v) if !v.is_finite() => {
                return Err(Error::Config { key: "noise_power_dbm", reason: "must be finite".into() })
            }
            NoiseSpec::TargetSnrDb(v) if !v.is_finite() => {
                return Err(Error::Config { key: "target_snr_db", reason: "must be finite".into() })
            }
            _ => {}
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::Config { key: "carrier_hz", reason: "must be positive".into() });
        }
        if !(self.antenna_spacing_wavelengths > 0.0) {
            return Err(Error::Config { key: "antenna_spacing_wavelengths", reason: "must be positive".into() });
        }
        Ok(())
    }

    /// Total transmit power `P` in watts.
    pub fn total_power(&self) -> f64 {
        dbm_to_watts(self.total_power_dbm)
    }

    /// Noise power in watts. `received_power` is the per-antenna received
    /// power used by [`SnrMode::ReceivedPower`]; it is ignored otherwise.
    pub fn noise_power(&self, mode: SnrMode, received_power: f64) -> f64 {
        match self.noise {
            NoiseSpec::PowerDbm(dbm) => dbm_to_watts(dbm),
            NoiseSpec::TargetSnrDb(snr) => {
                let reference = match mode {
                    SnrMode::Nominal => self.total_power(),
                    SnrMode::ReceivedPower => received_power,
                };
                reference / db_to_linear(snr)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SystemConfig::default().validate().unwrap();
        assert!((SystemConfig::default().total_power() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_many_streams_rejected() {
        let cfg = SystemConfig { n_users: 9, ..Default::default() };
        match cfg.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "n_rf"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn streams_above_receive_antennas_rejected() {
        let cfg = SystemConfig { n_rx: 1, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config { key: "n_streams", .. })));
    }

    #[test]
    fn zero_dimension_rejected() {
        let cfg = SystemConfig { n_tx: 0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config { key: "n_tx", .. })));
    }

    #[test]
    fn nominal_noise_from_snr() {
        let cfg = SystemConfig::default();
        assert!((cfg.noise_power(SnrMode::Nominal, 0.0) - 0.1).abs() < 1e-15);
        assert!((cfg.noise_power(SnrMode::ReceivedPower, 2.0) - 0.2).abs() < 1e-15);
    }
}
