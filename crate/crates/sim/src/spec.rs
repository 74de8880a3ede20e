//! Experiment description and its flat `key = value` configuration format.
//!
//! ```text
//! # comment
//! n_tx = 64
//! n_users = 6
//! target_snr_db = 10
//! sweep = snr=-10:5:20
//! methods = dynamic,fixed,fully_digital
//! out = results.csv
//! ```
//!
//! Keys given on the command line replace keys from the file. Unknown keys,
//! repeated keys and setting both `noise_power_dbm` and `target_snr_db` are
//! errors.

use crate::{Result, SimError};
use hbf_core::channel::{ClusterChannelParams, PathLossModel};
use hbf_core::dynamic_hybrid::Stage2Options;
use hbf_core::pipeline::Method;
use hbf_core::{NoiseSpec, SnrMode, SystemConfig};
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

/// The parameter varied across sweep points.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    None,
    SnrDb(Vec<f64>),
    Users(Vec<usize>),
    Antennas(Vec<usize>),
}

impl Sweep {
    /// Column label used in the CSV.
    pub fn label(&self) -> &'static str {
        match self {
            Sweep::None => "none",
            Sweep::SnrDb(_) => "snr_db",
            Sweep::Users(_) => "n_users",
            Sweep::Antennas(_) => "n_tx",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::None => 1,
            Sweep::SnrDb(v) => v.len(),
            Sweep::Users(v) => v.len(),
            Sweep::Antennas(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, index: usize) -> f64 {
        match self {
            Sweep::None => 0.0,
            Sweep::SnrDb(v) => v[index],
            Sweep::Users(v) => v[index] as f64,
            Sweep::Antennas(v) => v[index] as f64,
        }
    }

    /// System configuration at sweep point `index`.
    pub fn apply(&self, base: &SystemConfig, index: usize) -> SystemConfig {
        let mut cfg = base.clone();
        match self {
            Sweep::None => {}
            Sweep::SnrDb(v) => cfg.noise = NoiseSpec::TargetSnrDb(v[index]),
            Sweep::Users(v) => cfg.n_users = v[index],
            Sweep::Antennas(v) => cfg.n_tx = v[index],
        }
        cfg
    }

    fn canonical(&self) -> String {
        fn join<T: Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        match self {
            Sweep::None => "none".into(),
            Sweep::SnrDb(v) => format!("snr={}", join(v)),
            Sweep::Users(v) => format!("users={}", join(v)),
            Sweep::Antennas(v) => format!("ntx={}", join(v)),
        }
    }
}

fn parse_list<T: FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(',').map(|x| x.trim().parse().ok()).collect()
}

/// Inclusive `start:step:stop` range, or a comma-separated list.
fn parse_snr_values(s: &str) -> Option<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, step, b] => {
            let (a, step, b): (f64, f64, f64) =
                (a.trim().parse().ok()?, step.trim().parse().ok()?, b.trim().parse().ok()?);
            if !(step > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
                return None;
            }
            let n = ((b - a) / step + 1e-9).floor() as usize + 1;
            Some((0..n).map(|i| a + step * i as f64).collect())
        }
        [_] => parse_list(s),
        _ => None,
    }
}

impl FromStr for Sweep {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "none" {
            return Ok(Sweep::None);
        }
        let bad = || SimError::config("sweep", format!("cannot parse `{s}`"));
        let (name, values) = s.split_once('=').ok_or_else(bad)?;
        let sweep = match name.trim() {
            "snr" => Sweep::SnrDb(parse_snr_values(values).ok_or_else(bad)?),
            "users" => Sweep::Users(parse_list(values).ok_or_else(bad)?),
            "ntx" => Sweep::Antennas(parse_list(values).ok_or_else(bad)?),
            _ => return Err(bad()),
        };
        if sweep.is_empty() {
            return Err(bad());
        }
        Ok(sweep)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub channel: ClusterChannelParams,
    pub path_loss: PathLossModel,
    pub snr_mode: SnrMode,
    pub methods: Vec<Method>,
    pub sweep: Sweep,
    pub trials: usize,
    pub master_seed: u64,
    pub stage2: Stage2Options<f64>,
    pub output_path: PathBuf,
    pub trace_dir: Option<PathBuf>,
    /// Worker threads; 0 picks the number of cores.
    pub threads: usize,
    /// Fill the `wall_time_ms` column (makes output nondeterministic).
    pub timing: bool,
}

impl ExperimentSpec {
    /// Spec with default parameters writing to `output_path`.
    pub fn new(output_path: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            base: SystemConfig::default(),
            channel: ClusterChannelParams::default(),
            path_loss: PathLossModel::Unity,
            snr_mode: SnrMode::Nominal,
            methods: Method::ALL.to_vec(),
            sweep: Sweep::None,
            trials: 1,
            master_seed: 0,
            stage2: Stage2Options::default(),
            output_path: output_path.into(),
            trace_dir: None,
            threads: 0,
            timing: false,
        }
    }

    /// Checks the spec at every sweep point.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(SimError::config("trials", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(SimError::config("methods", "no method selected"));
        }
        if matches!(self.sweep, Sweep::SnrDb(_)) && matches!(self.base.noise, NoiseSpec::PowerDbm(_)) {
            return Err(SimError::config("sweep", "an SNR sweep conflicts with noise_power_dbm"));
        }
        if !(self.stage2.tolerance > 0.0) || self.stage2.max_iters == 0 {
            return Err(SimError::config("tolerance", "tolerance and max_iters must be positive"));
        }
        self.channel.validate().map_err(core_config)?;
        for i in 0..self.sweep.len() {
            let cfg = self.sweep.apply(&self.base, i);
            cfg.validate().map_err(core_config)?;
            if self.methods.contains(&Method::Fixed) && !cfg.n_tx.is_multiple_of(cfg.n_rf) {
                return Err(SimError::config(
                    "n_rf",
                    format!("fixed subarrays need n_tx ({}) divisible by n_rf ({})", cfg.n_tx, cfg.n_rf),
                ));
            }
        }
        Ok(())
    }

    /// The resolved spec as `key = value` lines, in a fixed order.
    pub fn echo(&self) -> Vec<String> {
        let b = &self.base;
        let mut lines = vec![
            format!("n_tx = {}", b.n_tx),
            format!("n_rf = {}", b.n_rf),
            format!("n_rx = {}", b.n_rx),
            format!("n_users = {}", b.n_users),
            format!("n_streams = {}", b.n_streams),
            format!("total_power_dbm = {}", b.total_power_dbm),
            match b.noise {
                NoiseSpec::PowerDbm(v) => format!("noise_power_dbm = {v}"),
                NoiseSpec::TargetSnrDb(v) => format!("target_snr_db = {v}"),
            },
            format!("snr_mode = {}", self.snr_mode.as_str()),
            format!("carrier_hz = {}", b.carrier_hz),
            format!("antenna_spacing = {}", b.antenna_spacing_wavelengths),
            format!("n_clusters = {}", self.channel.n_clusters),
            format!("n_rays = {}", self.channel.n_rays),
            format!("angular_spread_deg = {}", self.channel.angular_spread_rad.to_degrees()),
        ];
        match self.path_loss {
            PathLossModel::Unity => lines.push("path_loss = unity".into()),
            PathLossModel::LogDistance { exponent, reference_loss_db, cell_radius_m } => {
                lines.push("path_loss = log_distance".into());
                lines.push(format!("path_loss_exponent = {exponent}"));
                lines.push(format!("path_loss_ref_db = {reference_loss_db}"));
                lines.push(format!("cell_radius_m = {cell_radius_m}"));
            }
        }
        lines.extend([
            format!("methods = {}", self.methods.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(",")),
            format!("sweep = {}", self.sweep.canonical()),
            format!("trials = {}", self.trials),
            format!("seed = {}", self.master_seed),
            format!("tolerance = {}", self.stage2.tolerance),
            format!("max_iters = {}", self.stage2.max_iters),
        ]);
        lines
    }
}

fn core_config(e: hbf_core::Error) -> SimError {
    match e {
        hbf_core::Error::Config { key, reason } => SimError::config(key, reason),
        other => other.into(),
    }
}

struct Entries {
    map: BTreeMap<String, String>,
}

impl Entries {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| SimError::config(key, format!("`{v}`: {e}"))),
        }
    }
}

/// Builds a spec from configuration text and `(key, value)` overrides.
pub fn parse_spec(text: &str, overrides: &[(String, String)]) -> Result<ExperimentSpec> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| SimError::config("config", format!("line {}: expected `key = value`", n + 1)))?;
        let k = k.trim().to_string();
        if map.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(SimError::config(&k, format!("line {}: key repeated", n + 1)));
        }
    }
    for (k, v) in overrides {
        map.insert(k.clone(), v.clone());
    }
    let mut e = Entries { map };

    let mut spec = ExperimentSpec::new(PathBuf::new());
    let b = &mut spec.base;
    macro_rules! set {
        ($field:expr, $key:literal) => {
            if let Some(v) = e.take($key)? {
                $field = v;
            }
        };
    }
    set!(b.n_tx, "n_tx");
    set!(b.n_rf, "n_rf");
    set!(b.n_rx, "n_rx");
    set!(b.n_users, "n_users");
    set!(b.n_streams, "n_streams");
    set!(b.total_power_dbm, "total_power_dbm");
    set!(b.carrier_hz, "carrier_hz");
    set!(b.antenna_spacing_wavelengths, "antenna_spacing");
    match (e.take::<f64>("noise_power_dbm")?, e.take::<f64>("target_snr_db")?) {
        (Some(_), Some(_)) => {
            return Err(SimError::config("noise_power_dbm", "set either noise_power_dbm or target_snr_db, not both"))
        }
        (Some(n), None) => b.noise = NoiseSpec::PowerDbm(n),
        (None, Some(s)) => b.noise = NoiseSpec::TargetSnrDb(s),
        (None, None) => {}
    }
    set!(spec.snr_mode, "snr_mode");
    set!(spec.channel.n_clusters, "n_clusters");
    set!(spec.channel.n_rays, "n_rays");
    if let Some(deg) = e.take::<f64>("angular_spread_deg")? {
        spec.channel.angular_spread_rad = deg.to_radians();
    }
    let exponent = e.take::<f64>("path_loss_exponent")?;
    let reference = e.take::<f64>("path_loss_ref_db")?;
    let radius = e.take::<f64>("cell_radius_m")?;
    match e.take::<String>("path_loss")?.as_deref() {
        None | Some("unity") => {
            if exponent.is_some() || reference.is_some() || radius.is_some() {
                return Err(SimError::config("path_loss", "log-distance parameters need path_loss = log_distance"));
            }
        }
        Some("log_distance") => {
            let exponent = exponent.unwrap_or(2.0);
            let reference_loss_db =
                reference.unwrap_or_else(|| PathLossModel::free_space_reference_db(spec.base.carrier_hz));
            let cell_radius_m = radius.unwrap_or(100.0);
            if !(exponent >= 0.0) || !(cell_radius_m > 0.0) || !reference_loss_db.is_finite() {
                return Err(SimError::config("path_loss", "exponent >= 0 and cell_radius_m > 0 required"));
            }
            spec.path_loss = PathLossModel::LogDistance { exponent, reference_loss_db, cell_radius_m };
        }
        Some(other) => return Err(SimError::config("path_loss", format!("unknown model `{other}`"))),
    }
    if let Some(m) = e.take::<String>("methods")? {
        let mut methods = Vec::new();
        for name in m.split(',') {
            let method: Method = name.trim().parse().map_err(core_config)?;
            if !methods.contains(&method) {
                methods.push(method);
            }
        }
        spec.methods = methods;
    }
    if let Some(s) = e.map.remove("sweep") {
        spec.sweep = s.parse()?;
    }
    set!(spec.trials, "trials");
    set!(spec.master_seed, "seed");
    set!(spec.stage2.tolerance, "tolerance");
    set!(spec.stage2.max_iters, "max_iters");
    set!(spec.threads, "threads");
    set!(spec.timing, "timing");
    spec.trace_dir = e.take::<PathBuf>("trace_dir")?;
    spec.output_path = e.take::<PathBuf>("out")?.ok_or_else(|| SimError::config("out", "missing required key"))?;

    if let Some(unknown) = e.map.keys().next() {
        return Err(SimError::config(unknown, "unknown key"));
    }
    spec.validate()?;
    Ok(spec)
}
