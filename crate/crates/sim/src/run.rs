use crate::spec::ExperimentSpec;
use crate::{Result, SimError};
use hbf_core::channel::{generate_channel, ClusterChannelParams};
use hbf_core::dynamic_hybrid::TraceEntry;
use hbf_core::pipeline::{run_method, run_stage1, Method, MethodOutcome};
use hbf_core::{ChannelRealization64, SystemConfig};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use std::time::Instant;

/// Independent stream for one (sweep point, trial) pair.
pub fn trial_rng(master_seed: u64, sweep_index: usize, trial: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(((sweep_index as u64) << 32) | trial as u64);
    rng
}

/// Channel and initialization seed of one trial.
#[derive(Debug, Clone)]
pub struct PreparedTrial {
    pub config: SystemConfig,
    pub channel: ChannelRealization64,
    pub init_seed: u64,
}

pub fn prepare_trial(spec: &ExperimentSpec, sweep_index: usize, trial: usize) -> Result<PreparedTrial> {
    let config = spec.sweep.apply(&spec.base, sweep_index);
    let mut rng = trial_rng(spec.master_seed, sweep_index, trial);
    let params: Vec<ClusterChannelParams> = (0..config.n_users)
        .map(|_| ClusterChannelParams { path_loss_linear: spec.path_loss.sample(&mut rng), ..spec.channel.clone() })
        .collect();
    let channel = generate_channel(&config, &params, &mut rng)?;
    let init_seed = rng.next_u64();
    Ok(PreparedTrial { config, channel, init_seed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub mean_se: f64,
    pub sum_se: f64,
    pub per_user_se: Vec<f64>,
    pub approx_error: Option<f64>,
    pub iterations: Option<usize>,
    pub n_rf0_first: Option<usize>,
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub sweep_index: usize,
    pub sweep_value: f64,
    pub trial: usize,
    pub method: Method,
    /// Error text for failed trials.
    pub outcome: std::result::Result<TrialMetrics, String>,
    pub trace: Vec<TraceEntry<f64>>,
}

fn metrics(out: &MethodOutcome<f64>, wall_time_ms: Option<f64>) -> TrialMetrics {
    let stage2 = out.stage2.as_ref();
    TrialMetrics {
        mean_se: out.report.mean_se,
        sum_se: out.report.sum_se,
        per_user_se: out.report.per_user_se.clone(),
        approx_error: stage2.map(|s| s.approximation_error),
        iterations: stage2.map(|s| s.iterations()),
        n_rf0_first: stage2.and_then(|s| s.trace.first()).map(|t| t.n_rf0),
        wall_time_ms,
    }
}

/// One record per selected method. Failures become error-tagged records.
pub fn run_trial(spec: &ExperimentSpec, sweep_index: usize, trial: usize) -> Vec<TrialRecord> {
    let sweep_value = spec.sweep.value(sweep_index);
    let record = |method, outcome, trace| TrialRecord { sweep_index, sweep_value, trial, method, outcome, trace };
    let prepared = prepare_trial(spec, sweep_index, trial).and_then(|p| {
        let s1 = run_stage1(&p.config, spec.snr_mode, &p.channel)?;
        Ok((p, s1))
    });
    let (prepared, stage1) = match prepared {
        Ok(v) => v,
        Err(e) => return spec.methods.iter().map(|&m| record(m, Err(e.to_string()), Vec::new())).collect(),
    };
    spec.methods
        .iter()
        .map(|&method| {
            let mut rng = ChaCha20Rng::seed_from_u64(prepared.init_seed);
            let start = Instant::now();
            let out = run_method(method, &prepared.channel, &stage1, prepared.config.n_rf, spec.stage2, &mut rng);
            let elapsed = spec.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
            match out {
                Ok(o) => {
                    let trace = o.stage2.as_ref().map(|s| s.trace.clone()).unwrap_or_default();
                    record(method, Ok(metrics(&o, elapsed)), trace)
                }
                Err(e) => record(method, Err(e.to_string()), Vec::new()),
            }
        })
        .collect()
}

/// Mean over the successful trials of one (sweep point, method) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub sweep_index: usize,
    pub sweep_value: f64,
    pub method: Method,
    pub mean_se: f64,
    pub sum_se: f64,
    pub approx_error: Option<f64>,
    pub iterations: Option<f64>,
    pub n_included: usize,
    pub n_excluded: usize,
}

/// Sequential reduction over records sorted by (sweep point, trial, method).
pub fn aggregate(records: &[TrialRecord], methods: &[Method]) -> Vec<Aggregate> {
    let n_points = records.iter().map(|r| r.sweep_index + 1).max().unwrap_or(0);
    let mut out = Vec::new();
    for point in 0..n_points {
        for &method in methods {
            let group: Vec<&TrialRecord> =
                records.iter().filter(|r| r.sweep_index == point && r.method == method).collect();
            let Some(first) = group.first() else { continue };
            let ok: Vec<&TrialMetrics> = group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let n = ok.len() as f64;
            let mean = |f: &dyn Fn(&TrialMetrics) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|m| f(m)).sum::<f64>() / n
                }
            };
            let hybrid = ok.first().is_some_and(|m| m.approx_error.is_some());
            out.push(Aggregate {
                sweep_index: point,
                sweep_value: first.sweep_value,
                method,
                mean_se: mean(&|m| m.mean_se),
                sum_se: mean(&|m| m.sum_se),
                approx_error: hybrid.then(|| mean(&|m| m.approx_error.unwrap_or(f64::NAN))),
                iterations: hybrid.then(|| mean(&|m| m.iterations.unwrap_or(0) as f64)),
                n_included: ok.len(),
                n_excluded: group.len() - ok.len(),
            });
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

/// Runs every (sweep point, trial) pair on a bounded pool. The result does not
/// depend on the number of threads.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(spec.threads).build().map_err(|e| SimError::Pool(e.to_string()))?;
    let work: Vec<(usize, usize)> = (0..spec.sweep.len()).flat_map(|s| (0..spec.trials).map(move |t| (s, t))).collect();
    let records: Vec<TrialRecord> =
        pool.install(|| work.par_iter().flat_map_iter(|&(s, t)| run_trial(spec, s, t)).collect());
    let aggregates = aggregate(&records, &spec.methods);
    Ok(SweepResult { records, aggregates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::Sweep;

    fn spec() -> ExperimentSpec {
        let mut s = ExperimentSpec::new("unused.csv");
        s.base = SystemConfig { n_tx: 16, n_rf: 8, n_users: 2, ..SystemConfig::default() };
        s.trials = 3;
        s
    }

    #[test]
    fn streams_are_distinct() {
        let a = trial_rng(1, 0, 0).next_u64();
        assert_ne!(a, trial_rng(1, 0, 1).next_u64());
        assert_ne!(a, trial_rng(1, 1, 0).next_u64());
        assert_ne!(a, trial_rng(2, 0, 0).next_u64());
        assert_eq!(a, trial_rng(1, 0, 0).next_u64());
    }

    #[test]
    fn trial_is_deterministic() {
        let s = spec();
        assert_eq!(run_trial(&s, 0, 2), run_trial(&s, 0, 2));
    }

    #[test]
    fn trial_does_not_depend_on_other_methods() {
        let mut s = spec();
        let all = run_trial(&s, 0, 1);
        s.methods = vec![Method::Dynamic];
        assert_eq!(run_trial(&s, 0, 1)[0], all[0]);
    }

    #[test]
    fn single_user_fully_digital_matches_closed_form() {
        let mut s = spec();
        s.base.n_users = 1;
        s.methods = vec![Method::FullyDigital];
        let rec = run_trial(&s, 0, 0);
        assert_eq!(rec.len(), 1);
        let p = prepare_trial(&s, 0, 0).unwrap();
        let s1 = run_stage1(&p.config, s.snr_mode, &p.channel).unwrap();
        let want: f64 = s1.solution.singular_values[0]
            .iter()
            .zip(&s1.solution.stream_powers[0])
            .map(|(g, q)| (1.0 + g * g * q / s1.noise_power).log2())
            .sum();
        assert!((rec[0].outcome.as_ref().unwrap().mean_se - want).abs() < 1e-10);
    }

    #[test]
    fn failures_are_tagged_and_excluded() {
        let mut s = spec();
        // A single ray per user gives rank-one channels, so two streams fail.
        s.channel.n_clusters = 1;
        s.channel.n_rays = 1;
        let rec = run_trial(&s, 0, 0);
        assert!(rec.iter().all(|r| r.outcome.as_ref().is_err_and(|e| e.contains("user"))));
        let agg = aggregate(&rec, &s.methods);
        assert!(agg.iter().all(|a| a.n_excluded == 1 && a.n_included == 0 && a.mean_se.is_nan()));
    }

    #[test]
    fn sweep_row_counts() {
        let mut s = spec();
        s.sweep = Sweep::SnrDb(vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]);
        s.methods = vec![Method::Dynamic, Method::Fixed];
        s.trials = 10;
        let r = run_sweep(&s).unwrap();
        assert_eq!(r.records.len(), 7 * 2 * 10);
        assert_eq!(r.aggregates.len(), 14);
        assert!(r.aggregates.iter().all(|a| a.n_included == 10));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut s = spec();
        s.sweep = Sweep::Users(vec![1, 2]);
        s.threads = 1;
        let a = run_sweep(&s).unwrap().records;
        s.threads = 3;
        assert_eq!(a, run_sweep(&s).unwrap().records);
    }
}
