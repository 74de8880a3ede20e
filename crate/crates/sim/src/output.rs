use crate::run::{Aggregate, SweepResult, TrialRecord};
use crate::spec::ExperimentSpec;
use crate::{Result, SimError};
use hbf_core::dynamic_hybrid::TraceEntry;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const CSV_VERSION: &str = "hbf-sim csv v1";

pub const COLUMNS: [&str; 16] = [
    "kind",
    "sweep",
    "sweep_value",
    "trial",
    "method",
    "snr_mode",
    "mean_se",
    "sum_se",
    "per_user_se",
    "approx_error",
    "iterations",
    "n_rf0_first",
    "wall_time_ms",
    "n_included",
    "n_excluded",
    "error",
];

pub const TRACE_COLUMNS: [&str; 4] = ["iter", "delta1", "delta2", "n_rf0"];

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T>(x: Option<T>, f: impl Fn(T) -> String) -> String {
    x.map(f).unwrap_or_default()
}

fn record_row(spec: &ExperimentSpec, r: &TrialRecord) -> Vec<String> {
    let head = vec![
        "trial".to_string(),
        spec.sweep.label().to_string(),
        num(r.sweep_value),
        r.trial.to_string(),
        r.method.to_string(),
        spec.snr_mode.as_str().to_string(),
    ];
    let tail = match &r.outcome {
        Ok(m) => vec![
            num(m.mean_se),
            num(m.sum_se),
            m.per_user_se.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";"),
            opt(m.approx_error, num),
            opt(m.iterations, |i| i.to_string()),
            opt(m.n_rf0_first, |i| i.to_string()),
            opt(m.wall_time_ms, num),
            "1".into(),
            "0".into(),
            String::new(),
        ],
        Err(e) => {
            let mut v = vec![String::new(); 7];
            v.extend(["0".into(), "1".into(), e.clone()]);
            v
        }
    };
    head.into_iter().chain(tail).collect()
}

fn aggregate_row(spec: &ExperimentSpec, a: &Aggregate) -> Vec<String> {
    vec![
        "mean".into(),
        spec.sweep.label().into(),
        num(a.sweep_value),
        String::new(),
        a.method.to_string(),
        spec.snr_mode.as_str().into(),
        num(a.mean_se),
        num(a.sum_se),
        String::new(),
        opt(a.approx_error, num),
        opt(a.iterations, num),
        String::new(),
        String::new(),
        a.n_included.to_string(),
        a.n_excluded.to_string(),
        String::new(),
    ]
}

/// Header comments, the column row, one row per trial record, then one mean
/// row per (sweep point, method).
pub fn write_csv<W: Write>(spec: &ExperimentSpec, result: &SweepResult, mut out: W) -> Result<()> {
    let io = |e| SimError::io(&spec.output_path, e);
    writeln!(out, "# {CSV_VERSION}").map_err(io)?;
    for line in spec.echo() {
        writeln!(out, "# {line}").map_err(io)?;
    }
    let excluded: usize = result.aggregates.iter().map(|a| a.n_excluded).sum();
    writeln!(out, "# excluded_trials = {excluded}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in &result.records {
        w.write_record(record_row(spec, r))?;
    }
    for a in &result.aggregates {
        w.write_record(aggregate_row(spec, a))?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

pub fn write_trace<W: Write>(trace: &[TraceEntry<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for t in trace {
        w.write_record([t.iter.to_string(), num(t.delta1), num(t.delta2), t.n_rf0.to_string()])?;
    }
    w.flush().map_err(|e| SimError::io("trace", e))?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| SimError::io(path, e))
}

/// Writes the results CSV and, if a trace directory is set, one trace file
/// per hybrid record. Returns the trace paths.
pub fn write_outputs(spec: &ExperimentSpec, result: &SweepResult) -> Result<Vec<PathBuf>> {
    write_csv(spec, result, create(&spec.output_path)?)?;
    let Some(dir) = &spec.trace_dir else { return Ok(Vec::new()) };
    let mut paths = Vec::new();
    for r in result.records.iter().filter(|r| !r.trace.is_empty()) {
        let path = dir.join(format!("trace_{}_s{}_t{}.csv", r.method, r.sweep_index, r.trial));
        write_trace(&r.trace, create(&path)?)?;
        paths.push(path);
    }
    Ok(paths)
}
