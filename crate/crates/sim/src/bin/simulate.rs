use clap::Parser;
use hbf_sim::{emit_plot_script, parse_spec, run_sweep, write_outputs, SimError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Monte-Carlo evaluation of dynamic-subarray hybrid beamforming.
#[derive(Parser, Debug)]
#[command(name = "simulate", version)]
struct Args {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: PathBuf,

    /// Trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,

    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// `snr=START:STEP:STOP`, `snr=a,b,..`, `users=a,b,..`, `ntx=a,b,..` or `none`.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,

    /// Comma-separated subset of dynamic, fixed, fully_digital.
    #[arg(long)]
    methods: Option<String>,

    /// Results CSV.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Directory for per-trial convergence traces.
    #[arg(long)]
    trace_dir: Option<PathBuf>,

    /// Write a gnuplot script for the results.
    #[arg(long)]
    plot_script: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Record per-method wall time.
    #[arg(long)]
    timing: bool,
}

impl Args {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        let mut push = |k: &str, val: Option<String>| {
            if let Some(val) = val {
                v.push((k.to_string(), val));
            }
        };
        push("trials", self.trials.map(|x| x.to_string()));
        push("seed", self.seed.map(|x| x.to_string()));
        push("sweep", self.sweep.clone());
        push("methods", self.methods.clone());
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("trace_dir", self.trace_dir.as_ref().map(|p| p.display().to_string()));
        push("threads", self.threads.map(|x| x.to_string()));
        push("timing", self.timing.then(|| "true".to_string()));
        v
    }
}

fn run(args: &Args) -> Result<(), SimError> {
    let text =
        std::fs::read_to_string(&args.config).map_err(|e| SimError::Io { path: args.config.clone(), source: e })?;
    let spec = parse_spec(&text, &args.overrides())?;
    let result = run_sweep(&spec)?;
    let traces = write_outputs(&spec, &result)?;
    let excluded: usize = result.aggregates.iter().map(|a| a.n_excluded).sum();
    eprintln!(
        "wrote {} records and {} means to {}",
        result.records.len(),
        result.aggregates.len(),
        spec.output_path.display()
    );
    if excluded > 0 {
        eprintln!("{excluded} failed trials excluded from means");
    }
    if !traces.is_empty() {
        eprintln!("wrote {} traces", traces.len());
    }
    if let Some(script) = &args.plot_script {
        emit_plot_script(&spec.output_path, script)?;
        eprintln!("wrote {}", script.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
