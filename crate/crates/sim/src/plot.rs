//! Gnuplot scripts with the plotted data inlined.

use crate::output::TRACE_COLUMNS;
use crate::{Result, SimError};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

enum Data {
    Trace(Vec<(String, String)>),
    /// Sweep label and, per method, `(sweep value, mean SE, sum SE)` rows.
    Sweep(String, BTreeMap<String, Vec<(String, String, String)>>),
}

fn read(csv_path: &Path) -> Result<Data> {
    let text = fs::read_to_string(csv_path).map_err(|e| SimError::io(csv_path, e))?;
    let parse_err = |line: u64, reason: String| SimError::Parse { path: csv_path.to_path_buf(), line, reason };
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).flexible(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?.clone();
    let header_line = reader.position().line().saturating_sub(1).max(1);
    let width = header.len();
    let column = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| parse_err(header_line, format!("missing column `{name}`")))
    };

    let is_trace = header.iter().eq(TRACE_COLUMNS.iter().copied());
    let (iter_col, d2_col) = if is_trace { (0, 2) } else { (usize::MAX, usize::MAX) };
    let (kind, sweep, value, method, mean, sum) = if is_trace {
        (0, 0, 0, 0, 0, 0)
    } else {
        (
            column("kind")?,
            column("sweep")?,
            column("sweep_value")?,
            column("method")?,
            column("mean_se")?,
            column("sum_se")?,
        )
    };

    let mut trace = Vec::new();
    let mut label = String::from("none");
    let mut curves: BTreeMap<String, Vec<(String, String, String)>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(parse_err(line, format!("expected {width} fields, found {}", rec.len())));
        }
        let number = |i: usize| -> Result<String> {
            let f = &rec[i];
            f.parse::<f64>().map(|_| f.to_string()).map_err(|_| parse_err(line, format!("`{f}` is not a number")))
        };
        if is_trace {
            trace.push((number(iter_col)?, number(d2_col)?));
        } else if &rec[kind] == "mean" {
            label = rec[sweep].to_string();
            curves.entry(rec[method].to_string()).or_default().push((number(value)?, number(mean)?, number(sum)?));
        }
    }
    Ok(if is_trace { Data::Trace(trace) } else { Data::Sweep(label, curves) })
}

/// Writes a gnuplot script plotting `csv_path`: SE against the sweep variable
/// per method for a results file, or the approximation error per iteration
/// for a trace file.
pub fn emit_plot_script(csv_path: &Path, script_path: &Path) -> Result<()> {
    let data = read(csv_path)?;
    let mut s = String::new();
    let _ = writeln!(s, "# generated from {}", csv_path.display());
    let _ = writeln!(s, "set terminal pngcairo size 800,600");
    let stem = script_path.with_extension("png");
    let _ = writeln!(s, "set output '{}'", stem.display());
    let _ = writeln!(s, "set grid");
    match data {
        Data::Trace(rows) => {
            let _ = writeln!(s, "set xlabel 'iteration'\nset ylabel 'approximation error'");
            if rows.is_empty() {
                let _ = writeln!(s, "set label 'no data' at graph 0.5, graph 0.5 center\nplot NaN notitle");
            } else {
                let _ = writeln!(s, "$trace << EOD");
                for (i, d) in rows {
                    let _ = writeln!(s, "{i} {d}");
                }
                let _ = writeln!(s, "EOD\nplot $trace using 1:2 with linespoints title 'delta2'");
            }
        }
        Data::Sweep(label, curves) => {
            let by_users = label == "n_users";
            let _ = writeln!(s, "set xlabel '{label}'");
            let _ = writeln!(
                s,
                "set ylabel '{}'",
                if by_users { "sum spectral efficiency (bits/s/Hz)" } else { "mean spectral efficiency (bits/s/Hz)" }
            );
            if curves.is_empty() {
                let _ = writeln!(s, "set label 'no data' at graph 0.5, graph 0.5 center\nplot NaN notitle");
            } else {
                let col = if by_users { 3 } else { 2 };
                let mut plots = Vec::new();
                for (method, rows) in &curves {
                    let _ = writeln!(s, "${method} << EOD");
                    for (x, mean, sum) in rows {
                        let _ = writeln!(s, "{x} {mean} {sum}");
                    }
                    let _ = writeln!(s, "EOD");
                    plots.push(format!("${method} using 1:{col} with linespoints title '{method}'"));
                }
                let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
            }
        }
    }
    fs::write(script_path, s).map_err(|e| SimError::io(script_path, e))
}
