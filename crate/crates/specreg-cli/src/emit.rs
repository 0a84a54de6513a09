//! Deterministic text output: CSV files and plot data.
//!
//! Floats are written with 17 significant digits ('.' separator, LF line
//! endings), which round-trips `f64` exactly; identical runs therefore
//! produce byte-identical files regardless of the worker-pool size.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use specreg::analysis::RateReport;

use crate::CliError;

/// Full-precision float formatting (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a CSV file from a header and preformatted rows.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<(), CliError> {
    let mut text = String::with_capacity(rows.len() * 64 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

/// Learning-curve rows: `filter,gamma,n,trial,lambda,sq_error`.
pub fn rate_results_rows(reports: &[RateReport]) -> Vec<String> {
    let mut rows = Vec::new();
    for report in reports {
        for (ni, &n) in report.n_grid.iter().enumerate() {
            for trial in 0..report.trial_errors[ni].len() {
                rows.push(format!(
                    "{},{},{},{},{},{}",
                    report.filter,
                    fmt_f64(report.gamma),
                    n,
                    trial,
                    fmt_f64(report.lambdas[ni][trial]),
                    fmt_f64(report.trial_errors[ni][trial]),
                ));
            }
        }
    }
    rows
}

/// Summary rows: `filter,gamma,slope,stderr,theory_exponent`.
pub fn rate_summary_rows(reports: &[RateReport]) -> Vec<String> {
    reports
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                r.filter,
                fmt_f64(r.gamma),
                fmt_f64(r.fitted_slope),
                fmt_f64(r.slope_stderr),
                fmt_f64(r.theoretical_exponent),
            )
        })
        .collect()
}

/// Write `(log10 n, log10 mean error)` plot data for one report, plus a
/// gnuplot stub referencing every emitted data file. No graphics library
/// is involved; the stub is plain text.
pub fn emit_plot_data(report: &RateReport, dir: &Path) -> Result<(), CliError> {
    if report.n_grid.is_empty() {
        return Err(CliError::Config("cannot plot an empty report".into()));
    }
    let path = dir.join(format!("plot_{}.dat", report.filter));
    let mut text = String::new();
    for (ni, &n) in report.n_grid.iter().enumerate() {
        let _ = writeln!(
            text,
            "{} {}",
            fmt_f64((n as f64).log10()),
            fmt_f64(report.mean_sq_error[ni].max(f64::MIN_POSITIVE).log10())
        );
    }
    fs::write(&path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;

    let stub = dir.join("plot.gp");
    let mut existing: Vec<String> = fs::read_dir(dir)
        .map_err(|e| CliError::Io(format!("listing {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok())
        .filter_map(|entry| entry.file_name().into_string().ok())
        .filter(|name| name.starts_with("plot_") && name.ends_with(".dat"))
        .collect();
    existing.sort();
    let mut text = String::from(
        "# log-log learning curves; run `gnuplot plot.gp`\n\
         set xlabel 'log10 n'\nset ylabel 'log10 mean squared error'\n",
    );
    let plots: Vec<String> = existing
        .iter()
        .map(|name| format!("'{name}' using 1:2 with linespoints title '{name}'"))
        .collect();
    let _ = writeln!(text, "plot {}", plots.join(", \\\n     "));
    fs::write(&stub, text).map_err(|e| CliError::Io(format!("writing {}: {e}", stub.display())))
}
