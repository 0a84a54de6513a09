//! Command dispatch: run the experiment named by a resolved config, write
//! `results.csv`, `summary.csv` and `config_echo.json` into the output
//! directory, and evaluate `--check` thresholds.

use std::fs;
use std::path::Path;

use specreg::analysis::{
    bias_variance_diagnostic, effective_dimension, effective_dimension_sandwich, rate_sweep_multi,
    saturation_experiment, LambdaSchedule, RateReport,
};
use specreg::cme::{run_cme_demo, CmeDemoConfig};
use specreg::rng::{stream_rng, sweep_stream_id};
use specreg::spectral::{verify_filter_axioms, FilterKind, FilterSpec};
use specreg::synthetic::{CoefficientFrame, MercerProblem};
use specreg::EigenFit;

use crate::config::{CommandKind, ExperimentConfig};
use crate::emit::{
    emit_plot_data, fmt_f64, rate_results_rows, rate_summary_rows, write_csv,
};
use crate::CliError;

/// Check failures accumulated during a run; empty means pass.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub check_failures: Vec<String>,
}

/// Execute a resolved config. `check` turns threshold violations into
/// entries of the outcome instead of being merely reported.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    check: bool,
) -> Result<RunOutcome, CliError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", out_dir.display())))?;
    let echo = serde_json::to_string_pretty(config)
        .map_err(|e| CliError::Io(format!("serializing config echo: {e}")))?;
    fs::write(out_dir.join("config_echo.json"), echo + "\n")
        .map_err(|e| CliError::Io(format!("writing config echo: {e}")))?;

    let mut outcome = RunOutcome::default();
    match config.command {
        CommandKind::Rates => run_rates(config, out_dir, check, &mut outcome)?,
        CommandKind::Saturation => run_saturation(config, out_dir, check, &mut outcome)?,
        CommandKind::Effdim => run_effdim(config, out_dir, check, &mut outcome)?,
        CommandKind::FilterCheck => run_filter_check(config, out_dir, check, &mut outcome)?,
        CommandKind::CmeDemo => run_cme(config, out_dir, check, &mut outcome)?,
        CommandKind::BiasVariance => run_bias_variance(config, out_dir, check, &mut outcome)?,
    }
    Ok(outcome)
}

fn build_problem(config: &ExperimentConfig) -> Result<MercerProblem, CliError> {
    let spec = config
        .problem
        .as_ref()
        .expect("resolution guarantees a problem");
    MercerProblem::from_spec(spec).map_err(|e| CliError::Config(format!("problem: {e}")))
}

fn resolve_filters(config: &ExperimentConfig, kappa2: f64) -> Result<Vec<FilterSpec>, CliError> {
    config
        .filters
        .as_ref()
        .expect("resolution guarantees filters")
        .iter()
        .map(|f| f.to_filter(kappa2))
        .collect()
}

fn print_rate_reports(reports: &[RateReport]) {
    println!(
        "{:<12} {:>8} {:>10} {:>10} {:>10}",
        "filter", "gamma", "slope", "stderr", "theory"
    );
    for r in reports {
        println!(
            "{:<12} {:>8.3} {:>10.4} {:>10.4} {:>10.4}",
            r.filter, r.gamma, r.fitted_slope, r.slope_stderr, -r.theoretical_exponent
        );
    }
}

fn write_rate_outputs(reports: &[RateReport], out_dir: &Path) -> Result<(), CliError> {
    write_csv(
        &out_dir.join("results.csv"),
        "filter,gamma,n,trial,lambda,sq_error",
        &rate_results_rows(reports),
    )?;
    write_csv(
        &out_dir.join("summary.csv"),
        "filter,gamma,slope,stderr,theory_exponent",
        &rate_summary_rows(reports),
    )?;
    for report in reports {
        emit_plot_data(report, out_dir)?;
    }
    Ok(())
}

fn run_rates(
    config: &ExperimentConfig,
    out_dir: &Path,
    check: bool,
    outcome: &mut RunOutcome,
) -> Result<(), CliError> {
    let problem = build_problem(config)?;
    let kappa2 = problem.kernel().kappa2();
    let filters = resolve_filters(config, kappa2)?;
    let schedule = config
        .schedule
        .as_ref()
        .expect("resolution guarantees a schedule")
        .to_schedule(kappa2)?;
    let reports = rate_sweep_multi(
        &problem,
        &filters,
        &schedule,
        config.n_grid.as_ref().expect("resolved"),
        config.trials.expect("resolved"),
        config.gamma.expect("resolved"),
        config.seed.expect("resolved"),
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    write_rate_outputs(&reports, out_dir)?;
    print_rate_reports(&reports);

    if check {
        let tol = config
            .check
            .as_ref()
            .and_then(|c| c.slope_tol)
            .unwrap_or(0.15);
        for r in &reports {
            let deviation = (r.fitted_slope + r.theoretical_exponent).abs();
            if deviation > tol {
                outcome.check_failures.push(format!(
                    "{}: slope {:.4} deviates from theory {:.4} by {:.4} > {tol}",
                    r.filter, r.fitted_slope, -r.theoretical_exponent, deviation
                ));
            }
        }
    }
    Ok(())
}

fn run_saturation(
    config: &ExperimentConfig,
    out_dir: &Path,
    check: bool,
    outcome: &mut RunOutcome,
) -> Result<(), CliError> {
    let spec = config.problem.as_ref().expect("resolved");
    let result = saturation_experiment(
        spec.p,
        spec.beta,
        spec.b,
        config.n_grid.as_ref().expect("resolved"),
        config.trials.expect("resolved"),
        config.seed.expect("resolved"),
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    let reports = [
        result.ridge.clone(),
        result.pcr.clone(),
        result.landweber.clone(),
    ];
    write_rate_outputs(&reports, out_dir)?;
    print_rate_reports(&reports);
    println!(
        "separation |slope(pcr)| - |slope(ridge)| = {:.4} (theory {:.4})",
        result.separation, result.theoretical_separation
    );

    if check {
        let c = config.check.clone().unwrap_or_default();
        let min_sep = c.min_separation.unwrap_or(0.03);
        let max_ridge = c.max_ridge_slope.unwrap_or(0.86);
        let min_pcr = c.min_pcr_slope.unwrap_or(0.82);
        if result.separation < min_sep {
            outcome.check_failures.push(format!(
                "separation {:.4} below {min_sep}",
                result.separation
            ));
        }
        if result.ridge.fitted_slope.abs() > max_ridge {
            outcome.check_failures.push(format!(
                "|slope(ridge)| = {:.4} above {max_ridge}",
                result.ridge.fitted_slope.abs()
            ));
        }
        if result.pcr.fitted_slope.abs() < min_pcr {
            outcome.check_failures.push(format!(
                "|slope(pcr)| = {:.4} below {min_pcr}",
                result.pcr.fitted_slope.abs()
            ));
        }
    }
    Ok(())
}

fn run_effdim(
    config: &ExperimentConfig,
    out_dir: &Path,
    check: bool,
    outcome: &mut RunOutcome,
) -> Result<(), CliError> {
    let section = config.effdim.as_ref().expect("resolved");
    let p_values = section.p_values.as_ref().expect("resolved");
    let l_values = section.l_values.as_ref().expect("resolved");
    let order = section.order.expect("resolved");
    let count = section.lambda_count.expect("resolved");
    if count < 2 {
        return Err(CliError::Config("effdim.lambda_count must be >= 2".into()));
    }

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &p in p_values {
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::Config(format!(
                "effdim.p_values entries must lie in (0,1), got {p}"
            )));
        }
        let mu: Vec<f64> = (1..=order).map(|i| (i as f64).powf(-1.0 / p)).collect();
        for &l in l_values {
            if l < 1.0 {
                return Err(CliError::Config(format!(
                    "effdim.l_values entries must be >= 1, got {l}"
                )));
            }
            let (c1, c2) = effective_dimension_sandwich(p, l);
            // The documented validity window of the sandwich.
            let lo = 10.0 * mu[order - 1];
            let hi = mu[0];
            let mut pass = true;
            for k in 0..count {
                let lambda = lo * (hi / lo).powf(k as f64 / (count as f64 - 1.0));
                let n_eff = effective_dimension(&mu, lambda, l);
                let lower = c1 * lambda.powf(-p);
                let upper = c2 * lambda.powf(-p);
                if !(lower <= n_eff && n_eff <= upper) {
                    pass = false;
                }
                rows.push(format!(
                    "{},{},{},{},{},{}",
                    fmt_f64(p),
                    fmt_f64(l),
                    fmt_f64(lambda),
                    fmt_f64(n_eff),
                    fmt_f64(lower),
                    fmt_f64(upper),
                ));
            }
            println!("p={p} l={l}: sandwich {}", if pass { "holds" } else { "VIOLATED" });
            summary.push(format!("{},{},{}", fmt_f64(p), fmt_f64(l), pass));
            if check && !pass {
                outcome
                    .check_failures
                    .push(format!("sandwich violated at p={p}, l={l}"));
            }
        }
    }
    write_csv(&out_dir.join("results.csv"), "p,l,lambda,n_eff,lower,upper", &rows)?;
    write_csv(&out_dir.join("summary.csv"), "p,l,pass", &summary)?;
    Ok(())
}

/// Residual-axiom orders verified by default, per filter.
pub fn default_rho_primes(filter: &FilterSpec) -> Vec<f64> {
    match filter.kind() {
        FilterKind::Tikhonov => vec![0.5, 1.0],
        FilterKind::Landweber { .. } => vec![0.5, 1.0, 2.0, 3.0],
        FilterKind::Truncation => vec![1.0, 2.0, 4.0],
    }
}

fn run_filter_check(
    config: &ExperimentConfig,
    out_dir: &Path,
    check: bool,
    outcome: &mut RunOutcome,
) -> Result<(), CliError> {
    let kappa2 = config.kappa2.expect("resolved");
    let filters = resolve_filters(config, kappa2)?;
    let lambda_grid = config.lambda_grid.as_ref().expect("resolved");

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for filter in &filters {
        let rho_primes = config
            .rho_primes
            .clone()
            .unwrap_or_else(|| default_rho_primes(filter));
        let report = verify_filter_axioms(filter, lambda_grid, kappa2, 64, &rho_primes)
            .map_err(|e| CliError::Config(format!("filter-check: {e}")))?;
        rows.push(format!(
            "{},1,,{},{}",
            filter.name(),
            fmt_f64(report.max_lhs_axiom1),
            fmt_f64(report.e_bound),
        ));
        for sup in &report.max_lhs_axiom2 {
            rows.push(format!(
                "{},2,{},{},{}",
                filter.name(),
                fmt_f64(sup.rho_prime),
                fmt_f64(sup.max_lhs),
                fmt_f64(sup.bound),
            ));
        }
        println!(
            "{:<12} axiom1 sup {:.6} (E = {}), pass = {}",
            filter.name(),
            report.max_lhs_axiom1,
            report.e_bound,
            report.pass
        );
        summary.push(format!("{},{}", filter.name(), report.pass));
        if check && !report.pass {
            outcome
                .check_failures
                .push(format!("{} violates the filter axioms", filter.name()));
        }
    }
    write_csv(
        &out_dir.join("results.csv"),
        "filter,axiom,rho_prime,max_lhs,bound",
        &rows,
    )?;
    write_csv(&out_dir.join("summary.csv"), "filter,pass", &summary)?;
    Ok(())
}

fn run_cme(
    config: &ExperimentConfig,
    out_dir: &Path,
    check: bool,
    outcome: &mut RunOutcome,
) -> Result<(), CliError> {
    let section = config.cme.as_ref().expect("resolved");
    // Gaussian covariate kernel: kappa^2 = 1 for the Landweber default.
    let filters = resolve_filters(config, 1.0)?;
    let demo = CmeDemoConfig {
        n_grid: config.n_grid.clone().expect("resolved"),
        sigma: section.sigma.expect("resolved"),
        output_bandwidth: section.output_bandwidth.expect("resolved"),
        covariate_bandwidth: section.covariate_bandwidth.expect("resolved"),
        probes: section.probes.expect("resolved"),
        z0: section.z0.expect("resolved"),
        lambda_grid: section.lambda_grid.clone().expect("resolved"),
        filters,
        seed: config.seed.expect("resolved"),
    };
    let (rows, summaries) =
        run_cme_demo(&demo).map_err(|e| CliError::Numerical(e.to_string()))?;

    let result_rows: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.filter,
                r.n,
                fmt_f64(r.lambda),
                fmt_f64(r.probe_x),
                fmt_f64(r.truth),
                fmt_f64(r.estimate),
                fmt_f64(r.abs_error),
            )
        })
        .collect();
    write_csv(
        &out_dir.join("results.csv"),
        "filter,n,lambda,probe_x,truth,estimate,abs_error",
        &result_rows,
    )?;
    let summary_rows: Vec<String> = summaries
        .iter()
        .map(|s| {
            format!(
                "{},{},{},{}",
                s.filter,
                s.n,
                fmt_f64(s.lambda),
                fmt_f64(s.max_abs_error)
            )
        })
        .collect();
    write_csv(
        &out_dir.join("summary.csv"),
        "filter,n,lambda,max_abs_error",
        &summary_rows,
    )?;

    println!("{:<12} {:>6} {:>12} {:>14}", "filter", "n", "lambda", "max_abs_err");
    for s in &summaries {
        println!(
            "{:<12} {:>6} {:>12.4e} {:>14.6}",
            s.filter, s.n, s.lambda, s.max_abs_error
        );
    }

    if check {
        let c = config.check.clone().unwrap_or_default();
        let max_err = c.max_abs_error.unwrap_or(0.05);
        let monotone = c.require_decreasing.unwrap_or(true);
        for filter in config.filters.as_ref().expect("resolved") {
            let name = filter.to_filter(1.0)?.name();
            let series: Vec<&specreg::cme::CmeDemoSummary> =
                summaries.iter().filter(|s| s.filter == name).collect();
            if let Some(last) = series.last() {
                if last.max_abs_error > max_err {
                    outcome.check_failures.push(format!(
                        "{name}: max abs error {:.4} at n={} exceeds {max_err}",
                        last.max_abs_error, last.n
                    ));
                }
            }
            if monotone {
                for w in series.windows(2) {
                    if w[1].max_abs_error >= w[0].max_abs_error {
                        outcome.check_failures.push(format!(
                            "{name}: error did not decrease from n={} to n={}",
                            w[0].n, w[1].n
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn run_bias_variance(
    config: &ExperimentConfig,
    out_dir: &Path,
    check: bool,
    outcome: &mut RunOutcome,
) -> Result<(), CliError> {
    let problem = build_problem(config)?;
    let kappa2 = problem.kernel().kappa2();
    let filters = resolve_filters(config, kappa2)?;
    let filter = filters[0];
    let n = config.n.expect("resolved");
    let trials = config.trials.expect("resolved");
    let seed = config.seed.expect("resolved");

    let lambda = match config.lambda {
        Some(l) => l,
        None => oracle_lambda_for_total_error(&problem, &filter, n, trials, seed, kappa2)
            .map_err(|e| CliError::Numerical(e.to_string()))?,
    };
    let result = bias_variance_diagnostic(&problem, &filter, lambda, n, trials, seed)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let rel_gap = (result.total - result.bias_sq - result.variance).abs() / result.total;

    let row = format!(
        "{},{},{},{},{},{},{},{}",
        filter.name(),
        fmt_f64(lambda),
        n,
        trials,
        fmt_f64(result.bias_sq),
        fmt_f64(result.variance),
        fmt_f64(result.total),
        fmt_f64(rel_gap),
    );
    let header = "filter,lambda,n,trials,bias_sq,variance,total,rel_gap";
    write_csv(&out_dir.join("results.csv"), header, &[row.clone()])?;
    write_csv(&out_dir.join("summary.csv"), header, &[row])?;
    println!(
        "{} lambda={:.4e}: bias^2 = {:.6e}, variance = {:.6e}, total = {:.6e} (rel gap {:.4})",
        filter.name(),
        lambda,
        result.bias_sq,
        result.variance,
        result.total,
        rel_gap
    );

    if check {
        let max_gap = config
            .check
            .as_ref()
            .and_then(|c| c.max_rel_gap)
            .unwrap_or(0.1);
        if rel_gap > max_gap {
            outcome
                .check_failures
                .push(format!("decomposition gap {rel_gap:.4} exceeds {max_gap}"));
        }
    }
    Ok(())
}

/// Grid-search lambda minimizing the mean exact total error over the same
/// trial streams the diagnostic will use. Eigendecompositions are shared
/// across the grid, so this costs one sweep of frames, not 25 diagnostics.
fn oracle_lambda_for_total_error(
    problem: &MercerProblem,
    filter: &FilterSpec,
    n: usize,
    trials: usize,
    seed: u64,
    kappa2: f64,
) -> specreg::Result<f64> {
    let grid = match LambdaSchedule::default_oracle_grid(kappa2) {
        LambdaSchedule::OracleGrid { grid } => grid,
        _ => unreachable!(),
    };
    let mut totals = vec![0.0f64; grid.len()];
    for trial in 0..trials {
        let mut rng = stream_rng(seed, sweep_stream_id(0, trial));
        let data = problem.sample(n, &mut rng)?;
        let efit = EigenFit::new(data, problem.kernel().clone())?;
        let frame = CoefficientFrame::new(problem, &efit)?;
        for (gi, &lambda) in grid.iter().enumerate() {
            let coeffs = frame.coefficients(filter, lambda);
            totals[gi] += frame.error_sq(&coeffs, 0.0)?;
        }
    }
    let best = totals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty grid");
    Ok(grid[best])
}
