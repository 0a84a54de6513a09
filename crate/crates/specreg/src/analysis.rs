//! Learning-rate experiments: effective dimensions, regularization
//! schedules, log-log slope fitting, and the saturation comparison.
//!
//! The driver samples datasets of increasing size, fits the requested
//! filters on a shared eigendecomposition per dataset, records the exact
//! interpolation-norm error against the synthetic truth, and fits an OLS
//! slope through `(log n, log mean error)`. Only exponents are compared to
//! theory; the multiplicative constants in the bounds are unknown, so a
//! learning-curve slope with a tolerance is the honest desk-scale check.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::EigenFit;
use crate::rng::{stream_rng, sweep_stream_id};
use crate::spectral::{FilterKind, FilterSpec};
use crate::synthetic::{CoefficientFrame, MercerProblem, NoiseLaw, ProblemSpec};

/// Rule mapping a sample size to a regularization level.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSchedule {
    /// `lambda_n = scale * n^(-exponent)`.
    PowerLaw { exponent: f64, scale: f64 },
    /// `lambda_n = scale * (n / log^theta n)^(-1/alpha)`, the schedule for
    /// the misspecified regime.
    LogPower { alpha: f64, theta: f64, scale: f64 },
    /// Per-trial oracle: pick the grid value minimizing the exact error.
    OracleGrid { grid: Vec<f64> },
}

impl LambdaSchedule {
    pub fn power_law(exponent: f64, scale: f64) -> Result<Self> {
        if !(exponent > 0.0) || !(scale > 0.0) {
            return Err(Error::BadParams(format!(
                "power-law schedule needs exponent > 0 and scale > 0, got ({exponent}, {scale})"
            )));
        }
        Ok(LambdaSchedule::PowerLaw { exponent, scale })
    }

    pub fn log_power(alpha: f64, theta: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(theta > 1.0) || !(scale > 0.0) {
            return Err(Error::BadParams(format!(
                "log-power schedule needs alpha > 0, theta > 1, scale > 0, got ({alpha}, {theta}, {scale})"
            )));
        }
        Ok(LambdaSchedule::LogPower {
            alpha,
            theta,
            scale,
        })
    }

    pub fn oracle_grid(grid: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::BadParams(
                "oracle grid must be nonempty with positive finite values".into(),
            ));
        }
        Ok(LambdaSchedule::OracleGrid { grid })
    }

    /// 25 lambda values, geometric in `[1e-6 * kappa2, kappa2]` — wide
    /// enough to bracket every schedule the rate theory uses at desk scale.
    pub fn default_oracle_grid(kappa2: f64) -> Self {
        let lo = 1e-6 * kappa2;
        let ratio = (kappa2 / lo).powf(1.0 / 24.0);
        let mut grid = Vec::with_capacity(25);
        let mut v = lo;
        for _ in 0..24 {
            grid.push(v);
            v *= ratio;
        }
        grid.push(kappa2);
        LambdaSchedule::OracleGrid { grid }
    }

    /// Deterministic lambda for a sample size; `None` for the oracle.
    pub fn lambda_at(&self, n: usize) -> Option<f64> {
        match self {
            LambdaSchedule::PowerLaw { exponent, scale } => {
                Some(scale * (n as f64).powf(-exponent))
            }
            LambdaSchedule::LogPower {
                alpha,
                theta,
                scale,
            } => {
                let ln_n = (n as f64).ln();
                Some(scale * (n as f64 / ln_n.powf(*theta)).powf(-1.0 / alpha))
            }
            LambdaSchedule::OracleGrid { .. } => None,
        }
    }
}

/// Learning-curve record for one filter.
#[derive(Debug, Clone)]
pub struct RateReport {
    /// Filter identifier (`tikhonov`, `landweber`, `truncation`).
    pub filter: String,
    /// Error norm index used, `gamma in [0,1)`.
    pub gamma: f64,
    pub n_grid: Vec<usize>,
    /// Mean exact squared error per sample size, averaged over trials.
    pub mean_sq_error: Vec<f64>,
    /// `trial_errors[i][t]`: exact squared error at `n_grid[i]`, trial `t`.
    pub trial_errors: Vec<Vec<f64>>,
    /// Regularization level actually used per `(n, trial)`.
    pub lambdas: Vec<Vec<f64>>,
    /// OLS slope of `log mean error` against `log n` (negative when the
    /// method learns).
    pub fitted_slope: f64,
    /// Standard error of the fitted slope.
    pub slope_stderr: f64,
    /// Predicted decay exponent `(min(beta, 2 rho) - gamma) / (min(beta, 2 rho) + p)`,
    /// reported as a positive number.
    pub theoretical_exponent: f64,
}

/// Trace of the filtered spectrum: `N_l(lambda) = sum_i (mu_i / (mu_i + lambda))^l`.
///
/// Requires `lambda > 0` and `l >= 1`.
pub fn effective_dimension(mu: &[f64], lambda: f64, l: f64) -> f64 {
    assert!(lambda > 0.0, "effective dimension needs lambda > 0");
    assert!(l >= 1.0, "effective dimension needs l >= 1");
    mu.iter().map(|&m| (m / (m + lambda)).powf(l)).sum()
}

/// The sandwich constants `(c_{1,l}, c_{2,l})` for eigenvalues decaying
/// exactly like `i^{-1/p}` (decay constants equal to one):
/// `c_1 lambda^{-p} <= N_l(lambda) <= c_2 lambda^{-p}` for `lambda in (0,1]`,
/// with `c_1 = (1/2)^l p/(l-p)` and `c_2 = 1 + p/(l-p)`.
pub fn effective_dimension_sandwich(p: f64, l: f64) -> (f64, f64) {
    assert!(p > 0.0 && p < 1.0, "sandwich constants need p in (0,1)");
    assert!(l >= 1.0, "sandwich constants need l >= 1");
    let c1 = 0.5f64.powf(l) * p / (l - p);
    let c2 = 1.0 + p / (l - p);
    (c1, c2)
}

/// Empirical `L2` norm of sampled function values: `sqrt(1/n sum f(x_i)^2)`.
pub fn empirical_norm(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "empirical norm needs at least one value");
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// OLS slope and its standard error for `(ln x_i, ln y_i)`.
pub fn fit_loglog_slope(xs: &[usize], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let m = xs.len();
    assert!(m >= 3, "slope fit needs at least 3 points");
    let lx: Vec<f64> = xs.iter().map(|&x| (x as f64).ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| y.max(f64::MIN_POSITIVE).ln()).collect();
    let mx = lx.iter().sum::<f64>() / m as f64;
    let my = ly.iter().sum::<f64>() / m as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = (rss / (m as f64 - 2.0) / sxx).sqrt();
    (slope, stderr)
}

/// Predicted positive decay exponent for the squared `gamma`-norm error:
/// `(beta_eff - gamma) / (beta_eff + p)` with `beta_eff = min(beta, 2 rho)`.
///
/// For infinite qualification this is `(beta - gamma)/(beta + p)`; for ridge
/// (`rho = 1`) at `gamma = 0` it reduces to the saturating
/// `min(beta, 2)/(min(beta, 2) + p)`.
pub fn theory_exponent(beta: f64, p: f64, gamma: f64, qualification: f64) -> f64 {
    let beta_eff = if qualification.is_infinite() {
        beta
    } else {
        beta.min(2.0 * qualification)
    };
    (beta_eff - gamma) / (beta_eff + p)
}

/// Learning-curve sweep for a single filter. See [`rate_sweep_multi`].
pub fn rate_sweep(
    problem: &MercerProblem,
    filter: &FilterSpec,
    schedule: &LambdaSchedule,
    n_grid: &[usize],
    trials: usize,
    gamma: f64,
    seed: u64,
) -> Result<RateReport> {
    let mut reports = rate_sweep_multi(problem, &[*filter], schedule, n_grid, trials, gamma, seed)?;
    Ok(reports.remove(0))
}

/// Learning-curve sweep for several filters over shared datasets.
///
/// For each `(n, trial)` one dataset is sampled from its own seed stream
/// and its Gram matrix eigendecomposed once; every filter is then evaluated
/// on that decomposition. Results are identical to running [`rate_sweep`]
/// per filter with the same seed (the data streams do not depend on the
/// filter), at a third of the eigendecomposition cost.
///
/// `OracleGrid` schedules resolve lambda per `(n, trial, filter)` as the
/// first grid value attaining the minimal exact error.
pub fn rate_sweep_multi(
    problem: &MercerProblem,
    filters: &[FilterSpec],
    schedule: &LambdaSchedule,
    n_grid: &[usize],
    trials: usize,
    gamma: f64,
    seed: u64,
) -> Result<Vec<RateReport>> {
    if filters.is_empty() {
        return Err(Error::BadParams("no filters given".into()));
    }
    if n_grid.len() < 4 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InsufficientGrid(format!(
            "need an ascending grid of at least 4 sample sizes, got {n_grid:?}"
        )));
    }
    if trials == 0 {
        return Err(Error::BadParams("trials must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::BadParams(format!(
            "gamma must lie in [0,1), got {gamma}"
        )));
    }
    let kappa2 = problem.kernel().kappa2();
    for filter in filters {
        if let FilterKind::Landweber { step } = filter.kind() {
            if step * kappa2 > 1.0 {
                return Err(Error::StepTooLarge(step * kappa2));
            }
        }
    }
    for &n in n_grid {
        if let Some(l) = schedule.lambda_at(n) {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::BadParams(format!(
                    "schedule produced invalid lambda {l} at n = {n}"
                )));
            }
        }
    }

    let tasks: Vec<(usize, usize)> = (0..n_grid.len())
        .flat_map(|ni| (0..trials).map(move |t| (ni, t)))
        .collect();

    // One record per (n, trial): per-filter (lambda, error).
    let per_task: Vec<Vec<(f64, f64)>> = tasks
        .par_iter()
        .map(|&(ni, trial)| -> Result<Vec<(f64, f64)>> {
            let n = n_grid[ni];
            let mut rng = stream_rng(seed, sweep_stream_id(ni, trial));
            let data = problem.sample(n, &mut rng)?;
            let efit = EigenFit::new(data, problem.kernel().clone())?;
            let frame = CoefficientFrame::new(problem, &efit)?;
            filters
                .iter()
                .map(|filter| -> Result<(f64, f64)> {
                    match schedule {
                        LambdaSchedule::OracleGrid { grid } => {
                            let mut best = (f64::INFINITY, f64::INFINITY);
                            for &lambda in grid {
                                let coeffs = frame.coefficients(filter, lambda);
                                let err = frame.error_sq(&coeffs, gamma)?;
                                if err < best.1 {
                                    best = (lambda, err);
                                }
                            }
                            Ok(best)
                        }
                        _ => {
                            let lambda = schedule
                                .lambda_at(n)
                                .expect("non-oracle schedules are deterministic");
                            let coeffs = frame.coefficients(filter, lambda);
                            Ok((lambda, frame.error_sq(&coeffs, gamma)?))
                        }
                    }
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let spec = problem.spec();
    let mut reports = Vec::with_capacity(filters.len());
    for (fi, filter) in filters.iter().enumerate() {
        let mut trial_errors = vec![vec![0.0; trials]; n_grid.len()];
        let mut lambdas = vec![vec![0.0; trials]; n_grid.len()];
        for (task_idx, &(ni, trial)) in tasks.iter().enumerate() {
            let (lambda, err) = per_task[task_idx][fi];
            trial_errors[ni][trial] = err;
            lambdas[ni][trial] = lambda;
        }
        let mean_sq_error: Vec<f64> = trial_errors
            .iter()
            .map(|errs| errs.iter().sum::<f64>() / trials as f64)
            .collect();
        let (fitted_slope, slope_stderr) = fit_loglog_slope(n_grid, &mean_sq_error);
        reports.push(RateReport {
            filter: filter.name().to_string(),
            gamma,
            n_grid: n_grid.to_vec(),
            mean_sq_error,
            trial_errors,
            lambdas,
            fitted_slope,
            slope_stderr,
            theoretical_exponent: theory_exponent(spec.beta, spec.p, gamma, filter.qualification()),
        });
    }
    Ok(reports)
}

/// Ridge versus high-qualification filters on a smooth target.
#[derive(Debug, Clone)]
pub struct SaturationOutcome {
    pub ridge: RateReport,
    pub pcr: RateReport,
    pub landweber: RateReport,
    /// `|slope(pcr)| - |slope(ridge)|`.
    pub separation: f64,
    /// `beta/(beta + p) - 2/(2 + p)`.
    pub theoretical_separation: f64,
}

/// Compare ridge against truncation and Landweber on a target of smoothness
/// `beta >= 2`, with per-`(n, trial)` oracle lambda for every filter.
///
/// Ridge saturates at exponent `2/(2+p)` no matter how lambda is chosen, so
/// handing it the oracle too keeps the comparison fair: the observed slope
/// gap isolates the qualification effect, not the schedule. Output
/// dimension is 1, bounded-uniform noise with halfwidth 0.5, truncation
/// order 512, Landweber step `1/kappa^2`.
pub fn saturation_experiment(
    p: f64,
    beta: f64,
    b: f64,
    n_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<SaturationOutcome> {
    if beta < 2.0 {
        return Err(Error::BadParams(format!(
            "saturation regime needs beta >= 2, got {beta}"
        )));
    }
    let spec = ProblemSpec::new(p, beta, b, 512, 1, NoiseLaw::BoundedUniform(0.5), seed);
    let problem = MercerProblem::from_spec(&spec)?;
    let kappa2 = problem.kernel().kappa2();
    let filters = [
        FilterSpec::tikhonov(),
        FilterSpec::truncation(),
        FilterSpec::landweber(1.0 / kappa2)?,
    ];
    let schedule = LambdaSchedule::default_oracle_grid(kappa2);
    let mut reports = rate_sweep_multi(&problem, &filters, &schedule, n_grid, trials, 0.0, seed)?;
    let landweber = reports.pop().expect("three reports");
    let pcr = reports.pop().expect("three reports");
    let ridge = reports.pop().expect("three reports");
    let separation = pcr.fitted_slope.abs() - ridge.fitted_slope.abs();
    let theoretical_separation = beta / (beta + p) - 2.0 / (2.0 + p);
    Ok(SaturationOutcome {
        ridge,
        pcr,
        landweber,
        separation,
        theoretical_separation,
    })
}

/// Decomposition of the exact squared `L2` error into bias and variance
/// parts, averaged over trials.
#[derive(Debug, Clone, Copy)]
pub struct BiasVariance {
    /// Mean exact error of the fit on noiseless outputs.
    pub bias_sq: f64,
    /// Mean exact squared distance between the noisy fit and the noiseless fit.
    pub variance: f64,
    /// Mean exact error of the noisy fit.
    pub total: f64,
}

/// Fit each trial twice — on noisy outputs and on the same covariates with
/// noiseless outputs — and report the decomposition. The cross term
/// averages to zero over trials, so `total ~ bias_sq + variance`.
pub fn bias_variance_diagnostic(
    problem: &MercerProblem,
    filter: &FilterSpec,
    lambda: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<BiasVariance> {
    if trials == 0 {
        return Err(Error::BadParams("trials must be >= 1".into()));
    }
    let parts: Vec<(f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<(f64, f64, f64)> {
            let mut rng = stream_rng(seed, sweep_stream_id(0, trial));
            let data = problem.sample(n, &mut rng)?;
            let clean_ys = problem.truth_batch(data.xs())?;
            let noisy = EigenFit::new(data, problem.kernel().clone())?;
            let clean = noisy.with_outputs(clean_ys)?;
            let noisy_frame = CoefficientFrame::new(problem, &noisy)?;
            let clean_frame = CoefficientFrame::new(problem, &clean)?;
            let c_noisy = noisy_frame.coefficients(filter, lambda);
            let c_clean = clean_frame.coefficients(filter, lambda);
            let total = noisy_frame.error_sq(&c_noisy, 0.0)?;
            let bias = clean_frame.error_sq(&c_clean, 0.0)?;
            let var = noisy_frame.distance_sq(&c_noisy, &c_clean, 0.0)?;
            Ok((bias, var, total))
        })
        .collect::<Result<Vec<_>>>()?;
    let t = trials as f64;
    Ok(BiasVariance {
        bias_sq: parts.iter().map(|p| p.0).sum::<f64>() / t,
        variance: parts.iter().map(|p| p.1).sum::<f64>() / t,
        total: parts.iter().map(|p| p.2).sum::<f64>() / t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quick_problem(p: f64, beta: f64, d: usize, seed: u64) -> MercerProblem {
        let spec = ProblemSpec::new(p, beta, 1.0, 64, d, NoiseLaw::BoundedUniform(0.25), seed);
        MercerProblem::from_spec(&spec).unwrap()
    }

    #[test]
    fn effective_dimension_two_terms() {
        let n = effective_dimension(&[1.0, 0.5], 0.5, 1.0);
        assert_abs_diff_eq!(n, 1.0 / 1.5 + 0.5, epsilon = 1e-14);
    }

    #[test]
    fn effective_dimension_limits() {
        let mu = [1.0, 0.25, 0.0625];
        assert!(effective_dimension(&mu, 1e12, 1.0) < 1e-10);
        assert_abs_diff_eq!(effective_dimension(&mu, 1e-14, 1.0), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn effective_dimension_monotonicity() {
        let mu: Vec<f64> = (1..=128).map(|i| (i as f64).powf(-2.0)).collect();
        let dominated: Vec<f64> = mu.iter().map(|m| 0.9 * m).collect();
        for &l in &[1.0, 1.5, 2.0] {
            let mut last = f64::INFINITY;
            for &lambda in &[1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
                let v = effective_dimension(&mu, lambda, l);
                assert!(v <= last);
                assert!(v >= effective_dimension(&dominated, lambda, l));
                last = v;
            }
        }
    }

    /// Sandwich with explicit constants on the exact i^{-1/p} spectrum.
    #[test]
    fn effective_dimension_sandwich_holds() {
        let p = 0.5;
        let m = 512;
        let mu: Vec<f64> = (1..=m).map(|i| (i as f64).powf(-1.0 / p)).collect();
        for &l in &[1.0, 2.0] {
            let (c1, c2) = effective_dimension_sandwich(p, l);
            let lo = 10.0 * mu[m - 1];
            let hi = mu[0];
            for k in 0..20 {
                let lambda = lo * (hi / lo).powf(k as f64 / 19.0);
                let n = effective_dimension(&mu, lambda, l);
                let envelope = lambda.powf(-p);
                assert!(
                    c1 * envelope <= n && n <= c2 * envelope,
                    "p={p} l={l} lambda={lambda}: {} <= {n} <= {} violated",
                    c1 * envelope,
                    c2 * envelope
                );
            }
        }
    }

    #[test]
    fn empirical_norm_basics() {
        assert_eq!(empirical_norm(&[0.0, 0.0, 0.0]), 0.0);
        assert_abs_diff_eq!(empirical_norm(&[3.0, 3.0, 3.0, 3.0]), 3.0, epsilon = 1e-15);
        let vals = [1.0, -2.0, 0.5];
        let by_hand = ((1.0 + 4.0 + 0.25) / 3.0f64).sqrt();
        assert_abs_diff_eq!(empirical_norm(&vals), by_hand, epsilon = 1e-15);
    }

    /// OLS recovers an exact power law to machine precision.
    #[test]
    fn slope_fit_exact_power_law() {
        let ns = [128usize, 256, 512, 1024, 2048];
        let ys: Vec<f64> = ns.iter().map(|&n| 3.7 * (n as f64).powf(-0.75)).collect();
        let (slope, stderr) = fit_loglog_slope(&ns, &ys);
        assert_abs_diff_eq!(slope, -0.75, epsilon = 1e-10);
        assert!(stderr < 1e-10);
    }

    #[test]
    fn theory_exponents() {
        // Infinite qualification: (beta - gamma)/(beta + p).
        assert_abs_diff_eq!(
            theory_exponent(4.0, 0.5, 0.0, f64::INFINITY),
            4.0 / 4.5,
            epsilon = 1e-15
        );
        // Ridge saturates at beta_eff = 2.
        assert_abs_diff_eq!(theory_exponent(4.0, 0.5, 0.0, 1.0), 0.8, epsilon = 1e-15);
        // Boundary case beta = 2: no separation.
        assert_abs_diff_eq!(
            theory_exponent(2.0, 0.5, 0.0, 1.0),
            theory_exponent(2.0, 0.5, 0.0, f64::INFINITY),
            epsilon = 1e-15
        );
    }

    #[test]
    fn sweep_is_deterministic() {
        let prob = quick_problem(0.5, 1.0, 2, 11);
        let sched = LambdaSchedule::power_law(1.0 / 1.5, 1.0).unwrap();
        let grid = [16, 32, 64, 128];
        let a = rate_sweep(&prob, &FilterSpec::tikhonov(), &sched, &grid, 2, 0.0, 5).unwrap();
        let b = rate_sweep(&prob, &FilterSpec::tikhonov(), &sched, &grid, 2, 0.0, 5).unwrap();
        assert_eq!(a.trial_errors, b.trial_errors);
        assert_eq!(a.lambdas, b.lambdas);
        assert_eq!(a.fitted_slope, b.fitted_slope);
    }

    #[test]
    fn multi_filter_sweep_matches_single() {
        let prob = quick_problem(0.5, 2.0, 1, 3);
        let kappa2 = prob.kernel().kappa2();
        let filters = [
            FilterSpec::tikhonov(),
            FilterSpec::truncation(),
            FilterSpec::landweber(1.0 / kappa2).unwrap(),
        ];
        let sched = LambdaSchedule::default_oracle_grid(kappa2);
        let grid = [16, 32, 64, 128];
        let multi = rate_sweep_multi(&prob, &filters, &sched, &grid, 2, 0.0, 9).unwrap();
        for (filter, report) in filters.iter().zip(&multi) {
            let single = rate_sweep(&prob, filter, &sched, &grid, 2, 0.0, 9).unwrap();
            assert_eq!(single.trial_errors, report.trial_errors);
            assert_eq!(single.lambdas, report.lambdas);
        }
    }

    /// Oracle lambda is at least as good as any schedule resolving inside
    /// the same grid, on every (n, trial) pair.
    #[test]
    fn oracle_dominates_schedule() {
        let prob = quick_problem(0.5, 1.0, 1, 7);
        let grid = [16usize, 32, 64, 128];
        let sched = LambdaSchedule::power_law(1.0 / 1.5, 1.0).unwrap();
        // Oracle grid contains every scheduled lambda plus more.
        let mut lambda_grid: Vec<f64> = grid.iter().map(|&n| sched.lambda_at(n).unwrap()).collect();
        lambda_grid.extend([1e-4, 1e-2, 0.5]);
        let oracle = LambdaSchedule::oracle_grid(lambda_grid).unwrap();
        let filt = FilterSpec::tikhonov();
        let scheduled = rate_sweep(&prob, &filt, &sched, &grid, 3, 0.0, 21).unwrap();
        let oracled = rate_sweep(&prob, &filt, &oracle, &grid, 3, 0.0, 21).unwrap();
        for ni in 0..grid.len() {
            for t in 0..3 {
                assert!(
                    oracled.trial_errors[ni][t] <= scheduled.trial_errors[ni][t] + 1e-15,
                    "oracle worse at n={} trial={t}",
                    grid[ni]
                );
            }
        }
    }

    /// Qualitative check of the misspecified regime: with the log-power
    /// schedule the error still decreases and the slope lands in (-1, 0).
    /// The embedding index of the cosine system is not pinned to a single
    /// number, so no exponent is asserted here.
    #[test]
    fn misspecified_regime_learns() {
        let spec = ProblemSpec::new(0.25, 0.3, 1.0, 256, 1, NoiseLaw::BoundedUniform(0.25), 2);
        let prob = MercerProblem::from_spec(&spec).unwrap();
        let sched = LambdaSchedule::log_power(0.9, 1.1, 1.0).unwrap();
        let grid = [64, 128, 256, 512];
        let report = rate_sweep(&prob, &FilterSpec::tikhonov(), &sched, &grid, 4, 0.0, 31).unwrap();
        assert!(report.mean_sq_error[0] > *report.mean_sq_error.last().unwrap());
        assert!(report.fitted_slope < 0.0 && report.fitted_slope > -1.0, "{report:?}");
    }

    #[test]
    fn sweep_validation() {
        let prob = quick_problem(0.5, 1.0, 1, 1);
        let sched = LambdaSchedule::power_law(0.5, 1.0).unwrap();
        let filt = FilterSpec::tikhonov();
        assert!(matches!(
            rate_sweep(&prob, &filt, &sched, &[16, 32, 64], 2, 0.0, 1),
            Err(Error::InsufficientGrid(_))
        ));
        assert!(matches!(
            rate_sweep(&prob, &filt, &sched, &[16, 32, 32, 64], 2, 0.0, 1),
            Err(Error::InsufficientGrid(_))
        ));
        assert!(rate_sweep(&prob, &filt, &sched, &[16, 32, 64, 128], 0, 0.0, 1).is_err());
        assert!(rate_sweep(&prob, &filt, &sched, &[16, 32, 64, 128], 2, 1.0, 1).is_err());
        // Landweber step incompatible with the kernel bound.
        let bad = FilterSpec::landweber(1.0).unwrap();
        assert!(matches!(
            rate_sweep(&prob, &bad, &sched, &[16, 32, 64, 128], 2, 0.0, 1),
            Err(Error::StepTooLarge(_))
        ));
    }

    #[test]
    fn saturation_requires_smooth_target() {
        assert!(matches!(
            saturation_experiment(0.5, 1.5, 1.0, &[16, 32, 64, 128], 1, 1),
            Err(Error::BadParams(_))
        ));
    }

    #[test]
    fn saturation_theoretical_separation() {
        let out = saturation_experiment(0.5, 4.0, 1.0, &[16, 32, 64, 128], 1, 1).unwrap();
        assert_abs_diff_eq!(out.theoretical_separation, 4.0 / 4.5 - 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(out.ridge.theoretical_exponent, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(out.pcr.theoretical_exponent, 4.0 / 4.5, epsilon = 1e-12);
    }

    #[test]
    fn bias_variance_zero_noise() {
        let spec = ProblemSpec::new(0.5, 2.0, 1.0, 32, 1, NoiseLaw::BoundedUniform(0.0), 4);
        let prob = MercerProblem::from_spec(&spec).unwrap();
        let out =
            bias_variance_diagnostic(&prob, &FilterSpec::tikhonov(), 0.01, 64, 3, 17).unwrap();
        assert!(out.variance <= 1e-12, "{out:?}");
        assert_abs_diff_eq!(out.total, out.bias_sq, epsilon = 1e-10);
    }

    /// Huge lambda: the estimator is essentially zero, bias^2 is the
    /// squared truth norm.
    #[test]
    fn bias_variance_large_lambda() {
        let prob = quick_problem(0.5, 2.0, 1, 8);
        let kappa2 = prob.kernel().kappa2();
        let out = bias_variance_diagnostic(
            &prob,
            &FilterSpec::tikhonov(),
            50.0 * kappa2,
            64,
            5,
            23,
        )
        .unwrap();
        let truth = prob.interp_norm(0.0).powi(2);
        assert!((out.bias_sq - truth).abs() / truth < 0.05, "{out:?} vs {truth}");
    }

    /// The decomposition identity holds in expectation.
    #[test]
    fn bias_variance_decomposition() {
        let prob = quick_problem(0.5, 1.0, 2, 5);
        let out = bias_variance_diagnostic(&prob, &FilterSpec::tikhonov(), 0.02, 128, 50, 29)
            .unwrap();
        let gap = (out.total - out.bias_sq - out.variance).abs() / out.total;
        assert!(gap <= 0.1, "relative gap {gap}: {out:?}");
    }
}
