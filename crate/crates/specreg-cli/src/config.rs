//! JSON experiment configuration: schema, validation, and default
//! resolution.
//!
//! Experiments carry a dozen knobs, so they live in reviewable JSON files
//! rather than flags; the runner echoes the fully resolved configuration
//! (defaults frozen) next to the results so a run can be reproduced from
//! its own output directory.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use specreg::analysis::LambdaSchedule;
use specreg::spectral::FilterSpec;
use specreg::synthetic::{NoiseLaw, ProblemSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Rates,
    Saturation,
    Effdim,
    FilterCheck,
    CmeDemo,
    BiasVariance,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Rates => "rates",
            CommandKind::Saturation => "saturation",
            CommandKind::Effdim => "effdim",
            CommandKind::FilterCheck => "filter-check",
            CommandKind::CmeDemo => "cme-demo",
            CommandKind::BiasVariance => "bias-variance",
        }
    }
}

/// Filter selection. `landweber` without a step uses `1/kappa^2` of the
/// kernel in play.
///
/// JSON forms: `"tikhonov"`, `"truncation"`, `"landweber"`, or
/// `{"landweber": {"tau": 0.25}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FilterConfigRepr", into = "FilterConfigRepr")]
pub enum FilterConfig {
    Tikhonov,
    Truncation,
    Landweber { tau: Option<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum FilterConfigRepr {
    Name(String),
    Landweber { landweber: LandweberParams },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LandweberParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
}

impl TryFrom<FilterConfigRepr> for FilterConfig {
    type Error = String;

    fn try_from(repr: FilterConfigRepr) -> Result<Self, String> {
        match repr {
            FilterConfigRepr::Name(name) => FilterConfig::parse_name(&name)
                .map_err(|e| e.to_string()),
            FilterConfigRepr::Landweber { landweber } => Ok(FilterConfig::Landweber {
                tau: landweber.tau,
            }),
        }
    }
}

impl From<FilterConfig> for FilterConfigRepr {
    fn from(config: FilterConfig) -> Self {
        match config {
            FilterConfig::Tikhonov => FilterConfigRepr::Name("tikhonov".into()),
            FilterConfig::Truncation => FilterConfigRepr::Name("truncation".into()),
            FilterConfig::Landweber { tau: None } => FilterConfigRepr::Name("landweber".into()),
            FilterConfig::Landweber { tau } => {
                FilterConfigRepr::Landweber {
                    landweber: LandweberParams { tau },
                }
            }
        }
    }
}

impl FilterConfig {
    pub fn to_filter(&self, kappa2: f64) -> Result<FilterSpec, CliError> {
        match self {
            FilterConfig::Tikhonov => Ok(FilterSpec::tikhonov()),
            FilterConfig::Truncation => Ok(FilterSpec::truncation()),
            FilterConfig::Landweber { tau } => {
                let tau = tau.unwrap_or(1.0 / kappa2);
                FilterSpec::landweber(tau).map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }

    pub fn parse_name(name: &str) -> Result<Self, CliError> {
        match name {
            "tikhonov" | "ridge" => Ok(FilterConfig::Tikhonov),
            "truncation" | "pcr" => Ok(FilterConfig::Truncation),
            "landweber" | "gradient-descent" => Ok(FilterConfig::Landweber { tau: None }),
            other => Err(CliError::Config(format!(
                "unknown filter `{other}` (expected tikhonov, landweber or truncation)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    PowerLaw {
        exponent: f64,
        scale: Option<f64>,
    },
    LogPower {
        alpha: f64,
        theta: f64,
        scale: Option<f64>,
    },
    /// Omitting `grid` selects the default 25-point geometric grid in
    /// `[1e-6 kappa^2, kappa^2]`.
    OracleGrid {
        grid: Option<Vec<f64>>,
    },
}

impl ScheduleConfig {
    pub fn to_schedule(&self, kappa2: f64) -> Result<LambdaSchedule, CliError> {
        let res = match self {
            ScheduleConfig::PowerLaw { exponent, scale } => {
                LambdaSchedule::power_law(*exponent, scale.unwrap_or(1.0))
            }
            ScheduleConfig::LogPower {
                alpha,
                theta,
                scale,
            } => LambdaSchedule::log_power(*alpha, *theta, scale.unwrap_or(1.0)),
            ScheduleConfig::OracleGrid { grid } => match grid {
                Some(g) => LambdaSchedule::oracle_grid(g.clone()),
                None => Ok(LambdaSchedule::default_oracle_grid(kappa2)),
            },
        };
        res.map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Thresholds evaluated under `--check`. Absent fields fall back to the
/// documented defaults for the command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    /// rates: |fitted slope + theory exponent| must be <= slope_tol.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_tol: Option<f64>,
    /// saturation: |slope(pcr)| - |slope(ridge)| must be >= min_separation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_separation: Option<f64>,
    /// saturation: |slope(ridge)| must be <= max_ridge_slope.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ridge_slope: Option<f64>,
    /// saturation: |slope(pcr)| must be >= min_pcr_slope.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_pcr_slope: Option<f64>,
    /// bias-variance: |total - bias^2 - variance| / total <= max_rel_gap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rel_gap: Option<f64>,
    /// cme-demo: max abs probe error at the largest n <= max_abs_error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_error: Option<f64>,
    /// cme-demo: errors must decrease along the n grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub require_decreasing: Option<bool>,
}

/// Effective-dimension command section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffdimSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_count: Option<usize>,
}

/// CME demo section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariate_bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
}

/// The on-disk experiment configuration. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filters: Option<Vec<FilterConfig>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// bias-variance: fixed lambda; omit for oracle-grid selection.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// bias-variance: sample size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// filter-check: kernel bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa2: Option<f64>,
    /// filter-check: residual-axiom orders to verify.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_primes: Option<Vec<f64>>,
    /// filter-check: lambda grid to verify on.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effdim: Option<EffdimSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cme: Option<CmeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config error: {e}")))
    }

    /// Fill in every default so the echoed config reproduces the run
    /// verbatim, and validate cross-field requirements.
    pub fn resolve(mut self, seed_override: Option<u64>) -> Result<ExperimentConfig, CliError> {
        if let Some(seed) = seed_override {
            self.seed = Some(seed);
        }
        if self.output_dir.is_none() {
            self.output_dir = Some(PathBuf::from("specreg_out"));
        }

        match self.command {
            CommandKind::Rates => {
                let problem = self.require_problem()?;
                let (beta, p, problem_seed) = (problem.beta, problem.p, problem.seed);
                self.seed.get_or_insert(problem_seed);
                self.trials.get_or_insert(20);
                self.gamma.get_or_insert(0.0);
                self.n_grid
                    .get_or_insert_with(|| vec![128, 256, 512, 1024, 2048, 4096]);
                if self.filters.as_ref().is_none_or(|f| f.is_empty()) {
                    self.filters = Some(vec![FilterConfig::Tikhonov]);
                }
                if self.schedule.is_none() {
                    // The well-specified schedule n^{-1/(beta+p)}.
                    let exponent = 1.0 / (beta + p);
                    self.schedule = Some(ScheduleConfig::PowerLaw {
                        exponent,
                        scale: Some(1.0),
                    });
                }
                if let Some(ScheduleConfig::PowerLaw { scale, .. })
                | Some(ScheduleConfig::LogPower { scale, .. }) = &mut self.schedule
                {
                    scale.get_or_insert(1.0);
                }
            }
            CommandKind::Saturation => {
                let problem = self.require_problem()?;
                let problem_seed = problem.seed;
                if problem.beta < 2.0 {
                    return Err(CliError::Config(format!(
                        "problem.beta: saturation needs beta >= 2, got {}",
                        problem.beta
                    )));
                }
                if problem.d != 1 || problem.m != 512 || problem.noise != NoiseLaw::BoundedUniform(0.5)
                {
                    return Err(CliError::Config(
                        "problem: the saturation command fixes D=1, M=512 and bounded_uniform(0.5) noise"
                            .into(),
                    ));
                }
                if self.filters.is_some() {
                    return Err(CliError::Config(
                        "filters: the saturation command always runs tikhonov, truncation and landweber"
                            .into(),
                    ));
                }
                if let Some(s) = &self.schedule {
                    if !matches!(s, ScheduleConfig::OracleGrid { .. }) {
                        return Err(CliError::Config(
                            "schedule: the saturation command requires the oracle grid".into(),
                        ));
                    }
                } else {
                    self.schedule = Some(ScheduleConfig::OracleGrid { grid: None });
                }
                self.seed.get_or_insert(problem_seed);
                self.trials.get_or_insert(50);
                self.gamma.get_or_insert(0.0);
                self.n_grid
                    .get_or_insert_with(|| vec![128, 256, 512, 1024, 2048, 4096]);
            }
            CommandKind::Effdim => {
                self.seed.get_or_insert(0);
                let section = self.effdim.get_or_insert(EffdimSection {
                    p_values: None,
                    l_values: None,
                    order: None,
                    lambda_count: None,
                });
                section.p_values.get_or_insert_with(|| vec![0.25, 0.5, 0.75]);
                section.l_values.get_or_insert_with(|| vec![1.0, 2.0]);
                section.order.get_or_insert(512);
                section.lambda_count.get_or_insert(20);
            }
            CommandKind::FilterCheck => {
                self.seed.get_or_insert(0);
                self.kappa2.get_or_insert(1.0);
                if self.filters.as_ref().is_none_or(|f| f.is_empty()) {
                    self.filters = Some(vec![
                        FilterConfig::Tikhonov,
                        FilterConfig::Landweber { tau: Some(1.0) },
                        FilterConfig::Truncation,
                    ]);
                }
                if self.lambda_grid.is_none() {
                    self.lambda_grid = Some(vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0]);
                }
            }
            CommandKind::CmeDemo => {
                self.seed.get_or_insert(20240601);
                self.n_grid.get_or_insert_with(|| vec![250, 500, 1000, 2000]);
                if self.filters.as_ref().is_none_or(|f| f.is_empty()) {
                    self.filters = Some(vec![
                        FilterConfig::Tikhonov,
                        FilterConfig::Landweber { tau: Some(1.0) },
                        FilterConfig::Truncation,
                    ]);
                }
                let section = self.cme.get_or_insert(CmeSection {
                    sigma: None,
                    output_bandwidth: None,
                    covariate_bandwidth: None,
                    probes: None,
                    z0: None,
                    lambda_grid: None,
                });
                section.sigma.get_or_insert(0.3);
                section.output_bandwidth.get_or_insert(0.5);
                section.covariate_bandwidth.get_or_insert(0.1);
                section.probes.get_or_insert(20);
                section.z0.get_or_insert(0.25);
                section.lambda_grid.get_or_insert_with(|| {
                    (0..12).map(|k| 10f64.powf(-(k as f64) / 2.0 - 1.0)).collect()
                });
            }
            CommandKind::BiasVariance => {
                let problem_seed = self.require_problem()?.seed;
                self.seed.get_or_insert(problem_seed);
                self.trials.get_or_insert(50);
                self.n.get_or_insert(512);
                if self.filters.as_ref().is_none_or(|f| f.is_empty()) {
                    self.filters = Some(vec![FilterConfig::Tikhonov]);
                }
                // lambda stays None for oracle selection.
            }
        }
        Ok(self)
    }

    fn require_problem(&self) -> Result<&ProblemSpec, CliError> {
        self.problem.as_ref().ok_or_else(|| {
            CliError::Config(format!(
                "problem: required for the {} command",
                self.command.name()
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rates_json() -> String {
        r#"{
            "command": "rates",
            "problem": {"p": 0.5, "beta": 1.0, "B": 1.0, "M": 512, "D": 2,
                        "noise": {"kind": "bounded_uniform", "param": 0.5}, "seed": 42},
            "n_grid": [128, 256, 512, 1024],
            "trials": 3
        }"#
        .to_string()
    }

    #[test]
    fn defaults_are_frozen_in_resolution() {
        let cfg = ExperimentConfig::from_json(&rates_json()).unwrap();
        let resolved = cfg.resolve(None).unwrap();
        assert_eq!(resolved.gamma, Some(0.0));
        assert_eq!(resolved.seed, Some(42));
        match resolved.schedule.as_ref().unwrap() {
            ScheduleConfig::PowerLaw { exponent, scale } => {
                assert!((exponent - 1.0 / 1.5).abs() < 1e-12);
                assert_eq!(*scale, Some(1.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        // The echo parses back to the same resolved config.
        let echo = serde_json::to_string(&resolved).unwrap();
        let back = ExperimentConfig::from_json(&echo).unwrap().resolve(None).unwrap();
        assert_eq!(back, resolved);
    }

    #[test]
    fn unknown_field_rejected_with_name() {
        let bad = rates_json().replace("\"trials\": 3", "\"trials\": 3, \"bogus\": 1");
        let err = ExperimentConfig::from_json(&bad).unwrap_err();
        assert!(format!("{err}").contains("bogus"), "{err}");
    }

    #[test]
    fn seed_override_wins() {
        let cfg = ExperimentConfig::from_json(&rates_json()).unwrap();
        let resolved = cfg.resolve(Some(7)).unwrap();
        assert_eq!(resolved.seed, Some(7));
    }

    #[test]
    fn saturation_guards() {
        let json = r#"{
            "command": "saturation",
            "problem": {"p": 0.5, "beta": 1.0, "B": 1.0, "M": 512, "D": 1,
                        "noise": {"kind": "bounded_uniform", "param": 0.5}, "seed": 1}
        }"#;
        let err = ExperimentConfig::from_json(json).unwrap().resolve(None).unwrap_err();
        assert!(format!("{err}").contains("beta"));
    }

    #[test]
    fn filter_config_json_shapes() {
        let json = r#"["tikhonov", {"landweber": {"tau": 0.25}}, "truncation"]"#;
        let filters: Vec<FilterConfig> = serde_json::from_str(json).unwrap();
        assert_eq!(filters[0], FilterConfig::Tikhonov);
        assert_eq!(filters[1], FilterConfig::Landweber { tau: Some(0.25) });
    }
}
