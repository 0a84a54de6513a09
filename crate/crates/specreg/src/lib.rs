#![doc = include_str!("../../../README.md")]

mod linalg;

pub mod analysis;
pub mod cme;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod rng;
pub mod spectral;
pub mod synthetic;

pub use analysis::{
    bias_variance_diagnostic, effective_dimension, empirical_norm, rate_sweep, rate_sweep_multi,
    saturation_experiment, BiasVariance, LambdaSchedule, RateReport, SaturationOutcome,
};
pub use cme::{cme_fit, gaussian_section_truth, run_cme_demo, CmeDemoConfig, CmeModel};
pub use error::{Error, Result};
pub use estimators::{fit, primal_fit, Dataset, EigenFit, FittedEstimator, PrimalOperator};
pub use kernels::{Kernel, MercerEigenpairs};
pub use spectral::{
    apply_filter, sym_eig, verify_filter_axioms, AxiomReport, FilterKind, FilterSpec, SymEig,
};
pub use synthetic::{make_problem, CoefficientFrame, MercerProblem, NoiseLaw, ProblemSpec};
