//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the estimators, kernels and experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    /// Input matrix violates the entrywise symmetry tolerance.
    #[error("matrix not symmetric: |A[{row},{col}] - A[{col},{row}]| = {delta:.3e} exceeds 1e-12")]
    NonSymmetric { row: usize, col: usize, delta: f64 },

    /// The eigensolver did not converge, or the matrix failed the
    /// positive-semidefiniteness tolerance required by the spectral calculus.
    #[error("eigendecomposition failed: {0}")]
    EigFailure(String),

    /// A point lies outside the kernel's domain.
    #[error("point outside kernel domain: {0}")]
    Domain(String),

    /// An operation that only makes sense for one kernel kind was called on another.
    #[error("operation requires a {expected} kernel, got {got}")]
    WrongKind {
        expected: &'static str,
        got: &'static str,
    },

    /// Landweber step size violates the convergence condition for this kernel.
    #[error("Landweber step too large: tau * kappa^2 = {0:.6} > 1")]
    StepTooLarge(f64),

    /// An estimator was evaluated against a problem with a different kernel.
    #[error("estimator kernel does not match problem kernel: {0}")]
    KernelMismatch(String),

    /// Invalid parameters for a constructor or experiment.
    #[error("bad parameters: {0}")]
    BadParams(String),

    /// Axiom-verification grid below the documented minimum resolution.
    #[error("axiom grid too coarse: {0}")]
    GridTooCoarse(String),

    /// Sample-size grid too short or not ascending.
    #[error("insufficient n grid: {0}")]
    InsufficientGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
