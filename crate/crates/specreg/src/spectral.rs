//! Spectral calculus on symmetric PSD matrices and regularization filters.
//!
//! A filter `g_lambda: [0, inf) -> [0, inf)` approximates the inversion map
//! `x -> 1/x` while staying defined at `x = 0`. Applied to the eigenvalues of
//! a positive-semidefinite matrix it yields a regularized inverse; the three
//! filters here correspond to ridge regression, gradient descent with
//! constant step, and principal component regression. Each filter carries
//! two constants: `E` bounds `lambda^{1-a} x^a g_lambda(x)` over
//! `a in [0,1]`, and `omega_rho'` bounds the residual expression
//! `|r_lambda(x)| x^a lambda^-a` over `a in [0, rho']`, where
//! `r_lambda(x) = 1 - x g_lambda(x)` and `rho` is the qualification.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg;

/// Entrywise symmetry tolerance accepted by [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Relative eigenvalue negativity tolerance: eigenvalues in
/// `[-EIG_NEG_REL_TOL * lambda_max, 0)` are clamped to zero, anything below
/// is an error. Gram matrices are PSD in exact arithmetic.
pub const EIG_NEG_REL_TOL: f64 = 1e-10;

/// Minimum accepted alpha-grid resolution for the axiom verifier.
pub const MIN_ALPHA_RESOLUTION: usize = 16;

/// Number of geometric x-grid points used by the axiom verifier.
const X_GRID_POINTS: usize = 512;

/// Eigendecomposition of a symmetric positive-semidefinite matrix.
///
/// Eigenvalues are sorted descending and clamped to `>= 0`; eigenvector
/// columns are paired with them and carry a fixed sign convention (first
/// non-negligible entry positive) so the decomposition is deterministic
/// for a fixed input.
#[derive(Debug, Clone)]
pub struct SymEig {
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<f64>,
}

impl SymEig {
    /// Decompose a symmetric PSD matrix. See [`sym_eig`].
    pub fn decompose(a: ArrayView2<'_, f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::BadParams(format!(
                "sym_eig needs a nonempty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let delta = (a[(i, j)] - a[(j, i)]).abs();
                if !(delta <= SYMMETRY_TOL) {
                    return Err(Error::NonSymmetric {
                        row: i,
                        col: j,
                        delta,
                    });
                }
            }
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadParams(
                "matrix contains non-finite entries".into(),
            ));
        }

        let (w, v) = linalg::dsyevd(&a.to_owned())
            .map_err(|info| Error::EigFailure(format!("LAPACK dsyevd returned info={info}")))?;

        // LAPACK returns ascending order; flip to descending. Reversal keeps
        // the solver's tie order deterministic.
        let mut eigenvalues = Array1::zeros(n);
        let mut eigenvectors = Array2::zeros((n, n));
        for k in 0..n {
            eigenvalues[k] = w[n - 1 - k];
            eigenvectors.column_mut(k).assign(&v.column(n - 1 - k));
        }

        let lambda_max = eigenvalues[0].max(0.0);
        let neg_tol = EIG_NEG_REL_TOL * lambda_max;
        let min = eigenvalues[n - 1];
        if min < -neg_tol {
            return Err(Error::EigFailure(format!(
                "matrix is not PSD within tolerance: eigenvalue {min:.6e} below -{neg_tol:.3e}"
            )));
        }
        eigenvalues.mapv_inplace(|x| x.max(0.0));

        // Sign convention: first entry of each column whose magnitude is
        // non-negligible relative to the column max must be positive.
        for mut col in eigenvectors.columns_mut() {
            let max_abs = col.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            let lead = col.iter().find(|v| v.abs() > 1e-12 * max_abs);
            if let Some(&lead) = lead {
                if lead < 0.0 {
                    col.mapv_inplace(|v| -v);
                }
            }
        }

        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues, descending, all `>= 0`.
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    /// Orthogonal matrix whose k-th column pairs with the k-th eigenvalue.
    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    /// `V diag(f(lambda_i)) V^T`, symmetrized. The workhorse of the
    /// spectral calculus: an arbitrary scalar function applied through
    /// the eigenbasis.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let n = self.n();
        let mut scaled = self.eigenvectors.clone();
        for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
            let g = f(self.eigenvalues[k]);
            col.mapv_inplace(|v| v * g);
        }
        let mut m = scaled.dot(&self.eigenvectors.t());
        // Kill last-ulp asymmetry from the matrix product.
        for i in 0..n {
            for j in (i + 1)..n {
                let s = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
        }
        m
    }
}

/// Eigendecomposition of a symmetric PSD matrix.
///
/// The input must be symmetric within [`SYMMETRY_TOL`] per entry and PSD up
/// to the relative tolerance [`EIG_NEG_REL_TOL`]; small negative eigenvalues
/// are clamped to zero. Deterministic for a fixed input.
pub fn sym_eig(a: ArrayView2<'_, f64>) -> Result<SymEig> {
    SymEig::decompose(a)
}

/// The regularization algorithm a filter encodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    /// `g_lambda(x) = 1/(x + lambda)` — ridge regression.
    Tikhonov,
    /// `g_lambda(x) = tau * sum_{i<k} (1 - tau x)^i` with `k = ceil(1/lambda)`
    /// — gradient descent with constant step `tau`.
    Landweber { step: f64 },
    /// `g_lambda(x) = 1/x` for `x >= lambda`, else `0` — principal
    /// component regression (hard spectral thresholding, inclusive).
    Truncation,
}

/// A regularization filter together with its declared constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    kind: FilterKind,
}

impl FilterSpec {
    pub fn tikhonov() -> Self {
        Self {
            kind: FilterKind::Tikhonov,
        }
    }

    /// Landweber/gradient-descent filter with constant step `tau > 0`.
    ///
    /// The convergence condition `tau * kappa^2 <= 1` involves the kernel
    /// bound and is checked at fit time, not here.
    pub fn landweber(step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::BadParams(format!(
                "Landweber step must be positive and finite, got {step}"
            )));
        }
        Ok(Self {
            kind: FilterKind::Landweber { step },
        })
    }

    pub fn truncation() -> Self {
        Self {
            kind: FilterKind::Truncation,
        }
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    /// Stable identifier used in reports and CSV output.
    pub fn name(&self) -> &'static str {
        match self.kind {
            FilterKind::Tikhonov => "tikhonov",
            FilterKind::Landweber { .. } => "landweber",
            FilterKind::Truncation => "truncation",
        }
    }

    /// The constant `E` bounding `lambda^{1-a} x^a g_lambda(x)`.
    pub fn e_constant(&self) -> f64 {
        1.0
    }

    /// Qualification `rho`: the largest smoothness order the residual can
    /// exploit. Tikhonov saturates at 1; the other two are unbounded.
    pub fn qualification(&self) -> f64 {
        match self.kind {
            FilterKind::Tikhonov => 1.0,
            FilterKind::Landweber { .. } | FilterKind::Truncation => f64::INFINITY,
        }
    }

    /// Residual constant `omega_{rho'}` for `0 < rho' <= qualification`.
    pub fn omega(&self, rho_prime: f64) -> Result<f64> {
        if !(rho_prime > 0.0) {
            return Err(Error::BadParams(format!(
                "rho' must be positive, got {rho_prime}"
            )));
        }
        if rho_prime > self.qualification() {
            return Err(Error::BadParams(format!(
                "rho' = {rho_prime} exceeds the {} qualification {}",
                self.name(),
                self.qualification()
            )));
        }
        Ok(match self.kind {
            FilterKind::Tikhonov | FilterKind::Truncation => 1.0,
            FilterKind::Landweber { .. } => {
                if rho_prime <= 1.0 {
                    1.0
                } else {
                    rho_prime.powf(rho_prime)
                }
            }
        })
    }

    /// Landweber iteration count for a regularization level: `k = ceil(1/lambda)`.
    ///
    /// The classic indexing sets `k = 1/lambda` for integer `k`; the ceiling
    /// extends it to arbitrary positive `lambda` while reproducing the
    /// classic values at `lambda = 1/k`. Reciprocals that land within a few
    /// ulps of an integer snap to it, so `lambda = 1/49` yields `k = 49`
    /// even though `1/lambda` rounds slightly above 49.
    pub fn landweber_iterations(lambda: f64) -> f64 {
        let raw = 1.0 / lambda;
        let nearest = raw.round();
        if nearest >= 1.0 && (raw - nearest).abs() <= raw * 4.0 * f64::EPSILON {
            nearest
        } else {
            raw.ceil()
        }
    }

    /// `g_lambda(x)`. Total on `lambda > 0`, `x >= 0`.
    pub fn value(&self, lambda: f64, x: f64) -> f64 {
        debug_assert!(lambda > 0.0, "filter evaluated at lambda = {lambda}");
        match self.kind {
            FilterKind::Tikhonov => 1.0 / (x + lambda),
            FilterKind::Truncation => {
                if x >= lambda {
                    1.0 / x
                } else {
                    0.0
                }
            }
            FilterKind::Landweber { step } => {
                let k = Self::landweber_iterations(lambda);
                if x == 0.0 {
                    return step * k;
                }
                if step * x <= 1.0 {
                    // (1 - (1 - tau x)^k) / x through log1p/expm1: forming
                    // 1 - tau*x first would round away tau*x when it is tiny.
                    -((k * (-(step * x)).ln_1p()).exp_m1()) / x
                } else {
                    (1.0 - signed_pow(1.0 - step * x, k)) / x
                }
            }
        }
    }

    /// Residual `r_lambda(x) = 1 - x * g_lambda(x)`, evaluated in closed
    /// form per filter so the identity holds to machine precision.
    pub fn residual(&self, lambda: f64, x: f64) -> f64 {
        match self.kind {
            FilterKind::Tikhonov => lambda / (x + lambda),
            FilterKind::Truncation => {
                if x >= lambda {
                    0.0
                } else {
                    1.0
                }
            }
            FilterKind::Landweber { step } => {
                let k = Self::landweber_iterations(lambda);
                if step * x <= 1.0 {
                    (k * (-(step * x)).ln_1p()).exp()
                } else {
                    signed_pow(1.0 - step * x, k)
                }
            }
        }
    }
}

/// `base^k` for integer-valued `k >= 1` stored as f64, handling negative
/// bases by parity. `powf` alone would return NaN there.
fn signed_pow(base: f64, k: f64) -> f64 {
    if base >= 0.0 {
        base.powf(k)
    } else {
        let mag = (-base).powf(k);
        if (k % 2.0) == 0.0 {
            mag
        } else {
            -mag
        }
    }
}

/// Filter value on an eigendecomposition: `V diag(g_lambda(lambda_i)) V^T`.
///
/// Symmetric PSD for the filters in this crate (their values are nonnegative
/// on `[0, inf)`).
pub fn apply_filter(filter: &FilterSpec, lambda: f64, eig: &SymEig) -> Array2<f64> {
    eig.map(|x| filter.value(lambda, x))
}

/// Measured suprema for one `rho'` in the residual axiom.
#[derive(Debug, Clone)]
pub struct ResidualSup {
    pub rho_prime: f64,
    /// Grid supremum of `|r_lambda(x)| x^a lambda^-a` over `a in [0, rho']`.
    pub max_lhs: f64,
    /// Declared bound `omega_{rho'}`.
    pub bound: f64,
}

/// Outcome of [`verify_filter_axioms`].
#[derive(Debug, Clone)]
pub struct AxiomReport {
    /// Grid supremum of `lambda^{1-a} x^a g_lambda(x)` over `a in [0,1]`.
    pub max_lhs_axiom1: f64,
    /// Declared bound `E`.
    pub e_bound: f64,
    /// Residual-axiom suprema, one entry per requested `rho'`.
    pub max_lhs_axiom2: Vec<ResidualSup>,
    pub pass: bool,
}

/// Slack added to the declared constants when deciding `pass`.
pub const AXIOM_SLACK: f64 = 1e-9;

/// Check the two filter axioms on finite grids.
///
/// Both suprema are evaluated over a geometric x-grid of 512 points spanning
/// `[kappa2 * 1e-8, kappa2]` plus `x = 0`, and uniform alpha-grids of
/// `alpha_resolution` points on `[0,1]` (axiom 1) and `[0, rho']` (axiom 2,
/// once per entry of `rho_primes`). Passes iff every supremum is at most the
/// declared constant plus [`AXIOM_SLACK`]. The true suprema never exceed the
/// declared constants for a valid filter, so a finite grid can only
/// under-report them; a failure here is a genuine violation.
pub fn verify_filter_axioms(
    filter: &FilterSpec,
    lambda_grid: &[f64],
    kappa2: f64,
    alpha_resolution: usize,
    rho_primes: &[f64],
) -> Result<AxiomReport> {
    if alpha_resolution < MIN_ALPHA_RESOLUTION {
        return Err(Error::GridTooCoarse(format!(
            "alpha resolution {alpha_resolution} below minimum {MIN_ALPHA_RESOLUTION}"
        )));
    }
    if !(kappa2 > 0.0) {
        return Err(Error::BadParams(format!("kappa2 must be positive, got {kappa2}")));
    }
    if lambda_grid.is_empty() {
        return Err(Error::BadParams("lambda grid is empty".into()));
    }
    for &l in lambda_grid {
        if !(l > 0.0 && l <= kappa2) {
            return Err(Error::BadParams(format!(
                "lambda grid values must lie in (0, kappa2], got {l}"
            )));
        }
    }
    for &rp in rho_primes {
        // Also rejects rho' beyond the filter's qualification.
        filter.omega(rp)?;
    }

    let xs = x_grid(kappa2);
    let alphas1 = uniform_grid(0.0, 1.0, alpha_resolution);

    let mut max1 = f64::NEG_INFINITY;
    for &lambda in lambda_grid {
        for &x in &xs {
            let g = filter.value(lambda, x);
            for &a in &alphas1 {
                // lambda^{1-a} x^a g(x); 0^0 = 1 by convention on the grid.
                let lhs = lambda.powf(1.0 - a) * pow00(x, a) * g;
                if lhs > max1 {
                    max1 = lhs;
                }
            }
        }
    }

    let mut axiom2 = Vec::with_capacity(rho_primes.len());
    for &rp in rho_primes {
        let alphas2 = uniform_grid(0.0, rp, alpha_resolution);
        let mut max2 = f64::NEG_INFINITY;
        for &lambda in lambda_grid {
            for &x in &xs {
                let r = filter.residual(lambda, x).abs();
                if r == 0.0 {
                    continue;
                }
                for &a in &alphas2 {
                    let lhs = r * pow00(x / lambda, a);
                    if lhs > max2 {
                        max2 = lhs;
                    }
                }
            }
        }
        axiom2.push(ResidualSup {
            rho_prime: rp,
            max_lhs: max2,
            bound: filter.omega(rp)?,
        });
    }

    let e = filter.e_constant();
    let pass = max1 <= e + AXIOM_SLACK
        && axiom2
            .iter()
            .all(|s| s.max_lhs <= s.bound + AXIOM_SLACK);
    Ok(AxiomReport {
        max_lhs_axiom1: max1,
        e_bound: e,
        max_lhs_axiom2: axiom2,
        pass,
    })
}

fn x_grid(kappa2: f64) -> Vec<f64> {
    let lo = kappa2 * 1e-8;
    let ratio = (kappa2 / lo).powf(1.0 / (X_GRID_POINTS as f64 - 1.0));
    let mut xs = Vec::with_capacity(X_GRID_POINTS + 1);
    xs.push(0.0);
    let mut x = lo;
    for _ in 0..X_GRID_POINTS - 1 {
        xs.push(x);
        x *= ratio;
    }
    xs.push(kappa2);
    xs
}

fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points as f64 - 1.0);
    (0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

/// `x^a` with the `0^0 = 1` convention used throughout the axiom suprema.
fn pow00(x: f64, a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        x.powf(a)
    }
}
