//! Synthetic regression problems with prescribed spectral decay and
//! source smoothness.
//!
//! A problem is built on the truncated-Mercer kernel: the target is
//! `F*(x) = sum_{i <= M, j <= D} a_ij e_i(x) d_j` with coefficients chosen
//! so that the source-condition norm hits a prescribed bound exactly,
//!
//! `sum_{i,j} a_ij^2 / mu_i^beta = B^2`,
//!
//! with mass in every mode (`a_ij ~ mu_i^{beta/2} i^{-1/2}`), so observed
//! learning rates reflect the intended smoothness rather than an
//! accidentally easier target. Since both the target and every fitted
//! estimator live in the span of the first `M` basis functions, errors in
//! any interpolation norm reduce to finite coefficient sums — no Monte
//! Carlo integration is involved in measuring them.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Dataset, EigenFit, FittedEstimator};
use crate::kernels::Kernel;
use crate::rng::stream_rng;
use crate::spectral::FilterSpec;

/// Output noise law; coordinatewise independent, mean zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseLaw {
    /// Uniform on `[-b, b]` per coordinate. Bounded outputs satisfy the
    /// Bernstein moment condition non-asymptotically with
    /// `sigma = R = 2 * Y_inf`.
    BoundedUniform(f64),
    /// Centered Gaussian with the given per-coordinate standard deviation
    /// (sub-exponential, hence still within the moment condition).
    Gaussian(f64),
}

impl NoiseLaw {
    fn validate(&self) -> Result<()> {
        let param = match self {
            NoiseLaw::BoundedUniform(b) => *b,
            NoiseLaw::Gaussian(s) => *s,
        };
        if !(param >= 0.0) || !param.is_finite() {
            return Err(Error::BadParams(format!(
                "noise parameter must be finite and >= 0, got {param}"
            )));
        }
        Ok(())
    }

    /// Bernstein constants `(sigma, R)` certified by boundedness, given a
    /// bound `y_sup` on the output norm. `None` for unbounded noise.
    pub fn mom_constants(&self, y_sup: f64) -> Option<(f64, f64)> {
        match self {
            NoiseLaw::BoundedUniform(_) => Some((2.0 * y_sup, 2.0 * y_sup)),
            NoiseLaw::Gaussian(_) => None,
        }
    }
}

/// Serializable description of a synthetic problem.
///
/// This is the exact JSON schema the CLI consumes:
/// `{p, beta, B, M, D, noise: {kind, param}, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// Eigenvalue decay: `mu_i = i^{-1/p}`, `p in (0,1)`.
    pub p: f64,
    /// Source smoothness `beta > 0`.
    pub beta: f64,
    /// Source-condition norm bound, hit with equality.
    #[serde(rename = "B")]
    pub b: f64,
    /// Kernel truncation order.
    #[serde(rename = "M")]
    pub m: usize,
    /// Output dimension.
    #[serde(rename = "D")]
    pub d: usize,
    pub noise: NoiseLaw,
    /// Seed for the coefficient pattern (data draws use separate streams).
    pub seed: u64,
}

impl ProblemSpec {
    pub fn new(p: f64, beta: f64, b: f64, m: usize, d: usize, noise: NoiseLaw, seed: u64) -> Self {
        Self {
            p,
            beta,
            b,
            m,
            d,
            noise,
            seed,
        }
    }
}

/// A fully realized synthetic problem: spec plus coefficient matrix.
#[derive(Debug, Clone)]
pub struct MercerProblem {
    spec: ProblemSpec,
    kernel: Kernel,
    /// Mercer eigenvalues, length M.
    mu: Array1<f64>,
    /// Target coefficients, M x D.
    coeffs: Array2<f64>,
}

/// Build a problem from its spec. See [`MercerProblem::from_spec`].
pub fn make_problem(spec: &ProblemSpec) -> Result<MercerProblem> {
    MercerProblem::from_spec(spec)
}

impl MercerProblem {
    /// Draw the coefficient pattern and normalize the source-condition sum
    /// to `B^2` exactly.
    ///
    /// Shape: `a_i = c * mu_i^{beta/2} * i^{-1/2} * u_i` with `u_i` a seeded
    /// unit vector in `R^D` (first non-negligible coordinate positive), and
    /// `c` the exact normalizer.
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        if !(spec.beta > 0.0) || !spec.beta.is_finite() {
            return Err(Error::BadParams(format!(
                "beta must be positive and finite, got {}",
                spec.beta
            )));
        }
        if !(spec.b > 0.0) || !spec.b.is_finite() {
            return Err(Error::BadParams(format!(
                "B must be positive and finite, got {}",
                spec.b
            )));
        }
        if spec.d == 0 {
            return Err(Error::BadParams("output dimension D must be >= 1".into()));
        }
        spec.noise.validate()?;
        // Also validates p in (0,1) and M >= 1.
        let kernel = Kernel::truncated_mercer(spec.p, spec.m)?;
        let mu = kernel.mercer_eigenpairs()?.eigenvalues().clone();

        let mut rng = stream_rng(spec.seed, COEFF_STREAM);
        let mut coeffs = Array2::zeros((spec.m, spec.d));
        for i in 0..spec.m {
            let mut u: Array1<f64> =
                Array1::from_iter((0..spec.d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let norm = u.mapv(|v| v * v).sum().sqrt();
            if norm == 0.0 {
                u[0] = 1.0;
            } else {
                u.mapv_inplace(|v| v / norm);
            }
            let lead = u.iter().find(|v| v.abs() > 1e-12).copied().unwrap_or(1.0);
            if lead < 0.0 {
                u.mapv_inplace(|v| -v);
            }
            let scale = mu[i].powf(spec.beta / 2.0) / ((i + 1) as f64).sqrt();
            coeffs.row_mut(i).assign(&(&u * scale));
        }
        // Normalize sum a^2 / mu^beta to B^2 exactly.
        let mut src = 0.0;
        for i in 0..spec.m {
            let w = mu[i].powf(-spec.beta);
            src += coeffs.row(i).mapv(|v| v * v).sum() * w;
        }
        let c = spec.b / src.sqrt();
        coeffs.mapv_inplace(|v| v * c);

        Ok(Self {
            spec: spec.clone(),
            kernel,
            mu,
            coeffs,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Mercer eigenvalues `mu_i = i^{-1/p}`, descending.
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.mu
    }

    /// Target coefficients `a`, M x D.
    pub fn coefficients(&self) -> ArrayView2<'_, f64> {
        self.coeffs.view()
    }

    /// `F*(x)`: the target evaluated at a point of `[0,1]`.
    pub fn truth_at(&self, x: f64) -> Array1<f64> {
        let mut out = Array1::zeros(self.spec.d);
        for i in 0..self.spec.m {
            let e = crate::kernels::basis(i + 1, x);
            out.scaled_add(e, &self.coeffs.row(i));
        }
        out
    }

    /// `F*` evaluated at each covariate row, shape n x D.
    pub fn truth_batch(&self, xs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let e = self.kernel.basis_matrix(xs)?;
        Ok(e.t().dot(&self.coeffs))
    }

    /// Interpolation norm of the target:
    /// `sqrt(sum_{i,j} a_ij^2 / mu_i^gamma)`.
    ///
    /// `gamma = 0` is the `L2` norm (Parseval), `gamma = beta` recovers `B`
    /// by construction, `gamma = 1` the Hilbert-space norm.
    pub fn interp_norm(&self, gamma: f64) -> f64 {
        assert!(gamma >= 0.0, "gamma must be >= 0, got {gamma}");
        let mut acc = 0.0;
        for i in 0..self.spec.m {
            acc += self.coeffs.row(i).mapv(|v| v * v).sum() * self.mu[i].powf(-gamma);
        }
        acc.sqrt()
    }

    /// Hard bound on `|Y|`: `sup_x |F*(x)| + noise halfwidth`, infinite for
    /// Gaussian noise. Coarse (triangle inequality) but certified.
    pub fn y_sup_bound(&self) -> f64 {
        let f_sup: f64 = (0..self.spec.m)
            .map(|i| {
                let row_norm = self.coeffs.row(i).mapv(|v| v * v).sum().sqrt();
                row_norm * std::f64::consts::SQRT_2
            })
            .sum();
        match self.spec.noise {
            NoiseLaw::BoundedUniform(b) => f_sup + b * (self.spec.d as f64).sqrt(),
            NoiseLaw::Gaussian(_) => f64::INFINITY,
        }
    }

    /// Draw an i.i.d. sample: `x ~ uniform[0,1]`, `y = F*(x) + eps`.
    ///
    /// Draw order is fixed (all covariates, then the noise matrix row by
    /// row), so a given generator state pins down the dataset.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::BadParams("sample size must be >= 1".into()));
        }
        let unit = Uniform::new(0.0, 1.0).expect("valid range");
        let xs: Vec<f64> = (0..n).map(|_| unit.sample(rng)).collect();

        // F*(xs) in one pass: E^T a, with E the basis matrix.
        let xs_col = Array2::from_shape_vec((n, 1), xs.clone()).expect("shape");
        let e = self.kernel.basis_matrix(xs_col.view())?;
        let mut ys = e.t().dot(&self.coeffs);

        match self.spec.noise {
            NoiseLaw::BoundedUniform(b) => {
                if b > 0.0 {
                    let law = Uniform::new_inclusive(-b, b).expect("valid range");
                    for v in ys.iter_mut() {
                        *v += law.sample(rng);
                    }
                }
            }
            NoiseLaw::Gaussian(s) => {
                if s > 0.0 {
                    let law = Normal::new(0.0, s).expect("valid sigma");
                    for v in ys.iter_mut() {
                        *v += law.sample(rng);
                    }
                }
            }
        }
        Dataset::new(xs_col, ys)
    }

    /// Exact squared `gamma`-norm error of a fitted estimator,
    /// `sum_{i,j} (c_hat_ij - a_ij)^2 / mu_i^gamma`, for `gamma in [0,1)`.
    ///
    /// `gamma = 0` is the squared `L2(pi)` distance, computed exactly —
    /// both functions live in the span of the first `M` basis elements.
    pub fn exact_error(&self, est: &FittedEstimator, gamma: f64) -> Result<f64> {
        let frame = CoefficientFrame::for_estimator(self, est)?;
        let coeffs = frame.coefficients(est.filter(), est.lambda());
        frame.error_sq(&coeffs, gamma)
    }
}

/// Stream id reserved for the coefficient pattern of a problem seed.
const COEFF_STREAM: u64 = u64::MAX;

/// Coefficient-space view of an eigendecomposition against a problem's
/// basis: turns a `(filter, lambda)` pair into the estimator's basis
/// coefficients without materializing any n x n matrix.
///
/// Precomputes `E V` (M x n) and reuses `V^T Y` from the fit, so each
/// lambda evaluation costs `O(n M D)`. This is what makes oracle-grid
/// lambda selection affordable inside the rate sweeps.
#[derive(Debug)]
pub struct CoefficientFrame<'p> {
    problem: &'p MercerProblem,
    /// `E V`: basis matrix times eigenvectors, M x n.
    ev: Array2<f64>,
    /// `V^T Y`, n x D.
    vt_y: Array2<f64>,
    /// Eigenvalues of K/n, descending.
    sigma: Array1<f64>,
    n: usize,
}

impl<'p> CoefficientFrame<'p> {
    /// Frame for a reusable eigendecomposition.
    pub fn new(problem: &'p MercerProblem, efit: &EigenFit) -> Result<Self> {
        Self::from_core(problem, efit.core().as_ref())
    }

    /// Frame for a single fitted estimator.
    pub fn for_estimator(problem: &'p MercerProblem, est: &FittedEstimator) -> Result<Self> {
        Self::from_core(problem, est.core().as_ref())
    }

    fn from_core(
        problem: &'p MercerProblem,
        core: &crate::estimators::FitCore,
    ) -> Result<Self> {
        if core.kernel != problem.kernel {
            return Err(Error::KernelMismatch(format!(
                "problem uses {:?}, estimator uses {:?}",
                problem.kernel, core.kernel
            )));
        }
        let e = problem.kernel.basis_matrix(core.data.xs())?;
        let ev = e.dot(core.eig.eigenvectors());
        Ok(Self {
            problem,
            ev,
            vt_y: core.vt_y.clone(),
            sigma: core.eig.eigenvalues().clone(),
            n: core.data.n(),
        })
    }

    /// Basis coefficients of the fitted function for `(filter, lambda)`:
    /// `c_hat = diag(mu) E W Y` with `W = (1/n) g_lambda(K/n)`, shape M x D.
    /// Evaluated as `diag(mu) (E V) diag(g/n) (V^T Y)`; the decomposition is
    /// full, so the zero eigenspace (where `g_lambda(0)` may be nonzero)
    /// is already accounted for.
    pub fn coefficients(&self, filter: &FilterSpec, lambda: f64) -> Array2<f64> {
        let n = self.n as f64;
        let mut scaled = self.vt_y.clone();
        for (k, mut row) in scaled.rows_mut().into_iter().enumerate() {
            let w = filter.value(lambda, self.sigma[k]) / n;
            row.mapv_inplace(|v| v * w);
        }
        let mut coeffs = self.ev.dot(&scaled);
        for (i, mut row) in coeffs.rows_mut().into_iter().enumerate() {
            let m = self.problem.mu[i];
            row.mapv_inplace(|v| v * m);
        }
        coeffs
    }

    /// Exact squared `gamma`-norm distance between estimator coefficients
    /// and the target, `gamma in [0,1)`.
    pub fn error_sq(&self, coeffs: &Array2<f64>, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        let diff = coeffs - &self.problem.coeffs;
        Ok(self.weighted_sq(&diff, gamma))
    }

    /// Exact squared `gamma`-norm distance between two coefficient sets.
    pub fn distance_sq(&self, a: &Array2<f64>, b: &Array2<f64>, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        let diff = a - b;
        Ok(self.weighted_sq(&diff, gamma))
    }

    fn weighted_sq(&self, diff: &Array2<f64>, gamma: f64) -> f64 {
        let mut acc = 0.0;
        for (i, row) in diff.rows().into_iter().enumerate() {
            acc += row.mapv(|v| v * v).sum() * self.problem.mu[i].powf(-gamma);
        }
        acc
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::BadParams(format!(
            "estimator errors are defined for gamma in [0,1), got {gamma}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn spec(p: f64, beta: f64, b: f64, m: usize, d: usize) -> ProblemSpec {
        ProblemSpec::new(p, beta, b, m, d, NoiseLaw::BoundedUniform(0.25), 42)
    }

    #[test]
    fn single_mode_coefficient() {
        // D=1, M=1, beta=2, p=0.5, B=1: normalization forces a_11^2/mu_1^2 = 1.
        let prob = make_problem(&spec(0.5, 2.0, 1.0, 1, 1)).unwrap();
        assert_abs_diff_eq!(prob.coefficients()[(0, 0)], 1.0, epsilon = 1e-12);
    }

    /// Direct summation oracle for the source-condition identity.
    #[test]
    fn src_identity_exact() {
        for seed in [1u64, 7, 20240601] {
            let mut s = spec(0.5, 1.5, 2.0, 64, 3);
            s.seed = seed;
            let prob = make_problem(&s).unwrap();
            let mut acc = 0.0;
            for i in 0..64 {
                let mu = ((i + 1) as f64).powf(-2.0);
                for j in 0..3 {
                    let a = prob.coefficients()[(i, j)];
                    acc += a * a / mu.powf(1.5);
                }
            }
            assert_abs_diff_eq!(acc, 4.0, epsilon = 1e-10);
        }
    }

    /// Smaller gamma gives a finite (indeed smaller) weighted sum; the
    /// generated target lives in every weaker interpolation space.
    #[test]
    fn interp_norm_monotone_in_gamma() {
        let prob = make_problem(&spec(0.5, 2.0, 1.0, 128, 2)).unwrap();
        let mut last = 0.0;
        for &gamma in &[0.0, 0.5, 1.0, 1.5, 2.0] {
            let norm = prob.interp_norm(gamma);
            assert!(norm.is_finite());
            assert!(norm >= last, "gamma={gamma}: {norm} < {last}");
            last = norm;
        }
        assert_abs_diff_eq!(prob.interp_norm(2.0), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn well_specified_norm_finite() {
        // beta >= 1 targets admit a representer: gamma = 1 norm is finite.
        let prob = make_problem(&spec(0.25, 1.0, 3.0, 256, 1)).unwrap();
        assert!(prob.interp_norm(1.0).is_finite());
    }

    #[test]
    fn noiseless_sample_hits_truth() {
        let mut s = spec(0.5, 2.0, 1.0, 32, 2);
        s.noise = NoiseLaw::BoundedUniform(0.0);
        let prob = make_problem(&s).unwrap();
        let mut rng = stream_rng(5, 0);
        let data = prob.sample(20, &mut rng).unwrap();
        for i in 0..20 {
            let truth = prob.truth_at(data.xs()[(i, 0)]);
            for j in 0..2 {
                assert_abs_diff_eq!(data.ys()[(i, j)], truth[j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let prob = make_problem(&spec(0.5, 1.0, 1.0, 16, 2)).unwrap();
        let a = prob.sample(50, &mut stream_rng(9, 3)).unwrap();
        let b = prob.sample(50, &mut stream_rng(9, 3)).unwrap();
        assert_eq!(a.xs(), b.xs());
        assert_eq!(a.ys(), b.ys());
    }

    /// CLT band: empirical noise mean within 3 sd / sqrt(n) of zero.
    #[test]
    fn noise_mean_within_clt_band() {
        let mut s = spec(0.5, 2.0, 1.0, 32, 2);
        s.noise = NoiseLaw::BoundedUniform(0.5);
        let prob = make_problem(&s).unwrap();
        let n = 100;
        let mut rng = stream_rng(42, 0);
        let data = prob.sample(n, &mut rng).unwrap();
        // sd of uniform[-b,b] is b/sqrt(3).
        let sd = 0.5 / 3f64.sqrt();
        let band = 3.0 * sd / (n as f64).sqrt();
        for j in 0..2 {
            let mean: f64 = (0..n)
                .map(|i| data.ys()[(i, j)] - prob.truth_at(data.xs()[(i, 0)])[j])
                .sum::<f64>()
                / n as f64;
            assert!(mean.abs() < band, "coordinate {j}: mean {mean} vs band {band}");
        }
    }

    #[test]
    fn zero_predictor_error_is_truth_norm() {
        let prob = make_problem(&spec(0.5, 1.0, 1.0, 32, 2)).unwrap();
        let mut rng = stream_rng(11, 0);
        let data = prob.sample(24, &mut rng).unwrap();
        let zeroed = Dataset::new(data.xs().to_owned(), Array2::zeros((24, 2))).unwrap();
        let est = fit(
            zeroed,
            prob.kernel().clone(),
            &FilterSpec::tikhonov(),
            0.1,
        )
        .unwrap();
        let err = prob.exact_error(&est, 0.0).unwrap();
        let l2 = prob.interp_norm(0.0);
        assert_abs_diff_eq!(err, l2 * l2, epsilon = 1e-10);
    }

    /// Quadrature oracle: the exact L2 error formula agrees with numerical
    /// integration of |F_hat - F*|^2 over [0,1].
    #[test]
    fn exact_error_matches_quadrature() {
        let prob = make_problem(&spec(0.5, 1.5, 1.0, 24, 2)).unwrap();
        let mut rng = stream_rng(13, 1);
        let data = prob.sample(32, &mut rng).unwrap();
        let est = fit(
            data,
            prob.kernel().clone(),
            &FilterSpec::tikhonov(),
            0.05,
        )
        .unwrap();
        let exact = prob.exact_error(&est, 0.0).unwrap();

        let quad_points = 200_000;
        let h = 1.0 / quad_points as f64;
        let mut acc = 0.0;
        for q in 0..quad_points {
            let x = (q as f64 + 0.5) * h;
            let pred = est.predict(ndarray::array![x].view()).unwrap();
            let truth = prob.truth_at(x);
            acc += (&pred - &truth).mapv(|v| v * v).sum() * h;
        }
        let rel = (exact - acc).abs() / acc.max(1e-300);
        assert!(rel < 1e-4, "exact {exact} vs quadrature {acc} (rel {rel})");
    }

    /// Noiseless interpolation: a single-mode target is recovered exactly,
    /// and a multi-mode one has error decreasing in n.
    #[test]
    fn noiseless_error_decreases() {
        let one = ProblemSpec::new(0.5, 2.0, 1.0, 1, 1, NoiseLaw::BoundedUniform(0.0), 3);
        let prob = make_problem(&one).unwrap();
        for (idx, &n) in [8usize, 32, 128].iter().enumerate() {
            let data = prob.sample(n, &mut stream_rng(100, idx as u64)).unwrap();
            let est = fit(data, prob.kernel().clone(), &FilterSpec::truncation(), 1e-9).unwrap();
            assert!(prob.exact_error(&est, 0.0).unwrap() < 1e-10);
        }

        let many = ProblemSpec::new(0.5, 2.0, 1.0, 64, 1, NoiseLaw::BoundedUniform(0.0), 3);
        let prob = make_problem(&many).unwrap();
        let mut errs = Vec::new();
        for (idx, &n) in [8usize, 24, 64].iter().enumerate() {
            let data = prob.sample(n, &mut stream_rng(100, idx as u64)).unwrap();
            let est = fit(data, prob.kernel().clone(), &FilterSpec::truncation(), 1e-9).unwrap();
            errs.push(prob.exact_error(&est, 0.0).unwrap());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] < 1e-6, "{errs:?}");
    }

    #[test]
    fn kernel_mismatch_detected() {
        let prob = make_problem(&spec(0.5, 1.0, 1.0, 16, 1)).unwrap();
        let other = make_problem(&spec(0.25, 1.0, 1.0, 16, 1)).unwrap();
        let data = prob.sample(8, &mut stream_rng(1, 0)).unwrap();
        let est = fit(
            data,
            other.kernel().clone(),
            &FilterSpec::tikhonov(),
            0.1,
        )
        .unwrap();
        assert!(matches!(
            prob.exact_error(&est, 0.0),
            Err(Error::KernelMismatch(_))
        ));
    }

    #[test]
    fn gamma_one_rejected_for_estimator_errors() {
        let prob = make_problem(&spec(0.5, 1.0, 1.0, 16, 1)).unwrap();
        let data = prob.sample(8, &mut stream_rng(1, 0)).unwrap();
        let est = fit(data, prob.kernel().clone(), &FilterSpec::tikhonov(), 0.1).unwrap();
        assert!(prob.exact_error(&est, 1.0).is_err());
        assert!(prob.exact_error(&est, -0.1).is_err());
    }

    #[test]
    fn problem_spec_json_round_trip() {
        let s = spec(0.5, 1.0, 1.0, 512, 2);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"B\":1.0"), "{json}");
        assert!(json.contains("\"kind\":\"bounded_uniform\""), "{json}");
        let back: ProblemSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        // Unknown fields rejected.
        let bad = json.replace("\"p\":0.5", "\"p\":0.5,\"extra\":1");
        assert!(serde_json::from_str::<ProblemSpec>(&bad).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Problem specs survive the JSON round trip, and the SRC
            /// identity holds for every generated problem.
            #[test]
            fn spec_round_trip_and_src(
                p in 0.1f64..=0.9,
                beta in 0.2f64..=4.0,
                b in 0.1f64..=10.0,
                m in 1usize..=64,
                d in 1usize..=4,
                seed in any::<u64>(),
            ) {
                let spec = ProblemSpec::new(p, beta, b, m, d, NoiseLaw::Gaussian(0.1), seed);
                let json = serde_json::to_string(&spec).unwrap();
                let back: ProblemSpec = serde_json::from_str(&json).unwrap();
                prop_assert_eq!(&back, &spec);

                let prob = make_problem(&spec).unwrap();
                let src = prob.interp_norm(beta);
                prop_assert!((src - b).abs() <= 1e-10 * b.max(1.0), "src = {src}, b = {b}");
            }
        }
    }

    /// Bernstein moment inequality for bounded noise, checked by Monte Carlo
    /// on the actual sampled residuals.
    #[test]
    fn bounded_noise_satisfies_moment_condition() {
        let prob = make_problem(&spec(0.5, 2.0, 1.0, 16, 2)).unwrap();
        let y_sup = prob.y_sup_bound();
        let (sigma, r) = prob.spec().noise.mom_constants(y_sup).unwrap();
        let n = 20_000;
        let data = prob.sample(n, &mut stream_rng(77, 0)).unwrap();
        for q in [2u32, 3, 4] {
            let mut acc = 0.0;
            for i in 0..n {
                let eps = (&data.ys().row(i) - &prob.truth_at(data.xs()[(i, 0)]))
                    .mapv(|v| v * v)
                    .sum()
                    .sqrt();
                acc += eps.powi(q as i32);
            }
            let moment = acc / n as f64;
            let factorial: f64 = (1..=q).map(f64::from).product();
            let bound = 0.5 * factorial * sigma * sigma * r.powi(q as i32 - 2);
            assert!(moment <= bound, "q={q}: {moment} > {bound}");
        }
    }

}
