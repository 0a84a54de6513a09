//! Spectral estimators for vector-valued regression.
//!
//! All filter-based algorithms share one closed form. With Gram matrix
//! `K_{ij} = k(x_i, x_j)` and a filter `g_lambda`,
//!
//! `F_hat(x) = sum_i y_i alpha_i(x)`, `alpha(x) = (1/n) g_lambda(K/n) k_x`,
//!
//! so ridge, gradient descent and principal component regression differ only
//! in the scalar function applied to the eigenvalues of `K/n`. Fitting
//! eigendecomposes `K/n` once; sweeping `lambda` or switching filters over
//! the same data reuses the decomposition through [`EigenFit`].
//!
//! For the truncated-Mercer kernel the feature map is finite, so the primal
//! operator `C_hat = C_YX g_lambda(C_X)` can be formed explicitly. The dual
//! and primal predictions agree by the commutation identity
//! `g_lambda(S S*/n) S = S g_lambda(S* S/n)`; [`primal_fit`] exists to make
//! that equality executable as a cross-check at small scale.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::spectral::{apply_filter, sym_eig, FilterKind, FilterSpec, SymEig};

/// A regression dataset: covariate rows paired with output rows in `R^D`.
#[derive(Debug, Clone)]
pub struct Dataset {
    xs: Array2<f64>,
    ys: Array2<f64>,
}

impl Dataset {
    pub fn new(xs: Array2<f64>, ys: Array2<f64>) -> Result<Self> {
        if xs.nrows() == 0 {
            return Err(Error::BadParams("dataset must contain at least one point".into()));
        }
        if xs.nrows() != ys.nrows() {
            return Err(Error::BadParams(format!(
                "covariate count {} does not match output count {}",
                xs.nrows(),
                ys.nrows()
            )));
        }
        if ys.ncols() == 0 {
            return Err(Error::BadParams("output dimension must be >= 1".into()));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::BadParams("dataset contains non-finite entries".into()));
        }
        Ok(Self { xs, ys })
    }

    /// Scalar-covariate convenience constructor.
    pub fn from_scalars(xs: &[f64], ys: Array2<f64>) -> Result<Self> {
        let xs = Array2::from_shape_vec((xs.len(), 1), xs.to_vec())
            .expect("shape matches input length");
        Self::new(xs, ys)
    }

    pub fn n(&self) -> usize {
        self.xs.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.ys.ncols()
    }

    pub fn xs(&self) -> ArrayView2<'_, f64> {
        self.xs.view()
    }

    pub fn ys(&self) -> ArrayView2<'_, f64> {
        self.ys.view()
    }
}

/// Shared, filter-independent part of a fit: the data, the kernel, and the
/// eigendecomposition of `K/n`. Everything downstream is read-only.
#[derive(Debug)]
pub(crate) struct FitCore {
    pub(crate) data: Dataset,
    pub(crate) kernel: Kernel,
    pub(crate) eig: Arc<SymEig>,
    /// `V^T Y`, precomputed once per dataset (n x D).
    pub(crate) vt_y: Array2<f64>,
}

/// Eigendecomposition of `K/n` for one dataset, reusable across filters
/// and regularization levels.
#[derive(Debug, Clone)]
pub struct EigenFit {
    core: Arc<FitCore>,
}

impl EigenFit {
    /// Build the Gram matrix and eigendecompose `K/n`. Cost `O(n^3)`, paid once.
    pub fn new(data: Dataset, kernel: Kernel) -> Result<Self> {
        let n = data.n();
        let mut k = kernel.gram(data.xs())?;
        k.mapv_inplace(|v| v / n as f64);
        let eig = Arc::new(sym_eig(k.view())?);
        let vt_y = eig.eigenvectors().t().dot(&data.ys());
        Ok(Self {
            core: Arc::new(FitCore {
                data,
                kernel,
                eig,
                vt_y,
            }),
        })
    }

    /// Same covariates and eigendecomposition, different outputs.
    ///
    /// The Gram matrix depends only on the covariates, so swapping the
    /// output matrix (e.g. noiseless targets for a bias/variance split)
    /// must not pay the eigendecomposition again.
    pub fn with_outputs(&self, ys: Array2<f64>) -> Result<Self> {
        let data = Dataset::new(self.core.data.xs.clone(), ys)?;
        let vt_y = self.core.eig.eigenvectors().t().dot(&data.ys());
        Ok(Self {
            core: Arc::new(FitCore {
                data,
                kernel: self.core.kernel.clone(),
                eig: Arc::clone(&self.core.eig),
                vt_y,
            }),
        })
    }

    /// Attach a filter and regularization level. Cheap: `O(n)` beyond the
    /// shared decomposition.
    pub fn with_filter(&self, filter: &FilterSpec, lambda: f64) -> Result<FittedEstimator> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::BadParams(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        if let FilterKind::Landweber { step } = filter.kind() {
            let product = step * self.core.kernel.kappa2();
            if product > 1.0 {
                return Err(Error::StepTooLarge(product));
            }
        }
        let n = self.core.data.n() as f64;
        let g_scaled = self
            .core
            .eig
            .eigenvalues()
            .mapv(|x| filter.value(lambda, x) / n);
        Ok(FittedEstimator {
            core: Arc::clone(&self.core),
            filter: *filter,
            lambda,
            g_scaled,
            weight: OnceLock::new(),
        })
    }

    pub fn eig(&self) -> &SymEig {
        &self.core.eig
    }

    pub fn data(&self) -> &Dataset {
        &self.core.data
    }

    pub fn kernel(&self) -> &Kernel {
        &self.core.kernel
    }

    pub(crate) fn core(&self) -> &Arc<FitCore> {
        &self.core
    }
}

/// A fitted spectral estimator: `F_hat(x) = Y^T W k_x` with
/// `W = (1/n) g_lambda(K/n)`.
#[derive(Debug)]
pub struct FittedEstimator {
    core: Arc<FitCore>,
    filter: FilterSpec,
    lambda: f64,
    /// `g_lambda(sigma_i) / n`, paired with the eigenvector columns.
    g_scaled: Array1<f64>,
    weight: OnceLock<Array2<f64>>,
}

impl FittedEstimator {
    /// Representer weights `alpha(x) = W k_x`.
    pub fn alpha(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let kx = self.core.kernel.column(self.core.data.xs(), x)?;
        let mut t = self.core.eig.eigenvectors().t().dot(&kx);
        t *= &self.g_scaled;
        Ok(self.core.eig.eigenvectors().dot(&t))
    }

    /// Predicted output `F_hat(x) = Y^T alpha(x)`.
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let alpha = self.alpha(x)?;
        Ok(self.core.data.ys().t().dot(&alpha))
    }

    /// Row-per-point batch prediction. Implemented as a loop over
    /// [`FittedEstimator::predict`], so batching is exact by construction.
    pub fn predict_batch(&self, xs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((xs.nrows(), self.core.data.output_dim()));
        for (i, row) in xs.rows().into_iter().enumerate() {
            out.row_mut(i).assign(&self.predict(row)?);
        }
        Ok(out)
    }

    /// The filtered matrix `W = (1/n) g_lambda(K/n)`, materialized on first
    /// access. Prediction never needs the full matrix; it exists for
    /// diagnostics and the identities tested against it.
    pub fn weight_matrix(&self) -> &Array2<f64> {
        self.weight.get_or_init(|| {
            let n = self.core.data.n() as f64;
            let mut w = apply_filter(&self.filter, self.lambda, &self.core.eig);
            w.mapv_inplace(|v| v / n);
            w
        })
    }

    /// Mean squared `Y`-norm residual `1/n sum_i |y_i - F_hat(x_i)|^2`
    /// over the given data.
    pub fn empirical_risk(&self, data: &Dataset) -> Result<f64> {
        if data.output_dim() != self.core.data.output_dim() {
            return Err(Error::BadParams(format!(
                "output dimension {} does not match fitted dimension {}",
                data.output_dim(),
                self.core.data.output_dim()
            )));
        }
        let preds = self.predict_batch(data.xs())?;
        let resid = &preds - &data.ys();
        Ok(resid.mapv(|v| v * v).sum() / data.n() as f64)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn filter(&self) -> &FilterSpec {
        &self.filter
    }

    pub fn kernel(&self) -> &Kernel {
        &self.core.kernel
    }

    pub fn data(&self) -> &Dataset {
        &self.core.data
    }

    pub fn eig(&self) -> &SymEig {
        &self.core.eig
    }

    pub(crate) fn core(&self) -> &Arc<FitCore> {
        &self.core
    }
}

/// Fit a spectral estimator: eigendecompose `K/n` and attach the filter.
pub fn fit(
    data: Dataset,
    kernel: Kernel,
    filter: &FilterSpec,
    lambda: f64,
) -> Result<FittedEstimator> {
    EigenFit::new(data, kernel)?.with_filter(filter, lambda)
}

/// The explicit primal operator `C_hat = C_YX g_lambda(C_X)` in the
/// truncated-Mercer feature basis, as a `D x M` coefficient matrix.
///
/// Intended for small `n`, `M`, `D`: this is the independent route against
/// which the dual path is checked, not a production fitting path.
#[derive(Debug, Clone)]
pub struct PrimalOperator {
    coeffs: Array2<f64>,
    kernel: Kernel,
}

impl PrimalOperator {
    /// Prediction `C_hat phi(x)`.
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let phi = self
            .kernel
            .weighted_basis_matrix(x.insert_axis(ndarray::Axis(0)))?;
        Ok(self.coeffs.dot(&phi.column(0)))
    }

    /// `D x M` coefficient matrix in the `d_j (x) sqrt(mu_i) e_i` basis.
    pub fn coefficients(&self) -> ArrayView2<'_, f64> {
        self.coeffs.view()
    }
}

/// Fit the primal operator form on the explicit finite feature map.
///
/// Builds `C_X = (1/n) sum phi(x_i) phi(x_i)^T` (`M x M`) and
/// `C_YX = (1/n) sum y_i phi(x_i)^T` (`D x M`), eigendecomposes `C_X`,
/// and returns `C_YX g_lambda(C_X)`.
pub fn primal_fit(
    data: &Dataset,
    kernel: &Kernel,
    filter: &FilterSpec,
    lambda: f64,
) -> Result<PrimalOperator> {
    if !matches!(kernel, Kernel::TruncatedMercer { .. }) {
        return Err(Error::WrongKind {
            expected: "truncated-mercer",
            got: kernel.name(),
        });
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::BadParams(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if let FilterKind::Landweber { step } = filter.kind() {
        let product = step * kernel.kappa2();
        if product > 1.0 {
            return Err(Error::StepTooLarge(product));
        }
    }
    let n = data.n() as f64;
    let phi = kernel.weighted_basis_matrix(data.xs())?; // M x n
    let cx = phi.dot(&phi.t()) / n; // M x M
    let cx = {
        // Exact symmetry for the eigensolver.
        let mut m = cx;
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    };
    let cyx = data.ys().t().dot(&phi.t()) / n; // D x M
    let eig = sym_eig(cx.view())?;
    let g = apply_filter(filter, lambda, &eig);
    Ok(PrimalOperator {
        coeffs: cyx.dot(&g),
        kernel: kernel.clone(),
    })
}
