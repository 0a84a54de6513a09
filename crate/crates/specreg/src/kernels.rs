//! Scalar positive-definite kernels and Gram matrices.
//!
//! Besides the usual Gaussian and Laplace kernels, this module carries a
//! truncated-Mercer kernel whose eigendecomposition is known in closed form:
//!
//! `k(x, x') = sum_{i=1}^{M} mu_i e_i(x) e_i(x')` on `[0,1]`, with
//! `mu_i = i^{-1/p}` and `e_i(x) = sqrt(2) cos(i pi x)`.
//!
//! The cosine basis is orthonormal in `L2(uniform[0,1])` and uniformly
//! bounded by `sqrt(2)`, so the eigenvalue decay `p`, and with it the
//! effective dimension and every learning-rate exponent, is under explicit
//! control. The rate experiments rely on that; Gaussian and Laplace kernels
//! are used where eigenstructure does not need to be known.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// A scalar positive-definite kernel with sup bound `kappa^2` on `k(x,x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `exp(-|x - x'|^2 / (2 s^2))` on `R^d`.
    Gaussian { bandwidth: f64 },
    /// `exp(-|x - x'| / s)` on `R^d`.
    Laplace { bandwidth: f64 },
    /// Rank-`order` Mercer kernel on `[0,1]` with eigenvalues `i^{-1/decay}`.
    TruncatedMercer { decay: f64, order: usize },
}

impl Kernel {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        Ok(Kernel::Gaussian { bandwidth })
    }

    pub fn laplace(bandwidth: f64) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        Ok(Kernel::Laplace { bandwidth })
    }

    /// Truncated-Mercer kernel with decay exponent `p in (0,1)` and
    /// truncation order `M >= 1`.
    ///
    /// `p = 1` is rejected: a decay floor of `i^{-1}` makes the trace
    /// diverge, which is incompatible with a bounded kernel.
    pub fn truncated_mercer(decay: f64, order: usize) -> Result<Self> {
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::BadParams(format!(
                "Mercer decay p must lie in (0,1); p = {decay} is incompatible with a bounded kernel"
            )));
        }
        if order == 0 {
            return Err(Error::BadParams("truncation order must be >= 1".into()));
        }
        Ok(Kernel::TruncatedMercer { decay, order })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Gaussian { .. } => "gaussian",
            Kernel::Laplace { .. } => "laplace",
            Kernel::TruncatedMercer { .. } => "truncated-mercer",
        }
    }

    /// Sup of `k(x,x)` over the domain.
    pub fn kappa2(&self) -> f64 {
        match self {
            Kernel::Gaussian { .. } | Kernel::Laplace { .. } => 1.0,
            Kernel::TruncatedMercer { decay, order } => {
                // sup_x sum mu_i e_i(x)^2 = 2 * sum mu_i, attained at x = 0.
                2.0 * (1..=*order).map(|i| mu(*decay, i)).sum::<f64>()
            }
        }
    }

    /// Kernel value at a pair of points (rows of the same dimension).
    pub fn eval(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.eval_unchecked(x, y))
    }

    fn eval_unchecked(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
        match self {
            Kernel::Gaussian { bandwidth } => {
                let d2: f64 = x
                    .iter()
                    .zip(y.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (-d2 / (2.0 * bandwidth * bandwidth)).exp()
            }
            Kernel::Laplace { bandwidth } => {
                let d2: f64 = x
                    .iter()
                    .zip(y.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (-d2.sqrt() / bandwidth).exp()
            }
            Kernel::TruncatedMercer { decay, order } => {
                let (u, v) = (x[0], y[0]);
                (1..=*order)
                    .map(|i| mu(*decay, i) * basis(i, u) * basis(i, v))
                    .sum()
            }
        }
    }

    /// Gram matrix: entry `(i,j) = k(xs_i, xs_j)`. Exactly symmetric.
    pub fn gram(&self, xs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let n = xs.nrows();
        for row in xs.rows() {
            self.check_point(row)?;
        }
        match self {
            Kernel::TruncatedMercer { decay, order } => {
                // K = G^T G with G = diag(sqrt(mu)) E, computed as one
                // product and then symmetrized to the exact mean of the
                // paired entries.
                let g = self.weighted_basis_matrix(xs)?;
                let mut k = g.t().dot(&g);
                for i in 0..n {
                    for j in (i + 1)..n {
                        let v = 0.5 * (k[(i, j)] + k[(j, i)]);
                        k[(i, j)] = v;
                        k[(j, i)] = v;
                    }
                }
                let _ = (decay, order);
                Ok(k)
            }
            _ => {
                let mut k = Array2::zeros((n, n));
                for i in 0..n {
                    for j in i..n {
                        let v = self.eval_unchecked(xs.row(i), xs.row(j));
                        k[(i, j)] = v;
                        k[(j, i)] = v;
                    }
                }
                Ok(k)
            }
        }
    }

    /// Kernel column: entry `i = k(x, xs_i)`.
    pub fn column(&self, xs: ArrayView2<'_, f64>, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check_point(x)?;
        for row in xs.rows() {
            self.check_point(row)?;
        }
        Ok(Array1::from_iter(
            xs.rows().into_iter().map(|r| self.eval_unchecked(x, r)),
        ))
    }

    /// Closed-form eigenpairs of the truncated-Mercer integral operator.
    pub fn mercer_eigenpairs(&self) -> Result<MercerEigenpairs> {
        match self {
            Kernel::TruncatedMercer { decay, order } => Ok(MercerEigenpairs {
                eigenvalues: Array1::from_iter((1..=*order).map(|i| mu(*decay, i))),
                order: *order,
            }),
            other => Err(Error::WrongKind {
                expected: "truncated-mercer",
                got: other.name(),
            }),
        }
    }

    /// Basis-evaluation matrix `E` with `E[i-1, l] = e_i(xs_l)`, shape `M x n`.
    pub(crate) fn basis_matrix(&self, xs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            Kernel::TruncatedMercer { order, .. } => {
                let n = xs.nrows();
                Ok(Array2::from_shape_fn((*order, n), |(m, l)| {
                    basis(m + 1, xs[(l, 0)])
                }))
            }
            other => Err(Error::WrongKind {
                expected: "truncated-mercer",
                got: other.name(),
            }),
        }
    }

    /// `diag(sqrt(mu)) E`: the finite feature map evaluated columnwise,
    /// `phi(xs_l)_i = sqrt(mu_i) e_i(xs_l)`, shape `M x n`.
    pub(crate) fn weighted_basis_matrix(&self, xs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut e = self.basis_matrix(xs)?;
        let pairs = self.mercer_eigenpairs()?;
        for (m, mut row) in e.rows_mut().into_iter().enumerate() {
            let w = pairs.eigenvalues[m].sqrt();
            row.mapv_inplace(|v| v * w);
        }
        Ok(e)
    }

    fn check_point(&self, x: ArrayView1<'_, f64>) -> Result<()> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate in {x}")));
        }
        if let Kernel::TruncatedMercer { .. } = self {
            if x.len() != 1 {
                return Err(Error::Domain(format!(
                    "truncated-Mercer kernel is defined on scalar [0,1], got dimension {}",
                    x.len()
                )));
            }
            if !(0.0..=1.0).contains(&x[0]) {
                return Err(Error::Domain(format!(
                    "truncated-Mercer kernel is defined on [0,1], got {}",
                    x[0]
                )));
            }
        }
        Ok(())
    }
}

fn check_bandwidth(bandwidth: f64) -> Result<()> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::BadParams(format!(
            "bandwidth must be positive and finite, got {bandwidth}"
        )));
    }
    Ok(())
}

/// `mu_i = i^{-1/p}`, the i-th Mercer eigenvalue (1-based).
pub(crate) fn mu(decay: f64, i: usize) -> f64 {
    (i as f64).powf(-1.0 / decay)
}

/// `e_i(x) = sqrt(2) cos(i pi x)`, 1-based.
pub(crate) fn basis(i: usize, x: f64) -> f64 {
    SQRT_2 * (i as f64 * PI * x).cos()
}

/// Eigenvalues (descending) and orthonormal basis of a truncated-Mercer kernel.
#[derive(Debug, Clone)]
pub struct MercerEigenpairs {
    eigenvalues: Array1<f64>,
    order: usize,
}

impl MercerEigenpairs {
    /// `mu_i = i^{-1/p}`, descending, length `M`.
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `e_i(x) = sqrt(2) cos(i pi x)` for `1 <= i <= M`.
    pub fn basis(&self, i: usize, x: f64) -> f64 {
        assert!(
            i >= 1 && i <= self.order,
            "basis index {i} outside 1..={}",
            self.order
        );
        basis(i, x)
    }
}
