//! Covariance objects: structured and user-supplied matrices, the pooled
//! within-class estimator, factorized sub-matrices on a feature mask and the
//! variance-estimation inflation factor `kappa`.
//!
//! Two divisors coexist for an estimated model. Per-feature variances use the
//! unbiased pooled divisor `N - L`, so that `(N - L) s_j^2 / sigma_j^2` is
//! chi-square with `N - L` degrees of freedom. The matrix itself (and hence
//! every factorized sub-matrix used by the classifier) uses the maximum
//! likelihood divisor `N`.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg;

/// Simulation covariance families, all with common variance `sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceStructure {
    /// `sigma^2 I`.
    Independent,
    /// `sigma^2 0.5^|h1 - h2|`.
    ArHalf,
    /// `sigma^2 (0.5 + 0.5 [h1 == h2])`.
    CompoundSymmetric,
}

impl CovarianceStructure {
    pub fn name(self) -> &'static str {
        match self {
            Self::Independent => "independent",
            Self::ArHalf => "ar_half",
            Self::CompoundSymmetric => "compound_symmetric",
        }
    }

    fn unit_entry(self, i: usize, j: usize) -> f64 {
        match self {
            Self::Independent => f64::from(u8::from(i == j)),
            Self::ArHalf => 0.5f64.powi(i.abs_diff(j) as i32),
            Self::CompoundSymmetric => {
                if i == j {
                    1.0
                } else {
                    0.5
                }
            }
        }
    }
}

impl std::str::FromStr for CovarianceStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(Self::Independent),
            "ar_half" => Ok(Self::ArHalf),
            "compound_symmetric" => Ok(Self::CompoundSymmetric),
            other => Err(Error::Configuration(format!(
                "unknown covariance structure '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    Known,
    Estimated,
}

/// Lower and upper eigenvalue bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
enum Storage {
    Structured {
        structure: CovarianceStructure,
        sigma_sq: f64,
    },
    Dense(Array2<f64>),
    /// Within-class residuals `R` (N x p); the matrix is `R^T R / divisor`.
    Residuals {
        centered: Array2<f64>,
        divisor: f64,
    },
}

/// A covariance matrix together with the per-feature variances used for
/// screening.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    dim: usize,
    mode: CovarianceMode,
    storage: Storage,
    variances: Array1<f64>,
    variance_divisor: Option<f64>,
    matrix_divisor: Option<f64>,
    spectral: Option<SpectralBounds>,
}

impl CovarianceModel {
    /// A known, user-supplied covariance matrix.
    pub fn known(matrix: Array2<f64>) -> Result<Self> {
        let p = matrix.nrows();
        if p == 0 || matrix.ncols() != p {
            return Err(Error::domain(format!(
                "covariance must be a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..p {
            for j in (i + 1)..p {
                if (matrix[[i, j]] - matrix[[j, i]]).abs() > 1e-12 * scale {
                    return Err(Error::domain(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let variances = matrix.diag().to_owned();
        if let Some(j) = variances.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::domain(format!(
                "variance of feature {j} is not positive"
            )));
        }
        Ok(Self {
            dim: p,
            mode: CovarianceMode::Known,
            storage: Storage::Dense(matrix),
            variances,
            variance_divisor: None,
            matrix_divisor: None,
            spectral: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> CovarianceMode {
        self.mode
    }

    /// Per-feature variances used by the screening statistics.
    pub fn variances(&self) -> &Array1<f64> {
        &self.variances
    }

    /// Divisor applied to the residual sums of squares for [`Self::variances`]
    /// (`N - L` for estimated models).
    pub fn variance_divisor(&self) -> Option<f64> {
        self.variance_divisor
    }

    /// Divisor applied to the scatter matrix (`N` for estimated models).
    pub fn matrix_divisor(&self) -> Option<f64> {
        self.matrix_divisor
    }

    /// Eigenvalue bounds valid for every principal sub-matrix, when known in
    /// closed form.
    pub fn spectral_bounds(&self) -> Option<SpectralBounds> {
        self.spectral
    }

    /// The generating structure and `sigma^2`, for structured models.
    pub fn structure(&self) -> Option<(CovarianceStructure, f64)> {
        match self.storage {
            Storage::Structured {
                structure,
                sigma_sq,
            } => Some((structure, sigma_sq)),
            _ => None,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Structured {
                structure,
                sigma_sq,
            } => sigma_sq * structure.unit_entry(i, j),
            Storage::Dense(m) => m[[i, j]],
            Storage::Residuals { centered, divisor } => {
                centered.column(i).dot(&centered.column(j)) / divisor
            }
        }
    }

    /// The principal sub-matrix on `indices`, in that order.
    pub fn submatrix(&self, indices: &[usize]) -> Array2<f64> {
        match &self.storage {
            Storage::Residuals { centered, divisor } => {
                let cols = centered.select(Axis(1), indices);
                cols.t().dot(&cols) / *divisor
            }
            _ => {
                let k = indices.len();
                Array2::from_shape_fn((k, k), |(a, b)| self.entry(indices[a], indices[b]))
            }
        }
    }

    /// The full matrix, materialized.
    pub fn matrix(&self) -> Array2<f64> {
        let all: Vec<usize> = (0..self.dim).collect();
        self.submatrix(&all)
    }

    /// Exact extreme eigenvalues of the sub-matrix on `indices`.
    pub fn submatrix_spectral_bounds(&self, indices: &[usize]) -> SpectralBounds {
        let ev = linalg::symmetric_eigenvalues(self.submatrix(indices).view());
        SpectralBounds {
            lower: ev.first().copied().unwrap_or(f64::NAN),
            upper: ev.last().copied().unwrap_or(f64::NAN),
        }
    }
}

/// Pooled within-class scatter of `data` (see the module docs for divisors).
pub fn mle_pooled_covariance(data: &Dataset) -> Result<CovarianceModel> {
    let n = data.len();
    let l = data.n_classes();
    if n <= l {
        return Err(Error::InsufficientData {
            samples: n,
            classes: l,
        });
    }
    data.require_all_classes()?;
    let p = data.dim();
    let counts = data.class_counts();
    let mut means = Array2::<f64>::zeros((l, p));
    for (i, &c) in data.labels().iter().enumerate() {
        let mut row = means.row_mut(c);
        row += &data.sample(i);
    }
    for (c, &cnt) in counts.iter().enumerate() {
        means.row_mut(c).mapv_inplace(|v| v / cnt as f64);
    }
    let mut centered = data.features().clone();
    for (i, &c) in data.labels().iter().enumerate() {
        let mut row = centered.row_mut(i);
        row -= &means.row(c);
    }
    let ss = centered.map_axis(Axis(0), |col| col.dot(&col));
    let var_div = (n - l) as f64;
    Ok(CovarianceModel {
        dim: p,
        mode: CovarianceMode::Estimated,
        storage: Storage::Residuals {
            centered,
            divisor: n as f64,
        },
        variances: ss / var_div,
        variance_divisor: Some(var_div),
        matrix_divisor: Some(n as f64),
        spectral: None,
    })
}

/// `sigma^2` times the unit matrix of `structure`, marked as known.
pub fn build_structured_covariance(
    structure: CovarianceStructure,
    p: usize,
    sigma: f64,
) -> Result<CovarianceModel> {
    if p == 0 {
        return Err(Error::domain("dimension must be >= 1"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("sigma must be > 0, got {sigma}")));
    }
    let s2 = sigma * sigma;
    // Bounds hold for every principal sub-matrix (Cauchy interlacing).
    let (lo, hi) = match structure {
        CovarianceStructure::Independent => (1.0, 1.0),
        CovarianceStructure::ArHalf if p == 1 => (1.0, 1.0),
        CovarianceStructure::ArHalf => (1.0 / 3.0, 3.0),
        CovarianceStructure::CompoundSymmetric if p == 1 => (1.0, 1.0),
        CovarianceStructure::CompoundSymmetric => (0.5, 0.5 + 0.5 * p as f64),
    };
    Ok(CovarianceModel {
        dim: p,
        mode: CovarianceMode::Known,
        storage: Storage::Structured {
            structure,
            sigma_sq: s2,
        },
        variances: Array1::from_elem(p, s2),
        variance_divisor: None,
        matrix_divisor: None,
        spectral: Some(SpectralBounds {
            lower: lo * s2,
            upper: hi * s2,
        }),
    })
}

/// Cholesky factor of the covariance restricted to a feature mask.
///
/// Selected features keep their original relative order and are placed first;
/// `order[i]` is the original index of sub-matrix row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedSubmatrix {
    mask: Vec<bool>,
    order: Vec<usize>,
    factor: Array2<f64>,
}

impl FactorizedSubmatrix {
    /// Factorizes an explicit sub-matrix whose rows correspond to `order`.
    pub fn from_submatrix(mask: Vec<bool>, order: Vec<usize>, sub: &Array2<f64>) -> Result<Self> {
        let factor = linalg::cholesky(sub.view()).map_err(|e| Error::SingularSubmatrix {
            position: e.position,
            feature: order[e.position],
            pivot: e.pivot,
            tolerance: e.tolerance,
        })?;
        Ok(Self {
            mask,
            order,
            factor,
        })
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn factor(&self) -> &Array2<f64> {
        &self.factor
    }

    /// Number of selected features.
    pub fn dim(&self) -> usize {
        self.order.len()
    }

    /// `F^{-1} v`, so that `|F^{-1} v|^2 = v^T S^{-1} v`.
    pub fn whiten(&self, v: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if v.len() != self.dim() {
            return Err(Error::domain(format!(
                "vector of length {} for a {}-dimensional sub-matrix",
                v.len(),
                self.dim()
            )));
        }
        Ok(linalg::forward_solve(self.factor.view(), v))
    }

    /// `v^T S^{-1} v` by one triangular solve.
    pub fn quad_form(&self, v: ArrayView1<'_, f64>) -> Result<f64> {
        let w = self.whiten(v)?;
        Ok(w.dot(&w))
    }

    /// `F F^T`.
    pub fn reconstruct(&self) -> Array2<f64> {
        self.factor.dot(&self.factor.t())
    }

    /// Gathers the selected coordinates of a full-length vector.
    pub fn restrict(&self, full: ArrayView1<'_, f64>) -> Array1<f64> {
        Array1::from_iter(self.order.iter().map(|&j| full[j]))
    }
}

/// Factorizes the sub-matrix of `model` on the features selected by `mask`.
pub fn submatrix_factorize(model: &CovarianceModel, mask: &[bool]) -> Result<FactorizedSubmatrix> {
    if mask.len() != model.dim() {
        return Err(Error::domain(format!(
            "mask of length {} for {} features",
            mask.len(),
            model.dim()
        )));
    }
    let order: Vec<usize> = mask
        .iter()
        .enumerate()
        .filter_map(|(j, &m)| m.then_some(j))
        .collect();
    if order.is_empty() {
        return Err(Error::Configuration("mask selects no features".into()));
    }
    let sub = model.submatrix(&order);
    FactorizedSubmatrix::from_submatrix(mask.to_vec(), order, &sub)
}

/// `v^T S^{-1} v` for the factorized sub-matrix `S`.
pub fn quad_form(fact: &FactorizedSubmatrix, v: ArrayView1<'_, f64>) -> Result<f64> {
    fact.quad_form(v)
}

/// Relative variance-estimation slack
/// `2 sqrt(ln(2p/alpha) / (N - L)) + 2 ln(2p/alpha) / (N - L)`.
///
/// Requires `p <= (alpha/2) exp((N - L)/4)` and a result below 1.
pub fn kappa(p: usize, n_total: usize, n_classes: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if p == 0 {
        return Err(Error::domain("p must be >= 1"));
    }
    if n_total <= n_classes {
        return Err(Error::InsufficientData {
            samples: n_total,
            classes: n_classes,
        });
    }
    let dof = (n_total - n_classes) as f64;
    let log_bound = (alpha / 2.0).ln() + dof / 4.0;
    if (p as f64).ln() > log_bound {
        return Err(Error::KappaAdmissibility {
            p: p as f64,
            bound: log_bound.exp(),
        });
    }
    let x = (2.0 * p as f64 / alpha).ln();
    let k = 2.0 * (x / dof).sqrt() + 2.0 * x / dof;
    if k >= 1.0 {
        return Err(Error::KappaTooLarge { kappa: k });
    }
    Ok(k)
}
