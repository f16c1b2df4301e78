//! Between-class screening of individual features.
//!
//! For feature `j` the statistic is
//!
//! ```text
//! zeta_j = sigma_j^{-2} * sum_l n_l (Ybar_lj - Ybar_.j)^2
//! ```
//!
//! with the size-weighted grand mean `Ybar_.j = sum_l n_l Ybar_lj / N`. Under
//! equal class means it is `chi2(L - 1)`; otherwise noncentral with
//! noncentrality `sigma_j^{-2} sum_l n_l beta_lj^2`. A feature is selected when
//! its statistic strictly exceeds the threshold.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::covariance;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Per-class sizes and means of a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSummaries {
    class_sizes: Vec<usize>,
    total: usize,
    rho: Vec<f64>,
    class_means: Array2<f64>,
    grand_mean: Array1<f64>,
}

impl ClassSummaries {
    /// Number of classes `L`.
    pub fn n_classes(&self) -> usize {
        self.class_sizes.len()
    }

    /// `L - 1`, the degrees of freedom of the screening statistic.
    pub fn dof(&self) -> usize {
        self.class_sizes.len() - 1
    }

    pub fn class_sizes(&self) -> &[usize] {
        &self.class_sizes
    }

    /// Total sample size `N`.
    pub fn total(&self) -> usize {
        self.total
    }

    /// `rho_l = n_l / (n_l + 1)`.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// `L x p` matrix of class means.
    pub fn class_means(&self) -> &Array2<f64> {
        &self.class_means
    }

    pub fn grand_mean(&self) -> &Array1<f64> {
        &self.grand_mean
    }

    pub fn dim(&self) -> usize {
        self.class_means.ncols()
    }

    /// Class means restricted to the features in `order`.
    pub fn restricted_means(&self, order: &[usize]) -> Array2<f64> {
        self.class_means.select(Axis(1), order)
    }
}

/// Per-class means, sizes and `rho_l` of `data`.
pub fn summarize(data: &Dataset) -> Result<ClassSummaries> {
    let l = data.n_classes();
    if l < 2 {
        return Err(Error::domain(format!("need at least 2 classes, got {l}")));
    }
    data.require_all_classes()?;
    let sizes = data.class_counts();
    let p = data.dim();
    let mut means = Array2::<f64>::zeros((l, p));
    for (i, &c) in data.labels().iter().enumerate() {
        let mut row = means.row_mut(c);
        row += &data.sample(i);
    }
    for (c, &n) in sizes.iter().enumerate() {
        means.row_mut(c).mapv_inplace(|v| v / n as f64);
    }
    let total: usize = sizes.iter().sum();
    let mut grand = Array1::<f64>::zeros(p);
    for (c, &n) in sizes.iter().enumerate() {
        grand.scaled_add(n as f64 / total as f64, &means.row(c));
    }
    let rho = sizes.iter().map(|&n| n as f64 / (n as f64 + 1.0)).collect();
    Ok(ClassSummaries {
        class_sizes: sizes,
        total,
        rho,
        class_means: means,
        grand_mean: grand,
    })
}

/// Screening statistics `zeta_j` for every feature.
pub fn selection_statistics(
    summaries: &ClassSummaries,
    variances: ArrayView1<'_, f64>,
) -> Result<Vec<f64>> {
    let p = summaries.dim();
    if variances.len() != p {
        return Err(Error::domain(format!(
            "{} variances for {p} features",
            variances.len()
        )));
    }
    (0..p)
        .map(|j| {
            let v = variances[j];
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!(
                    "variance of feature {j} is not positive ({v})"
                )));
            }
            let g = summaries.grand_mean[j];
            let ss: f64 = summaries
                .class_sizes
                .iter()
                .enumerate()
                .map(|(l, &n)| {
                    let d = summaries.class_means[[l, j]] - g;
                    n as f64 * d * d
                })
                .sum();
            Ok(ss / v)
        })
        .collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )))
    }
}

/// `ln(2p / alpha)`, the per-feature union-bound exponent.
pub fn log_term(p: usize, alpha: f64) -> f64 {
    (2.0 * p as f64 / alpha).ln()
}

/// Known-variance threshold `L1 + 2 sqrt(L1 ln(2p/alpha)) + 2 ln(2p/alpha)`.
///
/// Exact for any `0 < alpha <= 2p`; at `alpha = 2p` it collapses to `L - 1`.
pub fn threshold_known(n_classes: usize, p: usize, alpha: f64) -> Result<f64> {
    if n_classes < 2 || p == 0 {
        return Err(Error::domain("threshold needs L >= 2 and p >= 1"));
    }
    if !(alpha > 0.0 && alpha <= 2.0 * p as f64) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 2p], got {alpha}"
        )));
    }
    let l1 = (n_classes - 1) as f64;
    let x = log_term(p, alpha);
    Ok(l1 + 2.0 * (l1 * x).sqrt() + 2.0 * x)
}

/// Estimated-variance threshold `lambda / (1 - kappa)` and the `kappa` used.
pub fn threshold_estimated(
    n_classes: usize,
    p: usize,
    n_total: usize,
    alpha: f64,
) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let k = covariance::kappa(p, n_total, n_classes, alpha)?;
    Ok((threshold_known(n_classes, p, alpha)? / (1.0 - k), k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    KnownVariance,
    EstimatedVariance,
}

/// A selection threshold and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub value: f64,
    pub kind: ThresholdKind,
    pub kappa: Option<f64>,
}

impl Threshold {
    pub fn known(n_classes: usize, p: usize, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            value: threshold_known(n_classes, p, alpha)?,
            kind: ThresholdKind::KnownVariance,
            kappa: None,
        })
    }

    /// Inflated threshold for estimated variances.
    pub fn estimated(n_classes: usize, p: usize, n_total: usize, alpha: f64) -> Result<Self> {
        let (value, k) = threshold_estimated(n_classes, p, n_total, alpha)?;
        Ok(Self {
            value,
            kind: ThresholdKind::EstimatedVariance,
            kappa: Some(k),
        })
    }

    /// Estimated variances compared against the uninflated threshold.
    pub fn estimated_uninflated(n_classes: usize, p: usize, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            value: threshold_known(n_classes, p, alpha)?,
            kind: ThresholdKind::EstimatedVariance,
            kappa: None,
        })
    }
}

/// Statistics, threshold and resulting mask of one screening run.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    statistics: Vec<f64>,
    threshold: Threshold,
    mask: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct SelectionJson {
    threshold: f64,
    kind: ThresholdKind,
    kappa: Option<f64>,
    selected: Vec<usize>,
    statistics: Vec<f64>,
}

impl SelectionOutcome {
    pub fn statistics(&self) -> &[f64] {
        &self.statistics
    }

    pub fn threshold(&self) -> &Threshold {
        &self.threshold
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn into_mask(self) -> Vec<bool> {
        self.mask
    }

    /// `p1_hat`.
    pub fn selected_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Zero-based indices of the selected features.
    pub fn selected(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(j, &m)| m.then_some(j))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let j = SelectionJson {
            threshold: self.threshold.value,
            kind: self.threshold.kind,
            kappa: self.threshold.kappa,
            selected: self.selected(),
            statistics: self.statistics.clone(),
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: SelectionJson = serde_json::from_str(s)?;
        let p = j.statistics.len();
        let mut mask = vec![false; p];
        for &i in &j.selected {
            *mask.get_mut(i).ok_or_else(|| {
                Error::domain(format!(
                    "selected index {i} is out of range for {p} features"
                ))
            })? = true;
        }
        Ok(Self {
            statistics: j.statistics,
            threshold: Threshold {
                value: j.threshold,
                kind: j.kind,
                kappa: j.kappa,
            },
            mask,
        })
    }
}

/// Selects every feature whose statistic strictly exceeds the threshold.
pub fn select(statistics: Vec<f64>, threshold: &Threshold) -> SelectionOutcome {
    let mask = statistics.iter().map(|&z| z > threshold.value).collect();
    SelectionOutcome {
        statistics,
        threshold: *threshold,
        mask,
    }
}

/// Which minimal-effect condition to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectMode {
    /// `mu* >= 4 (3 ln(2p/alpha) + sqrt(L1 ln(2p/alpha)))`.
    Known,
    /// `mu* + L1 - 2 sqrt((L1 + 2 mu*) ln(2p/alpha)) > lambda1 (1 + kappa)`.
    Estimated,
}

/// Outcome of a minimal-effect condition check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectCheck {
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub margin: f64,
    /// Both sides divided by `L`: the average effect per class.
    pub per_class_lhs: f64,
    pub per_class_rhs: f64,
}

/// Checks the minimal-effect condition for `mu_star = min_j sigma_j^-2 sum_l n_l beta_lj^2`.
pub fn min_effect_check(
    mu_star: f64,
    n_classes: usize,
    p: usize,
    alpha: f64,
    mode: EffectMode,
    kappa: Option<f64>,
) -> Result<EffectCheck> {
    if !(mu_star >= 0.0) {
        return Err(Error::domain(format!("mu* must be >= 0, got {mu_star}")));
    }
    check_alpha(alpha)?;
    if n_classes < 2 || p == 0 {
        return Err(Error::domain("effect check needs L >= 2 and p >= 1"));
    }
    let l1 = (n_classes - 1) as f64;
    let x = log_term(p, alpha);
    let (lhs, rhs, satisfied) = match mode {
        EffectMode::Known => {
            let rhs = 4.0 * (3.0 * x + (l1 * x).sqrt());
            (mu_star, rhs, mu_star >= rhs)
        }
        EffectMode::Estimated => {
            let k = kappa.ok_or_else(|| Error::domain("estimated effect check requires kappa"))?;
            if !(0.0..1.0).contains(&k) {
                return Err(Error::domain(format!("kappa must lie in [0, 1), got {k}")));
            }
            let lambda1 = threshold_known(n_classes, p, alpha)? / (1.0 - k);
            let lhs = mu_star + l1 - 2.0 * ((l1 + 2.0 * mu_star) * x).sqrt();
            let rhs = lambda1 * (1.0 + k);
            (lhs, rhs, lhs > rhs)
        }
    };
    let l = n_classes as f64;
    Ok(EffectCheck {
        satisfied,
        lhs,
        rhs,
        margin: lhs - rhs,
        per_class_lhs: lhs / l,
        per_class_rhs: rhs / l,
    })
}
