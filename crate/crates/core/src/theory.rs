//! Non-asymptotic separation and effect conditions, the Fano lower bound,
//! the estimated-precision slack `gamma`, plug-in asymptotic regimes, and a
//! constructor for class-mean configurations that provably meet the
//! conditions.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::covariance::{self, submatrix_factorize, CovarianceModel, FactorizedSubmatrix};
use crate::error::{Error, Result};
use crate::feature_selection::{
    log_term, min_effect_check, threshold_known, EffectCheck, EffectMode,
};

/// Default for the absolute constant `C1` in `gamma`.
pub const DEFAULT_C1: f64 = 9.0;

/// `ln(L1 / alpha)`, which must be positive.
pub fn class_log_term(n_classes: usize, alpha: f64) -> Result<f64> {
    if n_classes < 2 {
        return Err(Error::domain("need at least two classes"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    let t = ((n_classes - 1) as f64 / alpha).ln();
    if !(t > 0.0) {
        return Err(Error::domain(format!(
            "ln(L1/alpha) = {t} is not positive for L = {n_classes}, alpha = {alpha}"
        )));
    }
    Ok(t)
}

/// Which separation condition to check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SeparationMode {
    Known,
    /// Estimated covariance with precision slack `gamma` in `[0, 1)`.
    Estimated {
        gamma: f64,
    },
}

/// Required squared Mahalanobis separation of classes `k` and `k'`.
pub fn separation_rhs(
    rho_k: f64,
    rho_kp: f64,
    p1: usize,
    n_classes: usize,
    alpha: f64,
    mode: SeparationMode,
) -> Result<f64> {
    let t = class_log_term(n_classes, alpha)?;
    if p1 == 0 {
        return Err(Error::domain("p1 must be >= 1"));
    }
    for r in [rho_k, rho_kp] {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::domain(format!("rho must lie in (0, 1], got {r}")));
        }
    }
    let prod = rho_k * rho_kp;
    let (shrink, inflate) = match mode {
        SeparationMode::Known => (1.0, 1.0),
        SeparationMode::Estimated { gamma } => {
            if !(0.0..1.0).contains(&gamma) {
                return Err(Error::domain(format!(
                    "gamma must lie in [0, 1), got {gamma}"
                )));
            }
            (1.0 - gamma * gamma, 1.0 / (1.0 - gamma))
        }
    };
    let bracket = 1.0 + (1.0 - shrink * prod).sqrt() / 2.0 * (1.0 + (2.0 * p1 as f64 / t).sqrt());
    Ok(8.0 * t * inflate / rho_k.min(rho_kp) * bracket)
}

/// Pairwise separations of restricted class means against their requirements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub mode: SeparationMode,
    pub pairwise_delta_sq: Vec<Vec<f64>>,
    pub required: Vec<Vec<f64>>,
    pub satisfied_pairs: Vec<Vec<bool>>,
    /// Minimum off-diagonal separation.
    pub min_delta_sq: f64,
    /// Minimum over pairs of separation / requirement.
    pub min_ratio: f64,
    pub satisfied: bool,
}

/// Checks every pair of rows of `restricted_means` (`L x p1`, in the order of
/// `fact`) against the separation requirement.
pub fn separation_check(
    restricted_means: &Array2<f64>,
    fact: &FactorizedSubmatrix,
    rho: &[f64],
    alpha: f64,
    mode: SeparationMode,
) -> Result<SeparationReport> {
    let l = restricted_means.nrows();
    let p1 = fact.dim();
    if restricted_means.ncols() != p1 || rho.len() != l {
        return Err(Error::domain(format!(
            "means are {}x{}, factor is {p1}x{p1}, {} rho values",
            l,
            restricted_means.ncols(),
            rho.len()
        )));
    }
    let whitened: Vec<Array1<f64>> = restricted_means
        .rows()
        .into_iter()
        .map(|r| fact.whiten(r))
        .collect::<Result<_>>()?;
    let mut delta = vec![vec![0.0; l]; l];
    let mut required = vec![vec![0.0; l]; l];
    let mut ok = vec![vec![true; l]; l];
    let mut min_delta = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    for k in 0..l {
        for kp in (k + 1)..l {
            let d: f64 = whitened[k]
                .iter()
                .zip(whitened[kp].iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let rhs = separation_rhs(rho[k], rho[kp], p1, l, alpha, mode)?;
            delta[k][kp] = d;
            delta[kp][k] = d;
            required[k][kp] = rhs;
            required[kp][k] = rhs;
            ok[k][kp] = d >= rhs;
            ok[kp][k] = d >= rhs;
            min_delta = min_delta.min(d);
            min_ratio = min_ratio.min(d / rhs);
        }
    }
    Ok(SeparationReport {
        mode,
        satisfied: ok.iter().flatten().all(|&b| b),
        pairwise_delta_sq: delta,
        required,
        satisfied_pairs: ok,
        min_delta_sq: min_delta,
        min_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanoBound {
    pub aleph: f64,
    /// Lower bound on the worst-class error of any rule, clamped to `[0, 1]`.
    pub lower_bound: f64,
}

/// `aleph = D / (2 ln L1)` and `max(0, 1 - aleph - ln 2 / ln L1)`.
pub fn fano_bound(min_delta_sq: f64, n_classes: usize) -> Result<FanoBound> {
    if n_classes < 3 {
        return Err(Error::domain(format!(
            "the lower bound needs L >= 3 (got {n_classes}); it is vacuous for two classes"
        )));
    }
    if !(min_delta_sq >= 0.0) || !min_delta_sq.is_finite() {
        return Err(Error::domain(format!(
            "separation must be finite and >= 0, got {min_delta_sq}"
        )));
    }
    let ln_l1 = ((n_classes - 1) as f64).ln();
    let aleph = min_delta_sq / (2.0 * ln_l1);
    let lower_bound = (1.0 - aleph - std::f64::consts::LN_2 / ln_l1).clamp(0.0, 1.0);
    Ok(FanoBound { aleph, lower_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub gamma: f64,
    pub c1: f64,
    /// `max(L, 2 ln(2/alpha))`, exclusive lower limit on `p1`.
    pub p1_lower: f64,
    /// `(lambda_min/lambda_max)^4 N / (4 C1)`, exclusive upper limit on `p1`.
    pub p1_upper: f64,
    pub p1_bounds_ok: bool,
}

/// `gamma = 2 (lmax/lmin)^2 sqrt(C1 p1 / N)` and the admissible `p1` window.
pub fn gamma_report(
    p1: usize,
    n_total: usize,
    n_classes: usize,
    eig_min: f64,
    eig_max: f64,
    c1: f64,
    alpha: f64,
) -> Result<GammaReport> {
    if !(eig_min > 0.0 && eig_max >= eig_min) {
        return Err(Error::domain(format!(
            "need 0 < eig_min <= eig_max, got {eig_min}, {eig_max}"
        )));
    }
    if !(c1 > 0.0) {
        return Err(Error::domain(format!("C1 must be positive, got {c1}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) || n_total == 0 {
        return Err(Error::domain("need 0 < alpha < 1 and N >= 1"));
    }
    let ratio = eig_max / eig_min;
    let gamma = 2.0 * ratio * ratio * (c1 * p1 as f64 / n_total as f64).sqrt();
    let p1_lower = (n_classes as f64).max(2.0 * (2.0 / alpha).ln());
    let p1_upper = ratio.powi(-4) * n_total as f64 / (4.0 * c1);
    let p1f = p1 as f64;
    Ok(GammaReport {
        gamma,
        c1,
        p1_lower,
        p1_upper,
        p1_bounds_ok: p1_lower < p1f && p1f < p1_upper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceRegime {
    Sparse,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassRegime {
    LargeL,
    SmallL,
}

/// `eta` values above which the limiting (infinite) branch is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCutoffs {
    pub eta1: f64,
    pub eta2: f64,
}

impl Default for RegimeCutoffs {
    fn default() -> Self {
        Self {
            eta1: 10.0,
            eta2: 10.0,
        }
    }
}

/// Finite-sample plug-ins of the asymptotic requirements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRegime {
    pub eta1: f64,
    pub eta2: f64,
    pub delta_star_sq: f64,
    pub b_star_sq: f64,
    /// Per-feature, per-class effect in units of `sigma_j^2`, assuming equal
    /// effects across classes.
    pub beta_j_sq: f64,
    pub lambda_asymptote: f64,
    pub distance_regime: DistanceRegime,
    pub class_regime: ClassRegime,
}

pub fn asymptotic_regimes(
    p: usize,
    p1: usize,
    n: usize,
    n_classes: usize,
    alpha: f64,
    cutoffs: RegimeCutoffs,
) -> Result<AsymptoticRegime> {
    if p == 0 || p1 == 0 || n == 0 {
        return Err(Error::domain("p, p1 and n must be positive"));
    }
    let t = class_log_term(n_classes, alpha)?;
    let l1 = (n_classes - 1) as f64;
    let nf = n as f64;
    let x = log_term(p, alpha);
    let eta1 = (p1 as f64 / (nf * t)).sqrt();
    let eta2 = (x / l1).sqrt();
    let distance_regime = if eta1 > cutoffs.eta1 {
        DistanceRegime::Dense
    } else {
        DistanceRegime::Sparse
    };
    let class_regime = if eta2 > cutoffs.eta2 {
        ClassRegime::SmallL
    } else {
        ClassRegime::LargeL
    };
    let delta_star_sq = match distance_regime {
        DistanceRegime::Sparse => 8.0 * t * (1.0 + eta1),
        DistanceRegime::Dense => 8.0 * (p1 as f64 * t / nf).sqrt(),
    };
    let (b_star_sq, beta_j_sq, lambda_asymptote) = match class_regime {
        ClassRegime::LargeL => (
            4.0 / nf * (l1 * x).sqrt() * (1.0 + 3.0 * eta2),
            4.0 / nf * eta2 * (1.0 + 3.0 * eta2),
            l1 * (1.0 + 2.0 * eta2 + 2.0 * eta2 * eta2),
        ),
        ClassRegime::SmallL => (12.0 * x / nf, 12.0 * x / (nf * n_classes as f64), 2.0 * x),
    };
    Ok(AsymptoticRegime {
        eta1,
        eta2,
        delta_star_sq,
        b_star_sq,
        beta_j_sq,
        lambda_asymptote,
        distance_regime,
        class_regime,
    })
}

/// Conditions a constructed instance must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InstanceConditions {
    /// Known-covariance separation and effect conditions.
    Known,
    /// Estimated-covariance conditions with the given slacks.
    Estimated { gamma: f64, kappa: f64 },
}

impl InstanceConditions {
    /// Estimated-mode slacks for `L` classes of `n` samples, `gamma` from the
    /// spectral bounds of the leading `p1 x p1` block of `cov`. Fails when
    /// the `p1` window or `kappa` admissibility does not hold.
    pub fn estimated_for(
        cov: &CovarianceModel,
        p1: usize,
        n_classes: usize,
        n: usize,
        alpha: f64,
        c1: f64,
    ) -> Result<(Self, GammaReport)> {
        let support: Vec<usize> = (0..p1).collect();
        let b = cov.submatrix_spectral_bounds(&support);
        let n_total = n * n_classes;
        let g = gamma_report(p1, n_total, n_classes, b.lower, b.upper, c1, alpha)?;
        if !g.p1_bounds_ok {
            return Err(Error::Infeasible(format!(
                "p1 = {p1} is outside the window ({}, {})",
                g.p1_lower, g.p1_upper
            )));
        }
        let kappa = covariance::kappa(cov.dim(), n_total, n_classes, alpha)?;
        Ok((
            Self::Estimated {
                gamma: g.gamma,
                kappa,
            },
            g,
        ))
    }

    fn separation_mode(self) -> SeparationMode {
        match self {
            Self::Known => SeparationMode::Known,
            Self::Estimated { gamma, .. } => SeparationMode::Estimated { gamma },
        }
    }

    fn effect(self) -> (EffectMode, Option<f64>) {
        match self {
            Self::Known => (EffectMode::Known, None),
            Self::Estimated { kappa, .. } => (EffectMode::Estimated, Some(kappa)),
        }
    }
}

/// Smallest noncentrality meeting the minimal-effect condition (with equality).
pub fn required_noncentrality(
    n_classes: usize,
    p: usize,
    alpha: f64,
    mode: EffectMode,
    kappa: Option<f64>,
) -> Result<f64> {
    let l1 = (n_classes.max(2) - 1) as f64;
    let x = log_term(p, alpha);
    let c = min_effect_check(0.0, n_classes, p, alpha, mode, kappa)?;
    Ok(match mode {
        EffectMode::Known => c.rhs,
        EffectMode::Estimated => {
            // mu + L1 - 2 s sqrt(x) = R with s = sqrt(L1 + 2 mu): a quadratic in s.
            let s = 2.0 * x.sqrt() + (4.0 * x - l1 + 2.0 * c.rhs).sqrt();
            (s * s - l1) / 2.0
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Regular simplex, all pairwise separations equal.
    Simplex,
    /// Equispaced points on a line, used when `L > p1 + 1`.
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingConstraint {
    Separation,
    Effect,
}

/// Machine-checkable record of the margins of a constructed instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub conditions: InstanceConditions,
    pub geometry: Geometry,
    pub requested_margin: f64,
    pub scale: f64,
    pub binding: BindingConstraint,
    /// Minimum over pairs of separation / requirement.
    pub separation_margin: f64,
    /// `mu* / mu_required`.
    pub effect_margin: f64,
    pub min_delta_sq: f64,
    pub mu_star: f64,
    pub mu_required: f64,
    pub separation: SeparationReport,
    pub effect: EffectCheck,
}

#[derive(Debug, Clone)]
pub struct SatisfyingInstance {
    /// `L x p` class means, nonzero only on the first `p1` features.
    pub means: Array2<f64>,
    pub certificate: Certificate,
}

/// Parameters of [`construct_satisfying_instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceRequest {
    pub p: usize,
    pub p1: usize,
    pub n_classes: usize,
    /// Samples per class.
    pub n: usize,
    pub alpha: f64,
    pub margin: f64,
    pub conditions: InstanceConditions,
}

/// An `(L-1) x p1` matrix with orthonormal rows and equal column norms
/// (a real harmonic frame); requires `L - 1 <= p1`.
fn harmonic_frame(d: usize, p1: usize) -> Array2<f64> {
    if d == p1 {
        return Array2::eye(d);
    }
    let nf = p1 as f64;
    let mut r = Array2::zeros((d, p1));
    let mut row = 0;
    if d % 2 == 1 {
        r.row_mut(0).fill(1.0 / nf.sqrt());
        row = 1;
    }
    let scale = (2.0 / nf).sqrt();
    for k in 1..=(d / 2) {
        for j in 0..p1 {
            let a = 2.0 * std::f64::consts::PI * (k * j) as f64 / nf;
            r[[row, j]] = scale * a.cos();
            r[[row + 1, j]] = scale * a.sin();
        }
        row += 2;
    }
    r
}

/// Whitened base configuration (`L x p1`, centered columns) and its minimum
/// pairwise squared distance.
fn base_geometry(l: usize, p1: usize) -> (Array2<f64>, f64, Geometry) {
    if l - 1 <= p1 {
        // Helmert basis of the centered subspace; rows form a simplex with
        // squared edge 2.
        let mut b = Array2::zeros((l, l - 1));
        for k in 1..l {
            let c = 1.0 / ((k * (k + 1)) as f64).sqrt();
            for i in 0..k {
                b[[i, k - 1]] = c;
            }
            b[[k, k - 1]] = -(k as f64) * c;
        }
        (b.dot(&harmonic_frame(l - 1, p1)), 2.0, Geometry::Simplex)
    } else {
        let v = 1.0 / (p1 as f64).sqrt();
        let mid = (l - 1) as f64 / 2.0;
        let w = Array2::from_shape_fn((l, p1), |(i, _)| (i as f64 - mid) * v);
        (w, 1.0, Geometry::Line)
    }
}

/// Builds class means on the first `p1` features that meet both the
/// separation and minimal-effect conditions with at least `margin`.
pub fn construct_satisfying_instance(
    req: &InstanceRequest,
    cov: &CovarianceModel,
) -> Result<SatisfyingInstance> {
    let InstanceRequest {
        p,
        p1,
        n_classes: l,
        n,
        alpha,
        margin,
        conditions,
    } = *req;
    if !(margin >= 1.0) || !margin.is_finite() {
        return Err(Error::Configuration(format!(
            "margin must be >= 1, got {margin}"
        )));
    }
    if l < 2 || n == 0 {
        return Err(Error::Infeasible(format!(
            "need L >= 2 classes of n >= 1 samples, got L = {l}, n = {n}"
        )));
    }
    if p1 == 0 || p1 > p {
        return Err(Error::Infeasible(format!(
            "need 1 <= p1 <= p, got p1 = {p1}, p = {p}"
        )));
    }
    if cov.dim() != p {
        return Err(Error::domain(format!(
            "covariance is {0}x{0}, expected p = {p}",
            cov.dim()
        )));
    }
    let mask: Vec<bool> = (0..p).map(|j| j < p1).collect();
    let fact = submatrix_factorize(cov, &mask)?;
    let rho_l = n as f64 / (n as f64 + 1.0);
    let sep_mode = conditions.separation_mode();
    let sep_rhs = separation_rhs(rho_l, rho_l, p1, l, alpha, sep_mode)?;
    let (effect_mode, kappa) = conditions.effect();
    let mu_req = required_noncentrality(l, p, alpha, effect_mode, kappa)?;

    let (w, min_dist, geometry) = base_geometry(l, p1);
    let base = w.dot(&fact.factor().t());
    let variances = cov.variances();
    let base_mu = (0..p1)
        .map(|j| {
            let s: f64 = base.column(j).iter().map(|b| b * b).sum();
            n as f64 * s / variances[j]
        })
        .fold(f64::INFINITY, f64::min);
    if !(base_mu > 0.0) {
        return Err(Error::Infeasible(
            "effect: a support feature carries no between-class effect in the base geometry".into(),
        ));
    }
    let sep_scale = sep_rhs / min_dist;
    let eff_scale = mu_req / base_mu;
    let binding = if sep_scale >= eff_scale {
        BindingConstraint::Separation
    } else {
        BindingConstraint::Effect
    };
    let c2 = margin * sep_scale.max(eff_scale);
    let scale = c2.sqrt();

    let mut means = Array2::zeros((l, p));
    for i in 0..l {
        for j in 0..p1 {
            means[[i, j]] = scale * base[[i, j]];
        }
    }
    let certificate = certify(&means, cov, n, alpha, conditions)?;
    let certificate = Certificate {
        geometry,
        requested_margin: margin,
        scale,
        binding,
        ..certificate
    };
    Ok(SatisfyingInstance { means, certificate })
}

/// Recomputes the margins of `means` (`L x p`, equal class size `n`) with
/// support taken as the features with a nonzero between-class effect.
pub fn certify(
    means: &Array2<f64>,
    cov: &CovarianceModel,
    n: usize,
    alpha: f64,
    conditions: InstanceConditions,
) -> Result<Certificate> {
    let l = means.nrows();
    let p = means.ncols();
    let centered = means - &means.mean_axis(ndarray::Axis(0)).expect("L >= 1");
    let variances = cov.variances();
    let mu: Vec<f64> = (0..p)
        .map(|j| n as f64 * centered.column(j).iter().map(|b| b * b).sum::<f64>() / variances[j])
        .collect();
    let mask: Vec<bool> = mu.iter().map(|&m| m > 0.0).collect();
    if !mask.iter().any(|&m| m) {
        return Err(Error::Infeasible(
            "separation: all class means coincide".into(),
        ));
    }
    let fact = submatrix_factorize(cov, &mask)?;
    let restricted = means.select(ndarray::Axis(1), fact.order());
    let rho = vec![n as f64 / (n as f64 + 1.0); l];
    let separation = separation_check(
        &restricted,
        &fact,
        &rho,
        alpha,
        conditions.separation_mode(),
    )?;
    let mu_star = mu
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .fold(f64::INFINITY, f64::min);
    let (mode, kappa) = conditions.effect();
    let effect = min_effect_check(mu_star, l, p, alpha, mode, kappa)?;
    let mu_required = required_noncentrality(l, p, alpha, mode, kappa)?;
    Ok(Certificate {
        conditions,
        geometry: Geometry::Simplex,
        requested_margin: 1.0,
        scale: 1.0,
        binding: BindingConstraint::Separation,
        separation_margin: separation.min_ratio,
        effect_margin: mu_star / mu_required,
        min_delta_sq: separation.min_delta_sq,
        mu_star,
        mu_required,
        separation,
        effect,
    })
}

/// Inputs of [`theory_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub p: usize,
    pub p1: usize,
    /// Samples per class.
    pub n: usize,
    #[serde(rename = "L")]
    pub n_classes: usize,
    pub alpha: f64,
    pub c1: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    /// Separation at which to evaluate the lower bound, if requested.
    pub fano_delta_sq: Option<f64>,
    pub cutoffs: RegimeCutoffs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub log_term: f64,
    pub lambda: f64,
    pub lambda1: Option<f64>,
    pub kappa: Option<f64>,
    /// Why `kappa` is unavailable, if it is.
    pub kappa_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementSummary {
    /// Equal class sizes give `rho = n / (n + 1)` for every class.
    pub rho: f64,
    pub separation_known: f64,
    pub separation_estimated: Option<f64>,
    pub noncentrality_known: f64,
    pub noncentrality_estimated: Option<f64>,
    /// Per-class effect `mu* / L` needed with known variances.
    pub per_class_effect_known: f64,
}

/// Everything the conditions say about one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub params: TheoryParams,
    pub thresholds: ThresholdSummary,
    pub requirements: RequirementSummary,
    pub gamma: GammaReport,
    pub fano: Option<FanoBound>,
    pub regimes: AsymptoticRegime,
}

pub fn theory_report(params: &TheoryParams) -> Result<TheoryReport> {
    let TheoryParams {
        p,
        p1,
        n,
        n_classes: l,
        alpha,
        c1,
        eig_min,
        eig_max,
        fano_delta_sq,
        cutoffs,
    } = *params;
    if p1 == 0 || p1 > p || n == 0 {
        return Err(Error::domain(format!(
            "need 1 <= p1 <= p and n >= 1, got p = {p}, p1 = {p1}, n = {n}"
        )));
    }
    let n_total = n * l;
    let lambda = threshold_known(l, p, alpha)?;
    let (kappa, kappa_error) = match covariance::kappa(p, n_total, l, alpha) {
        Ok(k) => (Some(k), None),
        Err(e) if e.is_numerical() || matches!(e, Error::InsufficientData { .. }) => {
            (None, Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let gamma = gamma_report(p1, n_total, l, eig_min, eig_max, c1, alpha)?;
    let rho = n as f64 / (n as f64 + 1.0);
    let separation_known = separation_rhs(rho, rho, p1, l, alpha, SeparationMode::Known)?;
    let separation_estimated = if gamma.gamma < 1.0 {
        Some(separation_rhs(
            rho,
            rho,
            p1,
            l,
            alpha,
            SeparationMode::Estimated { gamma: gamma.gamma },
        )?)
    } else {
        None
    };
    let noncentrality_known = required_noncentrality(l, p, alpha, EffectMode::Known, None)?;
    let noncentrality_estimated = kappa
        .map(|k| required_noncentrality(l, p, alpha, EffectMode::Estimated, Some(k)))
        .transpose()?;
    let fano = fano_delta_sq.map(|d| fano_bound(d, l)).transpose()?;
    Ok(TheoryReport {
        params: *params,
        thresholds: ThresholdSummary {
            log_term: log_term(p, alpha),
            lambda,
            lambda1: kappa.map(|k| lambda / (1.0 - k)),
            kappa,
            kappa_error,
        },
        requirements: RequirementSummary {
            rho,
            separation_known,
            separation_estimated,
            noncentrality_known,
            noncentrality_estimated,
            per_class_effect_known: noncentrality_known / l as f64,
        },
        gamma,
        fano,
        regimes: asymptotic_regimes(p, p1, n, l, alpha, cutoffs)?,
    })
}
