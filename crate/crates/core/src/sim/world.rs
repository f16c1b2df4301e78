//! Synthetic worlds: random class means, raw training samples and test draws.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::covariance::{CovarianceModel, CovarianceStructure};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg;

use super::SimulationConfig;

/// Class means and their one-way decomposition `m_l = delta + beta_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub class_means: Array2<f64>,
    pub delta: Array1<f64>,
    pub interactions: Array2<f64>,
    pub support: Vec<bool>,
    /// `sum_l beta_lj^2`.
    pub b_sq: Array1<f64>,
    /// `sigma_j^-2 sum_l n_l beta_lj^2` at `n` samples per class.
    pub mu: Array1<f64>,
}

impl GroundTruth {
    /// Decomposes `class_means` (`L x p`) for classes of `n` samples with
    /// per-feature variances `variances`.
    pub fn from_means(class_means: Array2<f64>, n: usize, variances: &Array1<f64>) -> Self {
        let (l, p) = class_means.dim();
        let delta = class_means.sum_axis(ndarray::Axis(0)) / l as f64;
        let interactions = &class_means - &delta;
        let b_sq = Array1::from_iter(
            (0..p).map(|j| interactions.column(j).iter().map(|b| b * b).sum::<f64>()),
        );
        let mu = Array1::from_iter((0..p).map(|j| n as f64 * b_sq[j] / variances[j]));
        let support = b_sq.iter().map(|&b| b > 0.0).collect();
        Self {
            class_means,
            delta,
            interactions,
            support,
            b_sq,
            mu,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_means.nrows()
    }

    pub fn dim(&self) -> usize {
        self.class_means.ncols()
    }

    pub fn p1(&self) -> usize {
        self.support.iter().filter(|&&s| s).count()
    }
}

/// Draws `m_lj ~ N(0, sigma_m^2)` on the first `p1` features, zero elsewhere.
pub fn draw_ground_truth<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> GroundTruth {
    let (l, p, p1) = (config.n_classes, config.p, config.p1);
    let sm = config.sigma_m();
    let mut means = Array2::zeros((l, p));
    for c in 0..l {
        for j in 0..p1 {
            let z: f64 = rng.sample(StandardNormal);
            means[[c, j]] = sm * z;
        }
    }
    let variances = Array1::from_elem(p, config.sigma * config.sigma);
    GroundTruth::from_means(means, config.n, &variances)
}

/// Draws `N(0, Sigma)` vectors.
#[derive(Debug, Clone)]
pub enum NoiseSampler {
    Structured {
        structure: CovarianceStructure,
        p: usize,
        sigma: f64,
    },
    /// Lower Cholesky factor of a dense covariance.
    Dense(Array2<f64>),
}

impl NoiseSampler {
    pub fn structured(structure: CovarianceStructure, p: usize, sigma: f64) -> Self {
        Self::Structured {
            structure,
            p,
            sigma,
        }
    }

    pub fn dense(cov: &CovarianceModel) -> Result<Self> {
        let m = cov.matrix();
        let f = linalg::cholesky(m.view()).map_err(|e| Error::SingularSubmatrix {
            position: e.position,
            feature: e.position,
            pivot: e.pivot,
            tolerance: e.tolerance,
        })?;
        Ok(Self::Dense(f))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Structured { p, .. } => *p,
            Self::Dense(f) => f.nrows(),
        }
    }

    /// Writes one draw into `out`.
    pub fn fill<R: Rng + ?Sized>(&self, out: &mut [f64], rng: &mut R) {
        match self {
            Self::Structured {
                structure, sigma, ..
            } => match structure {
                CovarianceStructure::Independent => {
                    for v in out.iter_mut() {
                        *v = sigma * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                CovarianceStructure::ArHalf => {
                    let innov = sigma * 0.75f64.sqrt();
                    let mut prev = 0.0;
                    for (h, v) in out.iter_mut().enumerate() {
                        let z: f64 = rng.sample(StandardNormal);
                        prev = if h == 0 {
                            sigma * z
                        } else {
                            0.5 * prev + innov * z
                        };
                        *v = prev;
                    }
                }
                CovarianceStructure::CompoundSymmetric => {
                    let s = sigma * 0.5f64.sqrt();
                    let common = s * rng.sample::<f64, _>(StandardNormal);
                    for v in out.iter_mut() {
                        *v = common + s * rng.sample::<f64, _>(StandardNormal);
                    }
                }
            },
            Self::Dense(f) => {
                let z =
                    Array1::from_iter((0..f.nrows()).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let x = linalg::lower_mul(f.view(), z.view());
                out.copy_from_slice(x.as_slice().expect("contiguous"));
            }
        }
    }
}

/// `n` raw samples `N(m_l, Sigma)` per class, grouped by class.
pub fn draw_training_set<R: Rng + ?Sized>(
    truth: &GroundTruth,
    n: usize,
    noise: &NoiseSampler,
    rng: &mut R,
) -> Result<Dataset> {
    let (l, p) = truth.class_means.dim();
    if noise.dim() != p {
        return Err(Error::domain("noise and truth dimensions differ"));
    }
    let mut features = Array2::zeros((l * n, p));
    let mut labels = Vec::with_capacity(l * n);
    for c in 0..l {
        for i in 0..n {
            let mut row = features.row_mut(c * n + i);
            let buf = row.as_slice_mut().expect("standard layout");
            noise.fill(buf, rng);
            for (v, m) in buf.iter_mut().zip(truth.class_means.row(c)) {
                *v += m;
            }
            labels.push(c);
        }
    }
    Dataset::training(labels, features, l)
}

/// `m3` test vectors from uniformly chosen classes.
pub fn draw_test_set<R: Rng + ?Sized>(
    truth: &GroundTruth,
    m3: usize,
    noise: &NoiseSampler,
    rng: &mut R,
) -> Result<Dataset> {
    let (l, p) = truth.class_means.dim();
    let mut features = Array2::zeros((m3, p));
    let mut labels = Vec::with_capacity(m3);
    for i in 0..m3 {
        let c = rng.random_range(0..l);
        let mut row = features.row_mut(i);
        let buf = row.as_slice_mut().expect("standard layout");
        noise.fill(buf, rng);
        for (v, m) in buf.iter_mut().zip(truth.class_means.row(c)) {
            *v += m;
        }
        labels.push(c);
    }
    Dataset::new(labels, features, l)
}
