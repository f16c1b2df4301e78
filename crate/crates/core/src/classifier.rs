//! Scaled-Mahalanobis nearest-centroid rule on a selected feature subset.
//!
//! A query `y` is assigned to
//!
//! ```text
//! argmin_l rho_l (y* - Ybar*_l)^T (S*)^{-1} (y* - Ybar*_l)
//! ```
//!
//! where `*` denotes restriction to the selected features and `S*` is the
//! covariance sub-matrix (known, or the maximum likelihood estimate). Scores
//! within a relative `1e-12` of the minimum are treated as tied and the label
//! is drawn uniformly among them. With an empty mask and fallback enabled the
//! label is a uniform random class.

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covariance::{submatrix_factorize, CovarianceModel, FactorizedSubmatrix};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::feature_selection::{summarize, ClassSummaries};

/// Relative tolerance under which two scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitOptions {
    /// Permit an empty mask; such a model guesses uniformly at random.
    pub allow_fallback: bool,
    /// Seed of the tie-breaking streams.
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ClassifierModel {
    summaries: ClassSummaries,
    mask: Vec<bool>,
    restricted_means: Array2<f64>,
    /// `F^{-1} Ybar*_l` per row; empty for fallback models.
    whitened_centroids: Array2<f64>,
    fact: Option<FactorizedSubmatrix>,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Zero-based class index.
    pub label: usize,
    /// Scaled squared distances to every centroid; empty for fallback guesses.
    pub scores: Vec<f64>,
    pub tie: bool,
    pub fallback: bool,
}

/// Misclassification rate and confusion counts (rows: true class, columns: predicted).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub error_rate: f64,
    pub errors: usize,
    pub total: usize,
    pub confusion: Vec<Vec<usize>>,
}

/// Fits the rule on the features selected by `mask`.
pub fn fit(
    data: &Dataset,
    mask: &[bool],
    cov: &CovarianceModel,
    opts: FitOptions,
) -> Result<ClassifierModel> {
    if mask.len() != data.dim() || cov.dim() != data.dim() {
        return Err(Error::domain(format!(
            "mask ({}), covariance ({}) and data ({}) dimensions differ",
            mask.len(),
            cov.dim(),
            data.dim()
        )));
    }
    let summaries = summarize(data)?;
    let l = summaries.n_classes();
    if !mask.iter().any(|&m| m) {
        if !opts.allow_fallback {
            return Err(Error::Configuration(
                "no features selected and random-guess fallback is disabled".into(),
            ));
        }
        return Ok(ClassifierModel {
            summaries,
            mask: mask.to_vec(),
            restricted_means: Array2::zeros((l, 0)),
            whitened_centroids: Array2::zeros((l, 0)),
            fact: None,
            seed: opts.seed,
        });
    }
    let fact = submatrix_factorize(cov, mask)?;
    let restricted_means = summaries.restricted_means(fact.order());
    let mut whitened = Array2::zeros(restricted_means.raw_dim());
    for (c, row) in restricted_means.rows().into_iter().enumerate() {
        whitened.row_mut(c).assign(&fact.whiten(row)?);
    }
    Ok(ClassifierModel {
        summaries,
        mask: mask.to_vec(),
        restricted_means,
        whitened_centroids: whitened,
        fact: Some(fact),
        seed: opts.seed,
    })
}

impl ClassifierModel {
    pub fn n_classes(&self) -> usize {
        self.summaries.n_classes()
    }

    pub fn dim(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn summaries(&self) -> &ClassSummaries {
        &self.summaries
    }

    pub fn rho(&self) -> &[f64] {
        self.summaries.rho()
    }

    /// Centroids restricted to the selected features (`L x p1_hat`).
    pub fn restricted_means(&self) -> &Array2<f64> {
        &self.restricted_means
    }

    pub fn factorization(&self) -> Option<&FactorizedSubmatrix> {
        self.fact.as_ref()
    }

    pub fn is_fallback(&self) -> bool {
        self.fact.is_none()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent tie-breaking stream number `stream` of this model.
    pub fn tie_breaker(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Scores every centroid against `y0` (full length `p`). Empty for
    /// fallback models.
    pub fn scores(&self, y0: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        if y0.len() != self.dim() {
            return Err(Error::domain(format!(
                "query of length {} for a {}-feature model",
                y0.len(),
                self.dim()
            )));
        }
        if let Some(j) = y0.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("query coordinate {j} is not finite")));
        }
        let Some(fact) = &self.fact else {
            return Ok(Vec::new());
        };
        let w = fact.whiten(fact.restrict(y0).view())?;
        let rho = self.summaries.rho();
        Ok(self
            .whitened_centroids
            .rows()
            .into_iter()
            .zip(rho)
            .map(|(c, &r)| {
                let d2: f64 = w.iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                r * d2
            })
            .collect())
    }

    pub fn classify<R: Rng + ?Sized>(
        &self,
        y0: ArrayView1<'_, f64>,
        rng: &mut R,
    ) -> Result<Prediction> {
        let scores = self.scores(y0)?;
        if self.fact.is_none() {
            return Ok(Prediction {
                label: rng.random_range(0..self.n_classes()),
                scores,
                tie: false,
                fallback: true,
            });
        }
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let cutoff = min + TIE_TOLERANCE * min.abs();
        let tied: Vec<usize> = scores
            .iter()
            .enumerate()
            .filter_map(|(l, &s)| (s <= cutoff).then_some(l))
            .collect();
        let label = if tied.len() == 1 {
            tied[0]
        } else {
            tied[rng.random_range(0..tied.len())]
        };
        Ok(Prediction {
            label,
            scores,
            tie: tied.len() > 1,
            fallback: false,
        })
    }

    /// Classifies each row of `queries` with tie-breaking stream 0.
    pub fn classify_all(&self, queries: &Array2<f64>) -> Result<Vec<Prediction>> {
        let mut rng = self.tie_breaker(0);
        queries
            .rows()
            .into_iter()
            .map(|q| self.classify(q, &mut rng))
            .collect()
    }

    pub fn evaluate<R: Rng + ?Sized>(&self, test: &Dataset, rng: &mut R) -> Result<Evaluation> {
        evaluate(self, test, rng)
    }
}

/// Classifies `y0` with `model`.
pub fn classify<R: Rng + ?Sized>(
    model: &ClassifierModel,
    y0: ArrayView1<'_, f64>,
    rng: &mut R,
) -> Result<Prediction> {
    model.classify(y0, rng)
}

/// Misclassification rate of `model` on a labeled test set.
pub fn evaluate<R: Rng + ?Sized>(
    model: &ClassifierModel,
    test: &Dataset,
    rng: &mut R,
) -> Result<Evaluation> {
    let l = model.n_classes();
    if test.n_classes() > l {
        return Err(Error::domain(format!(
            "test labels reach class {} but the model has {l} classes",
            test.n_classes()
        )));
    }
    if test.is_empty() {
        return Err(Error::domain("cannot evaluate on an empty test set"));
    }
    let mut confusion = vec![vec![0usize; l]; l];
    let mut errors = 0;
    for (i, &truth) in test.labels().iter().enumerate() {
        let pred = model.classify(test.sample(i), rng)?;
        confusion[truth][pred.label] += 1;
        if pred.label != truth {
            errors += 1;
        }
    }
    Ok(Evaluation {
        error_rate: errors as f64 / test.len() as f64,
        errors,
        total: test.len(),
        confusion,
    })
}

/// `v`, as an owned vector; convenience for single queries.
pub fn query(values: &[f64]) -> Array1<f64> {
    Array1::from(values.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{
        build_structured_covariance, mle_pooled_covariance, CovarianceStructure,
    };
    use approx::assert_relative_eq;
    use ndarray::array;

    fn identity(p: usize) -> CovarianceModel {
        build_structured_covariance(CovarianceStructure::Independent, p, 1.0).unwrap()
    }

    /// One sample at 0 in class 1 (rho = 1/2), nine at 1 in class 2 (rho = 9/10).
    fn boundary_model() -> ClassifierModel {
        let mut labels = vec![0];
        labels.extend([1; 9]);
        let mut rows = Array2::ones((10, 1));
        rows[[0, 0]] = 0.0;
        let data = Dataset::training(labels, rows, 2).unwrap();
        fit(&data, &[true], &identity(1), FitOptions::default()).unwrap()
    }

    #[test]
    fn scalar_decision_boundary() {
        let m = boundary_model();
        assert_relative_eq!(m.rho()[0], 0.5);
        assert_relative_eq!(m.rho()[1], 0.9);
        let mut rng = m.tie_breaker(0);
        assert_eq!(m.classify(query(&[0.5]).view(), &mut rng).unwrap().label, 0);
        assert_eq!(m.classify(query(&[0.6]).view(), &mut rng).unwrap().label, 1);
        let b = (1.8 - 1.8f64.sqrt()) / 0.8;
        let s = m.scores(query(&[b]).view()).unwrap();
        assert_relative_eq!(s[0], s[1], epsilon = 1e-14);
    }

    #[test]
    fn query_at_centroid_scores_zero() {
        let data = Dataset::training(
            vec![0, 1, 2],
            array![[0.0, 0.0], [3.0, 1.0], [-2.0, 5.0]],
            3,
        )
        .unwrap();
        let m = fit(&data, &[true, true], &identity(2), FitOptions::default()).unwrap();
        let mut rng = m.tie_breaker(0);
        let p = m.classify(query(&[3.0, 1.0]).view(), &mut rng).unwrap();
        assert_eq!(p.label, 1);
        assert_eq!(p.scores[1], 0.0);
        assert!(!p.tie && !p.fallback);
    }

    #[test]
    fn identity_covariance_is_scaled_euclidean() {
        let data = Dataset::training(vec![0, 0, 1], array![[0.0, 2.0], [2.0, 0.0], [5.0, 5.0]], 2)
            .unwrap();
        let m = fit(&data, &[true, true], &identity(2), FitOptions::default()).unwrap();
        let s = m.scores(query(&[1.0, 2.0]).view()).unwrap();
        assert_relative_eq!(s[0], (2.0 / 3.0) * (0.0 + 1.0), epsilon = 1e-14);
        assert_relative_eq!(s[1], 0.5 * (16.0 + 9.0), epsilon = 1e-14);
    }

    #[test]
    fn identical_centroids_tie_uniformly() {
        let data = Dataset::training(vec![0, 1], array![[1.0], [1.0]], 2).unwrap();
        let mut counts = [0usize; 2];
        for seed in 0..400 {
            let m = fit(
                &data,
                &[true],
                &identity(1),
                FitOptions {
                    allow_fallback: false,
                    seed,
                },
            )
            .unwrap();
            let mut rng = m.tie_breaker(0);
            let p = m.classify(query(&[7.0]).view(), &mut rng).unwrap();
            assert!(p.tie);
            counts[p.label] += 1;
        }
        assert!(counts[0] > 150 && counts[1] > 150, "{counts:?}");
    }

    #[test]
    fn empty_mask_requires_fallback() {
        let data = Dataset::training(vec![0, 1], array![[1.0], [2.0]], 2).unwrap();
        assert!(matches!(
            fit(&data, &[false], &identity(1), FitOptions::default()),
            Err(Error::Configuration(_))
        ));
        let m = fit(
            &data,
            &[false],
            &identity(1),
            FitOptions {
                allow_fallback: true,
                seed: 1,
            },
        )
        .unwrap();
        assert!(m.is_fallback());
        let p = m
            .classify(query(&[0.0]).view(), &mut m.tie_breaker(0))
            .unwrap();
        assert!(p.fallback);
    }

    #[test]
    fn fallback_error_rate_is_random_guess() {
        let l = 5;
        let n = 20_000;
        let labels: Vec<usize> = (0..n).map(|i| i % l).collect();
        let data = Dataset::training(labels.clone(), Array2::zeros((n, 1)), l).unwrap();
        let m = fit(
            &data,
            &[false],
            &identity(1),
            FitOptions {
                allow_fallback: true,
                seed: 3,
            },
        )
        .unwrap();
        let ev = m.evaluate(&data, &mut m.tie_breaker(0)).unwrap();
        assert!((ev.error_rate - 0.8).abs() < 0.015, "{}", ev.error_rate);
        for (c, row) in ev.confusion.iter().enumerate() {
            assert_eq!(
                row.iter().sum::<usize>(),
                labels.iter().filter(|&&x| x == c).count()
            );
        }
    }

    #[test]
    fn centroids_as_test_set_have_zero_error() {
        let data = Dataset::training(
            vec![0, 0, 1, 1, 2, 2],
            array![
                [0.0, 0.0],
                [0.2, 0.0],
                [3.0, 1.0],
                [3.2, 1.0],
                [-2.0, 5.0],
                [-2.2, 5.0]
            ],
            3,
        )
        .unwrap();
        let m = fit(&data, &[true, true], &identity(2), FitOptions::default()).unwrap();
        let centroids = Dataset::new(vec![0, 1, 2], m.restricted_means().clone(), 3).unwrap();
        let ev = m.evaluate(&centroids, &mut m.tie_breaker(0)).unwrap();
        assert_eq!(ev.error_rate, 0.0);
    }

    #[test]
    fn estimated_with_too_many_features_is_singular() {
        let data = Dataset::training(
            vec![0, 0, 1, 1],
            array![
                [0.0, 1.0, 2.0],
                [1.0, 0.0, 2.5],
                [0.5, 0.5, 0.0],
                [2.0, 3.0, 1.0]
            ],
            2,
        )
        .unwrap();
        let cov = mle_pooled_covariance(&data).unwrap();
        assert!(matches!(
            fit(&data, &[true, true, true], &cov, FitOptions::default()),
            Err(Error::SingularSubmatrix { .. })
        ));
    }

    #[test]
    fn query_length_and_label_checks() {
        let m = boundary_model();
        assert!(m
            .classify(query(&[0.5, 1.0]).view(), &mut m.tie_breaker(0))
            .is_err());
        let test = Dataset::new(vec![2], array![[0.0]], 3).unwrap();
        assert!(m.evaluate(&test, &mut m.tie_breaker(0)).is_err());
    }

    proptest::proptest! {
        #[test]
        fn permuting_classes_permutes_predictions(y in -3.0f64..3.0, z in -3.0f64..3.0) {
            let rows = array![[0.0, 0.0], [1.0, 2.0], [-1.5, 0.5], [2.0, -1.0]];
            let cov = CovarianceModel::known(array![[1.0, 0.3], [0.3, 2.0]]).unwrap();
            let a = fit(&Dataset::training(vec![0, 1, 2, 3], rows.clone(), 4).unwrap(), &[true, true], &cov, FitOptions::default()).unwrap();
            let perm = [2usize, 0, 3, 1];
            let b = fit(&Dataset::training(perm.to_vec(), rows, 4).unwrap(), &[true, true], &cov, FitOptions::default()).unwrap();
            let q = query(&[y, z]);
            let pa = a.classify(q.view(), &mut a.tie_breaker(0)).unwrap();
            let pb = b.classify(q.view(), &mut b.tie_breaker(0)).unwrap();
            proptest::prop_assert_eq!(perm[pa.label], pb.label);
        }

        #[test]
        fn common_rescaling_preserves_labels(s in 0.1f64..10.0, y in -3.0f64..3.0) {
            let rows = array![[0.0, 0.0], [1.0, 2.0], [-1.5, 0.5]];
            let sig = array![[1.0, 0.3], [0.3, 2.0]];
            let a = fit(&Dataset::training(vec![0, 1, 2], rows.clone(), 3).unwrap(), &[true, true],
                &CovarianceModel::known(sig.clone()).unwrap(), FitOptions::default()).unwrap();
            let b = fit(&Dataset::training(vec![0, 1, 2], &rows * s, 3).unwrap(), &[true, true],
                &CovarianceModel::known(sig * (s * s)).unwrap(), FitOptions::default()).unwrap();
            let q = query(&[y, 0.7]);
            let pa = a.classify(q.view(), &mut a.tie_breaker(0)).unwrap();
            let pb = b.classify((&q * s).view(), &mut b.tie_breaker(0)).unwrap();
            proptest::prop_assert_eq!(pa.label, pb.label);
        }
    }
}
