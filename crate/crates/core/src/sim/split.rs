//! Repeated stratified train/validation splits of a labeled dataset.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::classifier::{self, FitOptions};
use crate::covariance::{mle_pooled_covariance, CovarianceModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::feature_selection::{select, selection_statistics, summarize, Threshold};
use crate::linalg::compensated_sum;

use super::{derive_seed, stream_rng, Stream, ThresholdPolicy};

/// Largest admissible per-class validation fraction.
pub const MAX_TEST_FRACTION: f64 = 1.0 / 3.0;

#[derive(Debug, Clone)]
pub enum CovarianceSource {
    Known(CovarianceModel),
    /// Pooled maximum likelihood estimate from each training part.
    Estimate,
}

#[derive(Debug, Clone)]
pub struct SplitConfig {
    /// Per-class validation fraction, at most 1/3; class sizes are floored.
    pub test_fraction: f64,
    pub repeats: usize,
    pub alpha: f64,
    pub cov: CovarianceSource,
    pub threshold: ThresholdPolicy,
    pub allow_fallback: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    #[serde(rename = "L")]
    pub n_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Mean number of selected features.
    pub p1_hat: f64,
    pub error: f64,
    pub se: f64,
    pub repeats: usize,
    pub errors: Vec<f64>,
    pub selected: Vec<usize>,
}

pub fn split_evaluate(data: &Dataset, config: &SplitConfig) -> Result<SplitReport> {
    let f = config.test_fraction;
    if !(0.0..=MAX_TEST_FRACTION).contains(&f) {
        return Err(Error::Configuration(format!(
            "test fraction must lie in [0, 1/3], got {f}"
        )));
    }
    if config.repeats == 0 {
        return Err(Error::Configuration("repeats must be >= 1".into()));
    }
    data.require_all_classes()?;
    let l = data.n_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); l];
    for (i, &c) in data.labels().iter().enumerate() {
        by_class[c].push(i);
    }
    // floor with a little slack so that e.g. 1/3 of 9 is exactly 3
    let test_sizes: Vec<usize> = by_class
        .iter()
        .map(|v| (f * v.len() as f64 + 1e-9).floor() as usize)
        .collect();
    for (c, (v, &t)) in by_class.iter().zip(&test_sizes).enumerate() {
        if v.len() - t < 2 {
            return Err(Error::domain(format!(
                "class {} has {} samples; at least 2 must remain for training after holding out {t}",
                c + 1,
                v.len()
            )));
        }
    }
    let n_test: usize = test_sizes.iter().sum();
    if n_test == 0 {
        return Err(Error::domain("the split leaves an empty validation set"));
    }
    let n_train = data.len() - n_test;
    if let CovarianceSource::Known(cov) = &config.cov {
        if cov.dim() != data.dim() {
            return Err(Error::domain(format!(
                "covariance is {0}x{0} but the data have {1} features",
                cov.dim(),
                data.dim()
            )));
        }
    }

    let mut errors = Vec::with_capacity(config.repeats);
    let mut selected = Vec::with_capacity(config.repeats);
    for r in 0..config.repeats {
        let mut rng = stream_rng(config.seed, Stream::Split, &[r as u64]);
        let mut train_idx = Vec::with_capacity(n_train);
        let mut test_idx = Vec::with_capacity(n_test);
        for (v, &t) in by_class.iter().zip(&test_sizes) {
            let mut v = v.clone();
            v.shuffle(&mut rng);
            test_idx.extend_from_slice(&v[..t]);
            train_idx.extend_from_slice(&v[t..]);
        }
        let train = data.subset(&train_idx);
        let test = data.subset(&test_idx);
        let estimated;
        let (cov, threshold) = match &config.cov {
            CovarianceSource::Known(c) => (c, Threshold::known(l, data.dim(), config.alpha)?),
            CovarianceSource::Estimate => {
                estimated = mle_pooled_covariance(&train)?;
                let t = match config.threshold {
                    ThresholdPolicy::Inflated => {
                        Threshold::estimated(l, data.dim(), n_train, config.alpha)?
                    }
                    ThresholdPolicy::Plain => {
                        Threshold::estimated_uninflated(l, data.dim(), config.alpha)?
                    }
                };
                (&estimated, t)
            }
        };
        let summaries = summarize(&train)?;
        let outcome = select(
            selection_statistics(&summaries, cov.variances().view())?,
            &threshold,
        );
        let opts = FitOptions {
            allow_fallback: config.allow_fallback,
            seed: derive_seed(config.seed, &[Stream::Ties as u64, r as u64]),
        };
        let model = classifier::fit(&train, outcome.mask(), cov, opts)?;
        let ev = model.evaluate(&test, &mut model.tie_breaker(0))?;
        errors.push(ev.error_rate);
        selected.push(outcome.selected_count());
    }
    let k = errors.len() as f64;
    let error = compensated_sum(errors.iter().copied()) / k;
    let se = if errors.len() >= 2 {
        (compensated_sum(errors.iter().map(|e| (e - error).powi(2))) / (k - 1.0)).sqrt() / k.sqrt()
    } else {
        0.0
    };
    Ok(SplitReport {
        n_classes: l,
        n_train,
        n_test,
        p1_hat: compensated_sum(selected.iter().map(|&s| s as f64)) / k,
        error,
        se,
        repeats: config.repeats,
        errors,
        selected,
    })
}

/// One summary row in the `L,N_train,N_test,p1_hat,error,se` schema.
pub fn write_split_csv<W: Write>(writer: W, report: &SplitReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["L", "N_train", "N_test", "p1_hat", "error", "se"])?;
    w.write_record([
        report.n_classes.to_string(),
        report.n_train.to_string(),
        report.n_test.to_string(),
        report.p1_hat.to_string(),
        report.error.to_string(),
        report.se.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{build_structured_covariance, CovarianceStructure};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn data(l: usize, per: usize, p: usize, shift: f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let labels: Vec<usize> = (0..l * per).map(|i| i / per).collect();
        let feats = Array2::from_shape_fn((l * per, p), |(i, j)| {
            let z: f64 = rng.sample(StandardNormal);
            z + if j < 3 {
                shift * (labels[i] as f64)
            } else {
                0.0
            }
        });
        Dataset::training(labels, feats, l).unwrap()
    }

    fn cfg(f: f64, repeats: usize) -> SplitConfig {
        SplitConfig {
            test_fraction: f,
            repeats,
            alpha: 0.05,
            cov: CovarianceSource::Estimate,
            threshold: ThresholdPolicy::Plain,
            allow_fallback: true,
            seed: 3,
        }
    }

    #[test]
    fn protocol_bounds() {
        let d = data(3, 9, 5, 2.0);
        assert!(matches!(
            split_evaluate(&d, &cfg(0.4, 1)),
            Err(Error::Configuration(_))
        ));
        assert!(split_evaluate(&d, &cfg(0.0, 1)).is_err());
        let tiny = data(2, 2, 5, 2.0);
        let e = split_evaluate(&tiny, &cfg(1.0 / 3.0, 1))
            .unwrap_err()
            .to_string();
        assert!(e.contains("empty"), "{e}");
        let three = data(2, 1, 5, 2.0);
        let e = split_evaluate(&three, &cfg(1.0 / 3.0, 1))
            .unwrap_err()
            .to_string();
        assert!(e.contains("class 1"), "{e}");
    }

    #[test]
    fn sizes_and_determinism() {
        let d = data(4, 9, 6, 3.0);
        let a = split_evaluate(&d, &cfg(1.0 / 3.0, 5)).unwrap();
        assert_eq!((a.n_train, a.n_test), (24, 12));
        assert_eq!(a, split_evaluate(&d, &cfg(1.0 / 3.0, 5)).unwrap());
        assert_eq!(a.errors.len(), 5);
        assert!(a.error < 0.2, "{}", a.error);
    }

    #[test]
    fn known_covariance_source() {
        let d = data(3, 12, 6, 3.0);
        let mut c = cfg(0.25, 3);
        c.cov = CovarianceSource::Known(
            build_structured_covariance(CovarianceStructure::Independent, 6, 1.0).unwrap(),
        );
        let r = split_evaluate(&d, &c).unwrap();
        assert!(r.p1_hat >= 1.0);
        let mut buf = Vec::new();
        write_split_csv(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(
            text.starts_with("L,N_train,N_test,p1_hat,error,se\n3,27,9,"),
            "{text}"
        );
    }
}
