use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sparse_mclass::classifier::{fit, FitOptions};
use sparse_mclass::covariance::{build_structured_covariance, CovarianceMode, CovarianceStructure};
use sparse_mclass::feature_selection::{select, selection_statistics, summarize, Threshold};
use sparse_mclass::sim::{
    draw_ground_truth, draw_test_set, draw_training_set, run_cell, split_evaluate,
    CovarianceSource, GroundTruth, NoiseSampler, SimulationConfig, SplitConfig, ThresholdPolicy,
};
use sparse_mclass::theory::fano_bound;
use sparse_mclass::Dataset;

fn cell(
    p1: usize,
    l: usize,
    tau: f64,
    mode: CovarianceMode,
    policy: ThresholdPolicy,
) -> SimulationConfig {
    SimulationConfig {
        p: 500,
        p1,
        n_classes: l,
        n: 20,
        sigma: 1.0,
        tau,
        structure: CovarianceStructure::Independent,
        m1: 10,
        m2: 10,
        m3: 50,
        alpha: 0.05,
        cov_mode: mode,
        seed: 5,
        estimated_threshold: policy,
    }
}

#[test]
fn fano_bound_holds_on_equidistant_means() {
    // L = 20 means s e_l, pairwise separation 2 s^2 = 2 aleph ln 19 with aleph = 0.3
    let l = 20;
    let bound = fano_bound(2.0 * 0.3 * 19f64.ln(), l).unwrap();
    assert!(bound.lower_bound > 0.4);
    let s = (0.3 * 19f64.ln()).sqrt();
    let mut means = Array2::zeros((l, l));
    for c in 0..l {
        means[[c, c]] = s;
    }
    // a training set made of the exact means gives the nearest-true-mean rule
    let copies = 4;
    let labels: Vec<usize> = (0..l * copies).map(|i| i / copies).collect();
    let rows = Array2::from_shape_fn((l * copies, l), |(i, j)| means[[i / copies, j]]);
    let exact = Dataset::training(labels, rows, l).unwrap();
    let cov = build_structured_covariance(CovarianceStructure::Independent, l, 1.0).unwrap();
    let model = fit(&exact, &vec![true; l], &cov, FitOptions::default()).unwrap();

    let truth = GroundTruth::from_means(means, 1, &ndarray::Array1::ones(l));
    let noise = NoiseSampler::structured(CovarianceStructure::Independent, l, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let test = draw_test_set(&truth, 40_000, &noise, &mut rng).unwrap();
    let ev = model.evaluate(&test, &mut model.tie_breaker(0)).unwrap();
    let counts = test.class_counts();
    let worst = (0..l)
        .map(|c| {
            let wrong = counts[c] - ev.confusion[c][c];
            let e = wrong as f64 / counts[c] as f64;
            let se = (e * (1.0 - e) / counts[c] as f64).sqrt();
            (e, se)
        })
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    assert!(
        worst.0 >= bound.lower_bound - 3.0 * worst.1,
        "{worst:?} vs {bound:?}"
    );
}

#[test]
fn known_and_estimated_runs_agree() {
    for (p1, l, tau) in [(10, 10, 2.0), (10, 20, 2.0), (50, 10, 3.0), (10, 50, 1.0)] {
        let k = run_cell(
            &cell(p1, l, tau, CovarianceMode::Known, ThresholdPolicy::Plain),
            false,
        )
        .unwrap();
        let e = run_cell(
            &cell(
                p1,
                l,
                tau,
                CovarianceMode::Estimated,
                ThresholdPolicy::Plain,
            ),
            false,
        )
        .unwrap();
        assert!(
            (k.false_negative_prop - e.false_negative_prop).abs() <= 0.05,
            "FN {p1} {l} {tau}: {} vs {}",
            k.false_negative_prop,
            e.false_negative_prop
        );
        assert!(
            (k.misclass_error - e.misclass_error).abs() <= 0.05,
            "error {p1} {l} {tau}: {} vs {}",
            k.misclass_error,
            e.misclass_error
        );
    }
}

#[test]
fn strong_noise_reduces_to_guessing() {
    for l in [2, 10, 50] {
        let r = run_cell(
            &cell(10, l, 0.3, CovarianceMode::Known, ThresholdPolicy::Plain),
            false,
        )
        .unwrap();
        assert!(r.avg_selected < 0.05, "{}", r.avg_selected);
        let guess = 1.0 - 1.0 / l as f64;
        assert!(
            (r.misclass_error - guess).abs() < 0.05,
            "L = {l}: {}",
            r.misclass_error
        );
    }
}

#[test]
fn inflated_threshold_selects_no_more_than_plain() {
    let mut c = cell(
        10,
        10,
        3.0,
        CovarianceMode::Estimated,
        ThresholdPolicy::Plain,
    );
    c.n = 40;
    let plain = run_cell(&c, false).unwrap();
    c.estimated_threshold = ThresholdPolicy::Inflated;
    let inflated = run_cell(&c, false).unwrap();
    assert!(inflated.avg_selected <= plain.avg_selected);
    assert!(inflated.false_negative_prop >= plain.false_negative_prop);
}

#[test]
fn split_evaluation_on_a_separated_synthetic_set() {
    let cfg = cell(
        50,
        10,
        4.0,
        CovarianceMode::Estimated,
        ThresholdPolicy::Inflated,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let truth = draw_ground_truth(&cfg, &mut rng);
    let noise = NoiseSampler::structured(cfg.structure, cfg.p, cfg.sigma);
    // 30 per class leaves 20 for training, matching the configured n
    let data = draw_training_set(&truth, 30, &noise, &mut rng).unwrap();
    let split = SplitConfig {
        test_fraction: 1.0 / 3.0,
        repeats: 20,
        alpha: 0.05,
        cov: CovarianceSource::Estimate,
        threshold: ThresholdPolicy::Inflated,
        allow_fallback: true,
        seed: 1,
    };
    let r = split_evaluate(&data, &split).unwrap();
    assert_eq!((r.n_train, r.n_test), (200, 100));
    assert!(r.error < 0.05, "{r:?}");
    assert!(r.p1_hat > 10.0);
}

#[test]
fn selection_then_classification_end_to_end() {
    let cfg = cell(20, 5, 5.0, CovarianceMode::Known, ThresholdPolicy::Plain);
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let truth = draw_ground_truth(&cfg, &mut rng);
    let noise = NoiseSampler::structured(cfg.structure, cfg.p, cfg.sigma);
    let train = draw_training_set(&truth, cfg.n, &noise, &mut rng).unwrap();
    let cov = build_structured_covariance(cfg.structure, cfg.p, cfg.sigma).unwrap();
    let s = summarize(&train).unwrap();
    let o = select(
        selection_statistics(&s, cov.variances().view()).unwrap(),
        &Threshold::known(5, cfg.p, cfg.alpha).unwrap(),
    );
    assert!(o.selected().iter().all(|&j| j < 20));
    assert!(o.selected_count() >= 5);
    let model = fit(&train, o.mask(), &cov, FitOptions::default()).unwrap();
    let test = draw_test_set(&truth, 2000, &noise, &mut rng).unwrap();
    let ev = model.evaluate(&test, &mut model.tie_breaker(0)).unwrap();
    assert!(ev.error_rate < 0.1, "{}", ev.error_rate);
}
