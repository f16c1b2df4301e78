//! Select, fit and classify on a simulated many-class problem, then look at
//! the scores of a single query.
//!
//! `cargo run --release --example classification`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_mclass::classifier::{fit, FitOptions};
use sparse_mclass::covariance::build_structured_covariance;
use sparse_mclass::feature_selection::{select, selection_statistics, summarize, Threshold};
use sparse_mclass::sim::{
    draw_ground_truth, draw_test_set, draw_training_set, NoiseSampler, SimulationConfig,
};

fn main() -> sparse_mclass::Result<()> {
    let cfg: SimulationConfig = serde_json::from_str(
        r#"{"p": 500, "p1": 100, "L": 20, "n": 20, "sigma": 1, "tau": 2,
            "structure": "compound_symmetric", "M1": 1, "M2": 1, "M3": 100, "alpha": 0.05,
            "cov_mode": "known", "seed": 0}"#,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth = draw_ground_truth(&cfg, &mut rng);
    let noise = NoiseSampler::structured(cfg.structure, cfg.p, cfg.sigma);
    let train = draw_training_set(&truth, cfg.n, &noise, &mut rng)?;
    let test = draw_test_set(&truth, cfg.m3 * cfg.n_classes, &noise, &mut rng)?;
    let cov = build_structured_covariance(cfg.structure, cfg.p, cfg.sigma)?;

    let s = summarize(&train)?;
    let t = Threshold::known(cfg.n_classes, cfg.p, cfg.alpha)?;
    let outcome = select(selection_statistics(&s, cov.variances().view())?, &t);
    let model = fit(
        &train,
        outcome.mask(),
        &cov,
        FitOptions {
            allow_fallback: true,
            seed: 1,
        },
    )?;
    println!(
        "{} features selected, model dimension {}",
        outcome.selected_count(),
        model.dim()
    );

    let ev = model.evaluate(&test, &mut model.tie_breaker(0))?;
    println!(
        "test error {:.4} ({} of {})",
        ev.error_rate, ev.errors, ev.total
    );

    let p = model.classify(test.sample(0), &mut model.tie_breaker(1))?;
    let mut ranked: Vec<(usize, f64)> = p.scores.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    println!(
        "query 0 (class {}): predicted {}",
        test.labels()[0] + 1,
        p.label + 1
    );
    for (c, v) in ranked.iter().take(3) {
        println!("  class {:>2}  score {v:.2}", c + 1);
    }
    Ok(())
}
