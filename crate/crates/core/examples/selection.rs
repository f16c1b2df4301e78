//! Screening a sparse signal among many null features, with known and with
//! estimated variances.
//!
//! `cargo run --release --example selection`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_mclass::covariance::{
    build_structured_covariance, mle_pooled_covariance, CovarianceStructure,
};
use sparse_mclass::feature_selection::{select, selection_statistics, summarize, Threshold};
use sparse_mclass::sim::{draw_ground_truth, draw_training_set, NoiseSampler, SimulationConfig};

fn main() -> sparse_mclass::Result<()> {
    let cfg: SimulationConfig = serde_json::from_str(
        r#"{"p": 500, "p1": 20, "L": 10, "n": 20, "sigma": 1, "tau": 3,
            "structure": "ar_half", "M1": 1, "M2": 1, "M3": 1, "alpha": 0.05,
            "cov_mode": "known", "seed": 0}"#,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let truth = draw_ground_truth(&cfg, &mut rng);
    let noise = NoiseSampler::structured(cfg.structure, cfg.p, cfg.sigma);
    let train = draw_training_set(&truth, cfg.n, &noise, &mut rng)?;
    let summaries = summarize(&train)?;

    let known = build_structured_covariance(CovarianceStructure::ArHalf, cfg.p, cfg.sigma)?;
    let t = Threshold::known(cfg.n_classes, cfg.p, cfg.alpha)?;
    let a = select(
        selection_statistics(&summaries, known.variances().view())?,
        &t,
    );

    let est = mle_pooled_covariance(&train)?;
    let t1 = Threshold::estimated(cfg.n_classes, cfg.p, train.len(), cfg.alpha)?;
    let b = select(
        selection_statistics(&summaries, est.variances().view())?,
        &t1,
    );

    let hits = |sel: &[usize]| sel.iter().filter(|&&j| truth.support[j]).count();
    for (name, o) in [("known", &a), ("estimated", &b)] {
        let sel = o.selected();
        println!(
            "{name:>9}: threshold {:.2}, selected {}, true {} of {}, false {}",
            o.threshold().value,
            sel.len(),
            hits(&sel),
            truth.p1(),
            sel.len() - hits(&sel)
        );
    }
    println!("kappa = {:.4}", t1.kappa.unwrap_or(0.0));
    Ok(())
}
