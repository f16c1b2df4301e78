//! Repeated stratified splits on a labeled dataset, the protocol used for
//! real data. Reads `label,x_1,...,x_p` rows from a CSV when a path is given,
//! otherwise simulates a 16-class set.
//!
//! `cargo run --release --example split_eval -- [data.csv]`

use std::fs::File;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_mclass::data::read_labeled_csv;
use sparse_mclass::sim::{
    draw_ground_truth, draw_training_set, split_evaluate, CovarianceSource, NoiseSampler,
    SimulationConfig, SplitConfig, ThresholdPolicy,
};

fn main() -> sparse_mclass::Result<()> {
    let data = match std::env::args().nth(1) {
        Some(path) => read_labeled_csv(File::open(path)?, false)?,
        None => {
            let cfg: SimulationConfig = serde_json::from_str(
                r#"{"p": 300, "p1": 40, "L": 16, "n": 20, "sigma": 1, "tau": 3,
                    "structure": "independent", "M1": 1, "M2": 1, "M3": 1, "alpha": 0.05,
                    "cov_mode": "estimated", "seed": 0}"#,
            )?;
            let mut rng = ChaCha8Rng::seed_from_u64(16);
            let truth = draw_ground_truth(&cfg, &mut rng);
            draw_training_set(
                &truth,
                30,
                &NoiseSampler::structured(cfg.structure, cfg.p, cfg.sigma),
                &mut rng,
            )?
        }
    };
    println!(
        "{} samples, {} features, {} classes",
        data.len(),
        data.dim(),
        data.n_classes()
    );
    for threshold in [ThresholdPolicy::Inflated, ThresholdPolicy::Plain] {
        let r = split_evaluate(
            &data,
            &SplitConfig {
                test_fraction: 1.0 / 3.0,
                repeats: 100,
                alpha: 0.05,
                cov: CovarianceSource::Estimate,
                threshold,
                allow_fallback: true,
                seed: 1,
            },
        )?;
        println!(
            "{threshold:?}: train {} / test {}, mean p1_hat {:.1}, error {:.4} (se {:.4})",
            r.n_train, r.n_test, r.p1_hat, r.error, r.se
        );
    }
    Ok(())
}
