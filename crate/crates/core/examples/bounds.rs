//! Chi-square tail bounds against simulated tails.
//!
//! `cargo run --release --example bounds -- [dof] [noncentrality]`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_mclass::stat_bounds::{
    lower_tail_point, sample_noncentral_chisq, upper_tail_point, ChiSqParams,
};

fn main() -> sparse_mclass::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: u32 = args.next().map_or(5, |a| a.parse().expect("dof"));
    let mu: f64 = args
        .next()
        .map_or(10.0, |a| a.parse().expect("noncentrality"));
    let params = ChiSqParams::new(k, mu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let draws: Vec<f64> = (0..200_000)
        .map(|_| sample_noncentral_chisq(params, &mut rng))
        .collect();
    let n = draws.len() as f64;

    println!("chi2({k}, {mu}), mean {}", params.mean());
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "x", "exp(-x)", "upper", "P(above)", "lower", "P(below)"
    );
    for x in [0.5, 1.0, 2.0, 3.0, 5.0] {
        let hi = upper_tail_point(params, x)?;
        let lo = lower_tail_point(params, x)?;
        let above = draws.iter().filter(|&&v| v >= hi).count() as f64 / n;
        let below = draws.iter().filter(|&&v| v <= lo).count() as f64 / n;
        println!(
            "{x:>6} {:>10.5} {hi:>10.3} {above:>10.5} {lo:>10.3} {below:>10.5}",
            (-x).exp()
        );
    }
    Ok(())
}
