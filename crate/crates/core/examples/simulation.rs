//! A small slice of the simulation grid: false-negative rate and error
//! against signal strength for each covariance structure.
//!
//! `cargo run --release --example simulation`

use sparse_mclass::covariance::CovarianceStructure;
use sparse_mclass::sim::{run_grid, GridConfig};

fn main() -> sparse_mclass::Result<()> {
    let mut grid = GridConfig::from_json(include_str!("../configs/example1_reduced.json"))?;
    grid.p1_list = vec![10, 100];
    grid.l_list = vec![2, 20];
    grid.tau_list = vec![1.0, 2.0, 3.0];
    for structure in [
        CovarianceStructure::Independent,
        CovarianceStructure::ArHalf,
        CovarianceStructure::CompoundSymmetric,
    ] {
        grid.structure = structure;
        let report = run_grid(&grid, false)?;
        println!("{}", structure.name());
        println!(
            "  {:>4} {:>3} {:>4} {:>8} {:>8} {:>8}",
            "p1", "L", "tau", "FN", "FP", "error"
        );
        for c in &report.cells {
            println!(
                "  {:>4} {:>3} {:>4} {:>8.3} {:>8.5} {:>8.3}",
                c.p1,
                c.n_classes,
                c.tau,
                c.false_negative_prop,
                c.false_positive_prop,
                c.misclass_error
            );
        }
    }
    Ok(())
}
