//! Monte Carlo harness: synthetic worlds, the replication grid and the
//! stratified split-evaluation protocol.
//!
//! Every random stream is derived from the configured seed and the cell and
//! replication identifiers, never from worker identity, so results do not
//! depend on the thread count. The noise level `tau` is deliberately left out
//! of the derivation: cells that differ only in `tau` see the same underlying
//! normal draws.

mod grid;
mod split;
mod world;

pub use grid::{
    run_cell, run_grid, write_series_csv, write_table_csv, CellStatus, GridReport,
    ReplicationRecord, SimulationReport,
};
pub use split::{split_evaluate, write_split_csv, CovarianceSource, SplitConfig, SplitReport};
pub use world::{draw_ground_truth, draw_test_set, draw_training_set, GroundTruth, NoiseSampler};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceMode, CovarianceStructure};
use crate::error::{Error, Result};

/// Which threshold screens estimated variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// `lambda / (1 - kappa)`.
    #[default]
    Inflated,
    /// `lambda`, as for known variances.
    Plain,
}

/// One cell of the simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub p: usize,
    pub p1: usize,
    #[serde(rename = "L")]
    pub n_classes: usize,
    pub n: usize,
    pub sigma: f64,
    pub tau: f64,
    pub structure: CovarianceStructure,
    #[serde(rename = "M1")]
    pub m1: usize,
    #[serde(rename = "M2")]
    pub m2: usize,
    #[serde(rename = "M3")]
    pub m3: usize,
    pub alpha: f64,
    pub cov_mode: CovarianceMode,
    pub seed: u64,
    #[serde(default)]
    pub estimated_threshold: ThresholdPolicy,
}

impl SimulationConfig {
    /// Spread of the class means, `tau sigma / sqrt(n)`.
    pub fn sigma_m(&self) -> f64 {
        self.tau * self.sigma / (self.n as f64).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        check_common(
            self.p, self.n, self.sigma, self.m1, self.m2, self.m3, self.alpha,
        )?;
        if self.p1 > self.p {
            return Err(Error::Configuration(format!(
                "p1 = {} exceeds p = {}",
                self.p1, self.p
            )));
        }
        if self.n_classes < 2 {
            return Err(Error::Configuration(format!(
                "L must be >= 2, got {}",
                self.n_classes
            )));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::Configuration(format!(
                "tau must be finite and >= 0, got {}",
                self.tau
            )));
        }
        if self.cov_mode == CovarianceMode::Estimated && self.n < 2 {
            return Err(Error::Configuration(
                "estimated covariance needs n >= 2 per class".into(),
            ));
        }
        Ok(())
    }
}

fn check_common(
    p: usize,
    n: usize,
    sigma: f64,
    m1: usize,
    m2: usize,
    m3: usize,
    alpha: f64,
) -> Result<()> {
    if p == 0 {
        return Err(Error::Configuration("p must be >= 1".into()));
    }
    if n == 0 {
        return Err(Error::Configuration("n must be >= 1".into()));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Configuration(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    for (name, v) in [("M1", m1), ("M2", m2), ("M3", m3)] {
        if v == 0 {
            return Err(Error::Configuration(format!("{name} must be >= 1")));
        }
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Configuration(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// A grid over `p1 x tau x L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub p: usize,
    pub p1_list: Vec<usize>,
    #[serde(rename = "L_list")]
    pub l_list: Vec<usize>,
    pub tau_list: Vec<f64>,
    pub n: usize,
    pub sigma: f64,
    pub structure: CovarianceStructure,
    #[serde(rename = "M1")]
    pub m1: usize,
    #[serde(rename = "M2")]
    pub m2: usize,
    #[serde(rename = "M3")]
    pub m3: usize,
    pub alpha: f64,
    pub cov_mode: CovarianceMode,
    pub seed: u64,
    #[serde(default)]
    pub estimated_threshold: ThresholdPolicy,
}

impl GridConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(s)
            .map_err(|e| Error::Configuration(format!("grid config: {e}")))?;
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, empty) in [
            ("p1_list", self.p1_list.is_empty()),
            ("L_list", self.l_list.is_empty()),
            ("tau_list", self.tau_list.is_empty()),
        ] {
            if empty {
                return Err(Error::Configuration(format!("{name} must not be empty")));
            }
        }
        self.cells().iter().try_for_each(|c| {
            c.validate().map_err(|e| {
                Error::Configuration(format!(
                    "cell p1={}, tau={}, L={}: {}",
                    c.p1,
                    c.tau,
                    c.n_classes,
                    strip(e)
                ))
            })
        })
    }

    /// Replication counts of the full-size study.
    pub fn full_scale(mut self) -> Self {
        self.m1 = 50;
        self.m2 = 50;
        self.m3 = 50;
        self
    }

    /// Cells in `p1`, then `tau`, then `L` order.
    pub fn cells(&self) -> Vec<SimulationConfig> {
        let mut out =
            Vec::with_capacity(self.p1_list.len() * self.tau_list.len() * self.l_list.len());
        for &p1 in &self.p1_list {
            for &tau in &self.tau_list {
                for &l in &self.l_list {
                    out.push(SimulationConfig {
                        p: self.p,
                        p1,
                        n_classes: l,
                        n: self.n,
                        sigma: self.sigma,
                        tau,
                        structure: self.structure,
                        m1: self.m1,
                        m2: self.m2,
                        m3: self.m3,
                        alpha: self.alpha,
                        cov_mode: self.cov_mode,
                        seed: self.seed,
                        estimated_threshold: self.estimated_threshold,
                    });
                }
            }
        }
        out
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Configuration(m) => m,
        other => other.to_string(),
    }
}

/// Stream tags mixed into derived seeds.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub(crate) enum Stream {
    Truth = 1,
    Train = 2,
    Test = 3,
    Ties = 4,
    Split = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parts` into `seed`.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |h, &x| splitmix64(h ^ splitmix64(x)))
}

pub(crate) fn stream_rng(seed: u64, stream: Stream, parts: &[u64]) -> ChaCha8Rng {
    let mut all = Vec::with_capacity(parts.len() + 1);
    all.push(stream as u64);
    all.extend_from_slice(parts);
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &all))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_json() -> &'static str {
        r#"{"p": 500, "p1_list": [10, 50, 100, 200], "L_list": [2, 10, 20, 50], "tau_list": [1, 2, 3],
            "n": 20, "sigma": 1.0, "structure": "independent", "M1": 10, "M2": 10, "M3": 50,
            "alpha": 0.05, "cov_mode": "known", "seed": 7}"#
    }

    #[test]
    fn grid_parses_and_expands() {
        let g = GridConfig::from_json(grid_json()).unwrap();
        assert_eq!(g.cells().len(), 48);
        assert_eq!(g.estimated_threshold, ThresholdPolicy::Inflated);
        let c = &g.cells()[1];
        assert_eq!((c.p1, c.tau, c.n_classes), (10, 1.0, 10));
        let full = g.full_scale();
        assert_eq!((full.m1, full.m2, full.m3), (50, 50, 50));
    }

    #[test]
    fn bad_grids_name_the_field() {
        let bad = grid_json().replace("[10, 50, 100, 200]", "[10, 600]");
        let e = GridConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("p1 = 600"), "{e}");
        let bad = grid_json().replace("\"M3\": 50", "\"M3\": 0");
        assert!(GridConfig::from_json(&bad)
            .unwrap_err()
            .to_string()
            .contains("M3"));
        let bad = grid_json().replace("\"seed\": 7", "\"seed\": 7, \"extra\": 1");
        assert!(GridConfig::from_json(&bad)
            .unwrap_err()
            .to_string()
            .contains("extra"));
        let bad = grid_json().replace("independent", "banded");
        assert!(GridConfig::from_json(&bad).is_err());
    }

    #[test]
    fn sigma_m_from_tau() {
        let mut c = GridConfig::from_json(grid_json()).unwrap().cells()[0].clone();
        c.tau = 2.0;
        assert!((c.sigma_m() - 2.0 / 20f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn derived_seeds_separate_streams() {
        let a = derive_seed(1, &[1, 10, 2, 0]);
        assert_ne!(a, derive_seed(1, &[2, 10, 2, 0]));
        assert_ne!(a, derive_seed(2, &[1, 10, 2, 0]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(a, derive_seed(1, &[1, 10, 2, 0]));
    }
}
