//! The replication grid: per cell, `M1` truths, `M2` training sets per truth
//! and `M3` test vectors per training set.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{self, FitOptions};
use crate::covariance::{
    build_structured_covariance, mle_pooled_covariance, CovarianceMode, CovarianceModel,
    CovarianceStructure,
};
use crate::error::Result;
use crate::feature_selection::{select, selection_statistics, summarize, Threshold};
use crate::linalg::compensated_sum;

use super::world::{draw_ground_truth, draw_test_set, draw_training_set, NoiseSampler};
use super::{derive_seed, stream_rng, GridConfig, SimulationConfig, Stream, ThresholdPolicy};

/// Outcome of one training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub truth_rep: usize,
    pub train_rep: usize,
    pub false_neg_prop: f64,
    pub false_pos_prop: f64,
    pub error: f64,
    pub selected: usize,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// Some replications failed; aggregates cover the rest.
    Failed {
        failures: usize,
        message: String,
    },
}

impl CellStatus {
    pub fn label(&self) -> String {
        match self {
            Self::Ok => "ok".into(),
            Self::Failed { failures, message } => format!("failed ({failures}): {message}"),
        }
    }
}

/// Aggregates of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub p1: usize,
    pub tau: f64,
    #[serde(rename = "L")]
    pub n_classes: usize,
    pub structure: CovarianceStructure,
    pub cov_mode: CovarianceMode,
    pub replications: usize,
    pub false_negative_prop: f64,
    pub false_positive_prop: f64,
    pub misclass_error: f64,
    pub misclass_se: f64,
    pub avg_selected: f64,
    pub status: CellStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<ReplicationRecord>>,
}

fn replicate(
    cfg: &SimulationConfig,
    known: Option<&CovarianceModel>,
    noise: &NoiseSampler,
    t: usize,
    r: usize,
) -> Result<ReplicationRecord> {
    let (l, p1) = (cfg.n_classes as u64, cfg.p1 as u64);
    let truth = draw_ground_truth(
        cfg,
        &mut stream_rng(cfg.seed, Stream::Truth, &[p1, l, t as u64]),
    );
    let ids = [p1, l, t as u64, r as u64];
    let train = draw_training_set(
        &truth,
        cfg.n,
        noise,
        &mut stream_rng(cfg.seed, Stream::Train, &ids),
    )?;
    let estimated;
    let cov = match known {
        Some(c) => c,
        None => {
            estimated = mle_pooled_covariance(&train)?;
            &estimated
        }
    };
    let threshold = match (cfg.cov_mode, cfg.estimated_threshold) {
        (CovarianceMode::Known, _) => Threshold::known(cfg.n_classes, cfg.p, cfg.alpha)?,
        (CovarianceMode::Estimated, ThresholdPolicy::Plain) => {
            Threshold::estimated_uninflated(cfg.n_classes, cfg.p, cfg.alpha)?
        }
        (CovarianceMode::Estimated, ThresholdPolicy::Inflated) => {
            Threshold::estimated(cfg.n_classes, cfg.p, train.len(), cfg.alpha)?
        }
    };
    let summaries = summarize(&train)?;
    let outcome = select(
        selection_statistics(&summaries, cov.variances().view())?,
        &threshold,
    );
    let mask = outcome.mask();
    let p0 = cfg.p - cfg.p1;
    let missed = truth
        .support
        .iter()
        .zip(mask)
        .filter(|(&s, &m)| s && !m)
        .count();
    let spurious = truth
        .support
        .iter()
        .zip(mask)
        .filter(|(&s, &m)| !s && m)
        .count();
    let ratio = |k: usize, of: usize| if of == 0 { 0.0 } else { k as f64 / of as f64 };

    let opts = FitOptions {
        allow_fallback: true,
        seed: derive_seed(cfg.seed, &[Stream::Ties as u64, p1, l, t as u64, r as u64]),
    };
    let model = classifier::fit(&train, mask, cov, opts)?;
    let test = draw_test_set(
        &truth,
        cfg.m3,
        noise,
        &mut stream_rng(cfg.seed, Stream::Test, &ids),
    )?;
    let mut tie_rng = model.tie_breaker(0);
    let mut errors = 0usize;
    let mut ties = 0usize;
    for (i, &label) in test.labels().iter().enumerate() {
        let pred = model.classify(test.sample(i), &mut tie_rng)?;
        errors += usize::from(pred.label != label);
        ties += usize::from(pred.tie);
    }
    Ok(ReplicationRecord {
        truth_rep: t,
        train_rep: r,
        false_neg_prop: ratio(missed, cfg.p1),
        false_pos_prop: ratio(spurious, p0),
        error: errors as f64 / cfg.m3 as f64,
        selected: outcome.selected_count(),
        ties,
    })
}

fn mean(v: impl Iterator<Item = f64>) -> (f64, usize) {
    let xs: Vec<f64> = v.collect();
    let n = xs.len();
    (compensated_sum(xs) / n as f64, n)
}

/// Runs one cell. Replication failures are recorded in the status rather
/// than returned; only an invalid configuration is an error.
pub fn run_cell(cfg: &SimulationConfig, keep_records: bool) -> Result<SimulationReport> {
    cfg.validate()?;
    let noise = NoiseSampler::structured(cfg.structure, cfg.p, cfg.sigma);
    let known = match cfg.cov_mode {
        CovarianceMode::Known => Some(build_structured_covariance(
            cfg.structure,
            cfg.p,
            cfg.sigma,
        )?),
        CovarianceMode::Estimated => None,
    };
    let jobs: Vec<(usize, usize)> = (0..cfg.m1)
        .flat_map(|t| (0..cfg.m2).map(move |r| (t, r)))
        .collect();
    let results: Vec<Result<ReplicationRecord>> = jobs
        .par_iter()
        .map(|&(t, r)| replicate(cfg, known.as_ref(), &noise, t, r))
        .collect();
    let mut records = Vec::with_capacity(results.len());
    let mut failures = 0;
    let mut first_error = None;
    for res in results {
        match res {
            Ok(rec) => records.push(rec),
            Err(e) => {
                failures += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let (fn_prop, k) = mean(records.iter().map(|r| r.false_neg_prop));
    let (fp_prop, _) = mean(records.iter().map(|r| r.false_pos_prop));
    let (err, _) = mean(records.iter().map(|r| r.error));
    let (sel, _) = mean(records.iter().map(|r| r.selected as f64));
    let se = if k >= 2 {
        let ss = compensated_sum(records.iter().map(|r| (r.error - err).powi(2)));
        (ss / (k - 1) as f64).sqrt() / (k as f64).sqrt()
    } else {
        0.0
    };
    let status = match first_error {
        None => CellStatus::Ok,
        Some(message) => CellStatus::Failed { failures, message },
    };
    Ok(SimulationReport {
        p1: cfg.p1,
        tau: cfg.tau,
        n_classes: cfg.n_classes,
        structure: cfg.structure,
        cov_mode: cfg.cov_mode,
        replications: k,
        false_negative_prop: fn_prop,
        false_positive_prop: fp_prop,
        misclass_error: err,
        misclass_se: se,
        avg_selected: sel,
        status,
        records: keep_records.then_some(records),
    })
}

/// All cells of a grid, in `p1`, `tau`, `L` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub config: GridConfig,
    pub cells: Vec<SimulationReport>,
}

impl GridReport {
    /// Cells of one `(p1, L)` pair in `tau` order.
    pub fn series(&self, p1: usize, n_classes: usize) -> Vec<&SimulationReport> {
        self.cells
            .iter()
            .filter(|c| c.p1 == p1 && c.n_classes == n_classes)
            .collect()
    }

    pub fn cell(&self, p1: usize, tau: f64, n_classes: usize) -> Option<&SimulationReport> {
        self.cells
            .iter()
            .find(|c| c.p1 == p1 && c.tau == tau && c.n_classes == n_classes)
    }

    pub fn failed_cells(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.status != CellStatus::Ok)
            .count()
    }
}

pub fn run_grid(grid: &GridConfig, keep_records: bool) -> Result<GridReport> {
    grid.validate()?;
    let cells = grid
        .cells()
        .par_iter()
        .map(|c| run_cell(c, keep_records))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridReport {
        config: grid.clone(),
        cells,
    })
}

pub fn write_table_csv<W: Write>(writer: W, report: &GridReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "p1",
        "tau",
        "L",
        "false_neg_prop",
        "false_pos_prop",
        "misclass_error",
        "misclass_se",
        "avg_selected",
        "status",
    ])?;
    for c in &report.cells {
        w.write_record([
            c.p1.to_string(),
            c.tau.to_string(),
            c.n_classes.to_string(),
            c.false_negative_prop.to_string(),
            c.false_positive_prop.to_string(),
            c.misclass_error.to_string(),
            c.misclass_se.to_string(),
            c.avg_selected.to_string(),
            c.status.label(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The `(tau, error)` series of one `(p1, L)` pair.
pub fn write_series_csv<W: Write>(
    writer: W,
    report: &GridReport,
    p1: usize,
    n_classes: usize,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "tau",
        "misclass_error",
        "misclass_se",
        "false_neg_prop",
        "avg_selected",
        "status",
    ])?;
    for c in report.series(p1, n_classes) {
        w.write_record([
            c.tau.to_string(),
            c.misclass_error.to_string(),
            c.misclass_se.to_string(),
            c.false_negative_prop.to_string(),
            c.avg_selected.to_string(),
            c.status.label(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
