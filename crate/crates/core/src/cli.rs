//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage, input or configuration errors, 3
//! for numerical failures (singular sub-matrix, `kappa` admissibility).
//! Primary outputs carry no timestamps; run metadata goes to
//! `<output>.manifest.json`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::classifier::{self, FitOptions};
use crate::covariance::{mle_pooled_covariance, CovarianceMode, CovarianceModel};
use crate::data::{read_labeled_csv, read_matrix_csv, write_matrix_csv, Dataset};
use crate::error::{Error, Result};
use crate::feature_selection::{
    select, selection_statistics, summarize, SelectionOutcome, Threshold,
};
use crate::manifest::{write_manifest, ManifestBuilder};
use crate::sim::{self, CovarianceSource, GridConfig, SplitConfig, ThresholdPolicy};
use crate::theory::{theory_report, RegimeCutoffs, TheoryParams, DEFAULT_C1};

/// Seed used when neither `--seed` nor `SPARSE_MCLASS_SEED` is given.
pub const DEFAULT_SEED: u64 = 20_160_101;

#[derive(Debug, Parser)]
#[command(
    name = "sparse-mclass",
    version,
    about = "Sparse feature selection and multi-class classification"
)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation grid and write the cell table and per-(p1, L) series.
    Simulate(SimulateArgs),
    /// Screen the features of a labeled training file.
    Select(SelectArgs),
    /// Select (or load a mask), fit, and classify query vectors.
    Classify(ClassifyArgs),
    /// Repeated stratified split evaluation of a labeled file.
    SplitEval(SplitArgs),
    /// Report thresholds, requirements, gamma, lower bound and regimes.
    Theory(TheoryArgs),
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Random seed; falls back to SPARSE_MCLASS_SEED, then the default.
    #[arg(long, env = "SPARSE_MCLASS_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Inflated,
    Plain,
}

impl From<PolicyArg> for ThresholdPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Inflated => ThresholdPolicy::Inflated,
            PolicyArg::Plain => ThresholdPolicy::Plain,
        }
    }
}

#[derive(Debug, Args)]
struct CovArgs {
    /// `estimate`, or `known:PATH` with a header-free p x p CSV.
    #[arg(long = "cov", default_value = "estimate")]
    cov: String,
    /// Threshold for estimated variances.
    #[arg(long, value_enum, default_value = "inflated")]
    threshold: PolicyArg,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Use 50/50/50 replications instead of the configured counts.
    #[arg(long)]
    full_scale: bool,
    #[command(flatten)]
    seed: SeedArg,
    /// Cell table; series files are written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Also write per-replication records as JSON next to the table.
    #[arg(long)]
    records: bool,
}

#[derive(Debug, Args)]
struct SelectArgs {
    /// Labeled CSV: integer label in 1..L, then p features.
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    header: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    cov: CovArgs,
    /// Outcome JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the covariance matrix used.
    #[arg(long)]
    dump_cov: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long)]
    train: PathBuf,
    /// Query CSV of p features per row.
    #[arg(long)]
    query: PathBuf,
    /// The query file carries a label column; errors are then reported.
    #[arg(long)]
    query_labeled: bool,
    #[arg(long)]
    header: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    cov: CovArgs,
    /// Selection JSON or a JSON list of 0-based feature indices.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Guess uniformly at random when no feature is selected.
    #[arg(long)]
    fallback: bool,
    /// Append per-class scores to each prediction.
    #[arg(long)]
    emit_scores: bool,
    #[command(flatten)]
    seed: SeedArg,
    /// Predictions CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    header: bool,
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    /// Per-class validation fraction, at most 1/3 (`a/b` accepted).
    #[arg(long, default_value = "1/3", value_parser = parse_fraction)]
    fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    cov: CovArgs,
    #[arg(long)]
    fallback: bool,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TheoryArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    p1: usize,
    /// Samples per class.
    #[arg(long)]
    n: usize,
    #[arg(long = "classes", short = 'L', alias = "L")]
    classes: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_C1)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    eig_min: f64,
    #[arg(long, default_value_t = 1.0)]
    eig_max: f64,
    /// Evaluate the lower bound at this minimum separation (needs L >= 3).
    #[arg(long)]
    fano_delta_sq: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    eta1_cutoff: f64,
    #[arg(long, default_value_t = 10.0)]
    eta2_cutoff: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in '{s}'"))?;
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in '{s}'"))?;
            a / b
        }
        None => s
            .trim()
            .parse()
            .map_err(|_| format!("'{s}' is not a number"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                3
            } else {
                2
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let go = || match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Select(a) => cmd_select(a),
        Command::Classify(a) => cmd_classify(a),
        Command::SplitEval(a) => cmd_split_eval(a),
        Command::Theory(a) => cmd_theory(a),
    };
    match cli.threads {
        Some(0) => Err(Error::Configuration("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Configuration(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Configuration(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Configuration(format!("cannot create {}: {e}", path.display())))
}

/// Runs `f` against the output file, or stdout without one.
fn emit(out: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn finish(builder: &ManifestBuilder, artifacts: Vec<PathBuf>) -> Result<()> {
    if !artifacts.is_empty() {
        write_manifest(builder, &artifacts)?;
    }
    Ok(())
}

fn seed_of(s: &SeedArg) -> u64 {
    s.seed.unwrap_or(DEFAULT_SEED)
}

enum CovChoice {
    Known(PathBuf),
    Estimate,
}

fn parse_cov(s: &str) -> Result<CovChoice> {
    if s == "estimate" {
        Ok(CovChoice::Estimate)
    } else if let Some(p) = s.strip_prefix("known:") {
        Ok(CovChoice::Known(PathBuf::from(p)))
    } else {
        Err(Error::Configuration(format!(
            "--cov must be 'estimate' or 'known:PATH', got '{s}'"
        )))
    }
}

fn load_known(path: &Path, p: usize, builder: &mut ManifestBuilder) -> Result<CovarianceModel> {
    builder.input(path)?;
    let m = read_matrix_csv(open(path)?, false)?;
    if m.nrows() != p || m.ncols() != p {
        return Err(Error::Configuration(format!(
            "covariance file is {}x{}, expected {p}x{p}",
            m.nrows(),
            m.ncols()
        )));
    }
    CovarianceModel::known(m)
}

fn load_labeled(path: &Path, header: bool, builder: &mut ManifestBuilder) -> Result<Dataset> {
    builder.input(path)?;
    read_labeled_csv(open(path)?, header)
}

/// Known covariance from `--cov known:PATH`, otherwise the pooled estimate.
fn covariance(
    cov: &CovArgs,
    train: &Dataset,
    builder: &mut ManifestBuilder,
) -> Result<CovarianceModel> {
    match parse_cov(&cov.cov)? {
        CovChoice::Known(path) => load_known(&path, train.dim(), builder),
        CovChoice::Estimate => mle_pooled_covariance(train),
    }
}

fn threshold(
    cov: &CovArgs,
    model: &CovarianceModel,
    train: &Dataset,
    alpha: f64,
) -> Result<Threshold> {
    let (l, p) = (train.n_classes(), train.dim());
    match (model.mode(), ThresholdPolicy::from(cov.threshold)) {
        (CovarianceMode::Known, _) => Threshold::known(l, p, alpha),
        (CovarianceMode::Estimated, ThresholdPolicy::Inflated) => {
            Threshold::estimated(l, p, train.len(), alpha)
        }
        (CovarianceMode::Estimated, ThresholdPolicy::Plain) => {
            Threshold::estimated_uninflated(l, p, alpha)
        }
    }
}

fn run_selection(
    train: &Dataset,
    cov: &CovarianceModel,
    threshold: &Threshold,
) -> Result<SelectionOutcome> {
    let s = summarize(train)?;
    Ok(select(
        selection_statistics(&s, cov.variances().view())?,
        threshold,
    ))
}

fn describe(o: &SelectionOutcome, p: usize) -> String {
    let t = o.threshold();
    let kappa = t.kappa.map_or("n/a".to_string(), |k| format!("{k:.6}"));
    format!(
        "selected {} of {p} features; threshold {:.6} ({:?}), kappa {kappa}",
        o.selected_count(),
        t.value,
        t.kind
    )
}

#[derive(Serialize)]
struct SelectConfig<'a> {
    alpha: f64,
    cov: &'a str,
    threshold: ThresholdPolicy,
    header: bool,
}

fn cmd_select(a: SelectArgs) -> Result<()> {
    let mut b = ManifestBuilder::start("select", 0);
    b.config(&SelectConfig {
        alpha: a.alpha,
        cov: &a.cov.cov,
        threshold: a.cov.threshold.into(),
        header: a.header,
    })?;
    let train = load_labeled(&a.train, a.header, &mut b)?;
    train.require_all_classes()?;
    let cov = covariance(&a.cov, &train, &mut b)?;
    let outcome = run_selection(&train, &cov, &threshold(&a.cov, &cov, &train, a.alpha)?)?;
    eprintln!("{}", describe(&outcome, train.dim()));
    let json = outcome.to_json()?;
    emit(a.out.as_deref(), |w| Ok(writeln!(w, "{json}")?))?;
    let mut artifacts: Vec<PathBuf> = a.out.into_iter().collect();
    if let Some(path) = a.dump_cov {
        let mut w = create(&path)?;
        write_matrix_csv(&mut w, &cov.matrix())?;
        w.flush()?;
        artifacts.push(path);
    }
    finish(&b, artifacts)
}

/// Mask from a selection JSON or a plain JSON list of 0-based indices.
fn load_mask(path: &Path, p: usize, builder: &mut ManifestBuilder) -> Result<Vec<bool>> {
    builder.input(path)?;
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let list = match &value {
        serde_json::Value::Array(_) => value.clone(),
        serde_json::Value::Object(o) => o
            .get("selected")
            .cloned()
            .ok_or_else(|| Error::Configuration("mask object has no 'selected' field".into()))?,
        _ => {
            return Err(Error::Configuration(
                "mask must be a JSON list or selection object".into(),
            ))
        }
    };
    let idx: Vec<usize> = serde_json::from_value(list)
        .map_err(|e| Error::Configuration(format!("mask indices: {e}")))?;
    let mut mask = vec![false; p];
    for j in idx {
        if j >= p {
            return Err(Error::Configuration(format!(
                "mask index {j} out of range for p = {p}"
            )));
        }
        mask[j] = true;
    }
    Ok(mask)
}

#[derive(Serialize)]
struct ClassifyConfig<'a> {
    alpha: f64,
    cov: &'a str,
    threshold: ThresholdPolicy,
    header: bool,
    query_labeled: bool,
    fallback: bool,
    emit_scores: bool,
}

fn cmd_classify(a: ClassifyArgs) -> Result<()> {
    let seed = seed_of(&a.seed);
    let mut b = ManifestBuilder::start("classify", seed);
    b.config(&ClassifyConfig {
        alpha: a.alpha,
        cov: &a.cov.cov,
        threshold: a.cov.threshold.into(),
        header: a.header,
        query_labeled: a.query_labeled,
        fallback: a.fallback,
        emit_scores: a.emit_scores,
    })?;
    let train = load_labeled(&a.train, a.header, &mut b)?;
    train.require_all_classes()?;
    b.input(&a.query)?;
    let (queries, truth) = if a.query_labeled {
        let d = read_labeled_csv(open(&a.query)?, a.header)?;
        if d.n_classes() > train.n_classes() {
            return Err(Error::Configuration(format!(
                "query labels reach {} but training has {} classes",
                d.n_classes(),
                train.n_classes()
            )));
        }
        (d.features().clone(), Some(d.labels().to_vec()))
    } else {
        (read_matrix_csv(open(&a.query)?, a.header)?, None)
    };
    if queries.ncols() != train.dim() {
        return Err(Error::Configuration(format!(
            "query has {} features, training has {}",
            queries.ncols(),
            train.dim()
        )));
    }
    let cov = covariance(&a.cov, &train, &mut b)?;
    let mask = match &a.mask {
        Some(path) => load_mask(path, train.dim(), &mut b)?,
        None => {
            let o = run_selection(&train, &cov, &threshold(&a.cov, &cov, &train, a.alpha)?)?;
            eprintln!("{}", describe(&o, train.dim()));
            o.into_mask()
        }
    };
    let model = classifier::fit(
        &train,
        &mask,
        &cov,
        FitOptions {
            allow_fallback: a.fallback,
            seed,
        },
    )?;
    let preds = model.classify_all(&queries)?;
    let l = train.n_classes();
    emit(a.out.as_deref(), |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut head = vec![
            "index".to_string(),
            "label".into(),
            "tie".into(),
            "fallback".into(),
        ];
        if truth.is_some() {
            head.push("true_label".into());
        }
        if a.emit_scores {
            head.extend((1..=l).map(|c| format!("score_{c}")));
        }
        csv.write_record(&head)?;
        for (i, p) in preds.iter().enumerate() {
            let mut rec = vec![
                (i + 1).to_string(),
                (p.label + 1).to_string(),
                p.tie.to_string(),
                p.fallback.to_string(),
            ];
            if let Some(t) = &truth {
                rec.push((t[i] + 1).to_string());
            }
            if a.emit_scores {
                rec.extend(p.scores.iter().map(|s| s.to_string()));
                rec.extend(std::iter::repeat_n(String::new(), l - p.scores.len()));
            }
            csv.write_record(&rec)?;
        }
        csv.flush()?;
        Ok(())
    })?;
    if let Some(t) = &truth {
        let wrong = preds.iter().zip(t).filter(|(p, &t)| p.label != t).count();
        eprintln!(
            "misclassified {wrong} of {} ({:.4})",
            t.len(),
            wrong as f64 / t.len().max(1) as f64
        );
    }
    finish(&b, a.out.into_iter().collect())
}

fn cmd_split_eval(a: SplitArgs) -> Result<()> {
    let seed = seed_of(&a.seed);
    let mut b = ManifestBuilder::start("split-eval", seed);
    let data = load_labeled(&a.data, a.header, &mut b)?;
    let cov = match parse_cov(&a.cov.cov)? {
        CovChoice::Known(path) => CovarianceSource::Known(load_known(&path, data.dim(), &mut b)?),
        CovChoice::Estimate => CovarianceSource::Estimate,
    };
    let config = SplitConfig {
        test_fraction: a.fraction,
        repeats: a.repeats,
        alpha: a.alpha,
        cov,
        threshold: a.cov.threshold.into(),
        allow_fallback: a.fallback,
        seed,
    };
    b.config(&serde_json::json!({
        "test_fraction": a.fraction,
        "repeats": a.repeats,
        "alpha": a.alpha,
        "cov": a.cov.cov,
        "threshold": ThresholdPolicy::from(a.cov.threshold),
        "fallback": a.fallback,
        "header": a.header,
    }))?;
    let report = sim::split_evaluate(&data, &config)?;
    eprintln!(
        "L = {}, N_train = {}, N_test = {}, mean p1_hat = {:.2}, error = {:.4} ({:.4})",
        report.n_classes, report.n_train, report.n_test, report.p1_hat, report.error, report.se
    );
    emit(a.out.as_deref(), |w| sim::write_split_csv(w, &report))?;
    finish(&b, a.out.into_iter().collect())
}

fn series_path(out: &Path, p1: usize, l: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or("table".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.p1-{p1}.L-{l}.csv"))
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| Error::Configuration(format!("cannot read {}: {e}", a.config.display())))?;
    let mut grid = GridConfig::from_json(&text)?;
    if a.full_scale {
        grid = grid.full_scale();
    }
    if let Some(s) = a.seed.seed {
        grid.seed = s;
    }
    let mut b = ManifestBuilder::start("simulate", grid.seed);
    b.input(&a.config)?.config(&grid)?;
    let report = sim::run_grid(&grid, a.records)?;
    let mut artifacts = vec![a.out.clone()];
    let mut w = create(&a.out)?;
    sim::write_table_csv(&mut w, &report)?;
    w.flush()?;
    for &p1 in &grid.p1_list {
        for &l in &grid.l_list {
            let path = series_path(&a.out, p1, l);
            let mut w = create(&path)?;
            sim::write_series_csv(&mut w, &report, p1, l)?;
            w.flush()?;
            artifacts.push(path);
        }
    }
    if a.records {
        let path = a.out.with_extension("records.json");
        std::fs::write(&path, serde_json::to_string(&report.cells)? + "\n")?;
        artifacts.push(path);
    }
    let failed = report.failed_cells();
    eprintln!("{} cells, {failed} flagged", report.cells.len());
    finish(&b, artifacts)
}

fn cmd_theory(a: TheoryArgs) -> Result<()> {
    let params = TheoryParams {
        p: a.p,
        p1: a.p1,
        n: a.n,
        n_classes: a.classes,
        alpha: a.alpha,
        c1: a.c1,
        eig_min: a.eig_min,
        eig_max: a.eig_max,
        fano_delta_sq: a.fano_delta_sq,
        cutoffs: RegimeCutoffs {
            eta1: a.eta1_cutoff,
            eta2: a.eta2_cutoff,
        },
    };
    let mut b = ManifestBuilder::start("theory", 0);
    b.config(&params)?;
    let report = theory_report(&params)?;
    let json = serde_json::to_string_pretty(&report)?;
    emit(a.out.as_deref(), |w| Ok(writeln!(w, "{json}")?))?;
    finish(&b, a.out.into_iter().collect())
}
