//! Monte-Carlo runs, aggregation and result files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use ttmr_core::report::FitReport;
use ttmr_core::{fit, mlp, Matrix, MetricReport, Samples, Split};

use crate::config::{ExperimentConfig, ExperimentKind, MlpSpec, TtSpec};
use crate::data::DataSource;
use crate::error::{CliError, Result};

pub const SPLITS: [&str; 3] = ["train", "val", "test"];
pub const METRICS: [&str; 4] = ["mse", "score", "spcc", "r2"];

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses one per core.
    pub threads: Option<usize>,
    /// Overrides the config's output directory.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Tt(TtSpec),
    Mlp(MlpSpec),
}

impl ModelSpec {
    pub fn label(&self, inputs: usize) -> String {
        match self {
            Self::Tt(t) => t.label(),
            Self::Mlp(m) => m.label(inputs),
        }
    }

    pub fn param_count(&self, inputs: usize) -> Result<usize> {
        match self {
            Self::Tt(t) => t.param_count(inputs),
            Self::Mlp(m) => Ok(m.param_count(inputs)),
        }
    }

    /// Fits one model and scores it on every split.
    pub fn fit(&self, split: &Split, seed: u64) -> Result<([MetricReport; 3], FitReport)> {
        let inputs = split.train.x.cols();
        match self {
            Self::Tt(t) => {
                let (model, report) = fit(&split.train, &split.val, &t.train_config(inputs, seed)?)?;
                Ok((score_splits(split, |x| model.predict(x))?, report))
            }
            Self::Mlp(m) => {
                let (net, report) = mlp::train(&split.train, &split.val, &m.mlp_config(seed))?;
                Ok((score_splits(split, |x| net.predict(x))?, report))
            }
        }
    }
}

fn score_splits(split: &Split, predict: impl Fn(&Matrix) -> ttmr_core::Result<Vec<f64>>) -> Result<[MetricReport; 3]> {
    let score = |s: &Samples| -> Result<MetricReport> { Ok(MetricReport::compute(&s.y, &predict(&s.x)?)?) };
    Ok([score(&split.train)?, score(&split.val)?, score(&split.test)?])
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    /// Train, validation and test metrics.
    pub metrics: [MetricReport; 3],
    pub report: FitReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    /// Mean and sample standard deviation. The mean is accumulated as an
    /// offset from the first value, so identical inputs reproduce it exactly.
    pub fn of(values: &[f64]) -> Self {
        let Some(&first) = values.first() else {
            return Self { mean: f64::NAN, sd: f64::NAN };
        };
        let n = values.len() as f64;
        let mean = first + values.iter().map(|v| v - first).sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitSummary {
    pub mse: Stat,
    pub score: Stat,
    pub spcc: Stat,
    pub r_squared: Stat,
    pub fit_slope: Stat,
    pub fit_intercept: Stat,
}

impl SplitSummary {
    fn of(reports: &[MetricReport]) -> Self {
        let stat = |f: fn(&MetricReport) -> f64| Stat::of(&reports.iter().map(f).collect::<Vec<_>>());
        Self {
            mse: stat(|r| r.mse),
            score: stat(|r| r.score),
            spcc: stat(|r| r.spcc),
            r_squared: stat(|r| r.r_squared),
            fit_slope: stat(|r| r.fit_slope),
            fit_intercept: stat(|r| r.fit_intercept),
        }
    }

    pub fn metric(&self, name: &str) -> Stat {
        match name {
            "mse" => self.mse,
            "score" => self.score,
            "spcc" => self.spcc,
            _ => self.r_squared,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelResult {
    pub label: String,
    pub coeffs: usize,
    pub trials: Vec<TrialResult>,
    /// Trial index and error message of each aborted trial.
    pub aborted: Vec<(usize, String)>,
    pub summary: [SplitSummary; 3],
    pub wall_time_secs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub kind: ExperimentKind,
    pub trials: usize,
    pub models: Vec<ModelResult>,
    pub warnings: Vec<String>,
    pub wall_time_secs: f64,
    pub out: Option<PathBuf>,
}

impl RunResult {
    pub fn model(&self, label: &str) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.label == label)
    }
}

/// Seed for a model's initialization, kept apart from the data seed so a
/// planted teacher is never reused as the starting point.
pub fn init_seed(trial_seed: u64) -> u64 {
    trial_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0xd1b5_4a32_d192_ed03
}

pub fn models(cfg: &ExperimentConfig) -> Vec<ModelSpec> {
    cfg.tt.iter().cloned().map(ModelSpec::Tt).chain(cfg.mlp.iter().cloned().map(ModelSpec::Mlp)).collect()
}

/// Runs every configured model over `cfg.trials` seeds and writes result
/// files when an output directory is set.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunResult> {
    cfg.validate()?;
    let start = Instant::now();
    let source = DataSource::prepare(cfg)?;
    let inputs = source.inputs();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;

    let mut results = Vec::new();
    for spec in models(cfg) {
        let label = spec.label(inputs);
        let coeffs = spec.param_count(inputs)?;
        let outcomes: Vec<(usize, f64, std::result::Result<TrialResult, String>)> = pool.install(|| {
            (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let t0 = Instant::now();
                    let seed = cfg.seed.wrapping_add(trial as u64);
                    let outcome = source
                        .trial(seed)
                        .and_then(|(split, _)| spec.fit(&split, init_seed(seed)))
                        .map(|(metrics, report)| TrialResult { trial, seed, metrics, report })
                        .map_err(|e| e.to_string());
                    (trial, t0.elapsed().as_secs_f64(), outcome)
                })
                .collect()
        });
        let mut trials = Vec::new();
        let mut aborted = Vec::new();
        let mut wall = Vec::new();
        for (trial, secs, outcome) in outcomes {
            wall.push(secs);
            match outcome {
                Ok(t) => trials.push(t),
                Err(e) => {
                    log::warn!("{label}: trial {trial} aborted: {e}");
                    aborted.push((trial, e));
                }
            }
        }
        if aborted.len() * 10 > cfg.trials {
            return Err(CliError::TooManyAborts { model: label, aborted: aborted.len(), trials: cfg.trials });
        }
        let summary = std::array::from_fn(|s| {
            SplitSummary::of(&trials.iter().map(|t| t.metrics[s]).collect::<Vec<_>>())
        });
        results.push(ModelResult { label, coeffs, trials, aborted, summary, wall_time_secs: wall });
    }

    let mut warnings = Vec::new();
    for (t, m) in cfg.tt.iter().zip(&cfg.mlp) {
        let (a, b) = (t.param_count(inputs)?, m.param_count(inputs));
        if a.abs_diff(b) as f64 > 0.05 * a.max(b) as f64 {
            let w = format!("coefficient budgets differ by more than 5%: {} has {a}, {} has {b}", t.label(), m.label(inputs));
            log::warn!("{w}");
            warnings.push(w);
        }
    }

    let mut result = RunResult {
        kind: cfg.kind,
        trials: cfg.trials,
        models: results,
        warnings,
        wall_time_secs: start.elapsed().as_secs_f64(),
        out: opts.out.clone().or_else(|| cfg.out.clone()),
    };
    if let Some(dir) = result.out.clone() {
        write_outputs(cfg, &mut result, &dir, opts.threads)?;
    }
    Ok(result)
}

/// One comparison row: the mean of `metric` on `split` for every model.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub split: &'static str,
    pub metric: &'static str,
    pub values: Vec<f64>,
    pub winner: String,
}

pub fn compare_table(result: &RunResult) -> Vec<CompareRow> {
    let mut rows = Vec::new();
    for (s, split) in SPLITS.iter().enumerate() {
        for metric in METRICS {
            let values: Vec<f64> = result.models.iter().map(|m| m.summary[s].metric(metric).mean).collect();
            let better = |a: f64, b: f64| if metric == "mse" { a < b } else { a > b };
            let mut best: Option<usize> = None;
            for (i, &v) in values.iter().enumerate() {
                if v.is_finite() && best.is_none_or(|b| better(v, values[b])) {
                    best = Some(i);
                }
            }
            let winner = best.map(|i| result.models[i].label.clone()).unwrap_or_default();
            rows.push(CompareRow { split, metric, values, winner });
        }
    }
    rows
}

/// Runs all models on identical trial data and writes `compare.csv` with
/// the winner of each split/metric.
pub fn compare(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(RunResult, Vec<CompareRow>)> {
    let result = run(cfg, opts)?;
    let rows = compare_table(&result);
    if let Some(dir) = &result.out {
        write_file(&dir.join("compare.csv"), compare_csv(&result, &rows).as_bytes())?;
    }
    Ok((result, rows))
}

pub fn compare_csv(result: &RunResult, rows: &[CompareRow]) -> String {
    let mut s = String::from("split,metric");
    for m in &result.models {
        let _ = write!(s, ",{}", m.label);
    }
    s.push_str(",winner\n");
    for r in rows {
        let _ = write!(s, "{},{}", r.split, r.metric);
        for v in &r.values {
            let _ = write!(s, ",{v:.6e}");
        }
        let _ = writeln!(s, ",{}", r.winner);
    }
    s
}

/// One row per model and split; numbers in fixed `{:.6e}` form so that
/// identical runs give identical bytes.
pub fn summary_csv(result: &RunResult) -> String {
    let mut s = String::from(
        "model,no. of coeffs.,split,mse_mean,mse_sd,score_mean,score_sd,spcc_mean,spcc_sd,r2_mean,r2_sd,\
         fit_m_mean,fit_m_sd,fit_b_mean,fit_b_sd,trials,aborted\n",
    );
    for m in &result.models {
        for (i, split) in SPLITS.iter().enumerate() {
            let x = &m.summary[i];
            let _ = write!(s, "{},{},{split}", m.label, m.coeffs);
            for st in [x.mse, x.score, x.spcc, x.r_squared, x.fit_slope, x.fit_intercept] {
                let _ = write!(s, ",{:.6e},{:.6e}", st.mean, st.sd);
            }
            let _ = writeln!(s, ",{},{}", m.trials.len(), m.aborted.len());
        }
    }
    s
}

/// Plain-text table in the layout MSE / score / SPCC / R² by split.
pub fn summary_table(m: &ModelResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}: no. of coeffs. = {}", m.label, m.coeffs);
    let _ = writeln!(s, "{} trials, {} aborted", m.trials.len() + m.aborted.len(), m.aborted.len());
    let _ = writeln!(s, "{:<6} {:>24} {:>24} {:>24} {:>24}", "", "MSE", "score", "SPCC", "R2");
    for (i, split) in SPLITS.iter().enumerate() {
        let x = &m.summary[i];
        let _ = write!(s, "{split:<6}");
        for st in [x.mse, x.score, x.spcc, x.r_squared] {
            let _ = write!(s, " {:>24}", format!("{:.4e} ± {:.1e}", st.mean, st.sd));
        }
        s.push('\n');
    }
    s
}

/// Mean train/validation loss per sweep or epoch across trials.
pub fn convergence_csv(m: &ModelResult) -> String {
    let len = m.trials.iter().map(|t| t.report.epochs.len()).max().unwrap_or(0);
    let mut s = String::from("epoch,train_mse_mean,val_mse_mean,trials\n");
    for e in 0..len {
        let losses: Vec<_> = m.trials.iter().filter_map(|t| t.report.epochs.get(e)).collect();
        let train = Stat::of(&losses.iter().map(|l| l.train_mse).collect::<Vec<_>>());
        let val = Stat::of(&losses.iter().map(|l| l.val_mse).collect::<Vec<_>>());
        let _ = writeln!(s, "{},{:.6e},{:.6e},{}", e + 1, train.mean, val.mean, losses.len());
    }
    s
}

#[derive(Serialize)]
struct ManifestModel<'a> {
    label: &'a str,
    coeffs: usize,
    completed: usize,
    aborted: &'a [(usize, String)],
    trial_wall_time_secs: &'a [f64],
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    config_sha256: String,
    summary_sha256: String,
    threads: Option<usize>,
    wall_time_secs: f64,
    models: Vec<ManifestModel<'a>>,
    warnings: &'a [String],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn write_outputs(cfg: &ExperimentConfig, result: &mut RunResult, dir: &Path, threads: Option<usize>) -> Result<()> {
    let summary = summary_csv(result);
    write_file(&dir.join("summary.csv"), summary.as_bytes())?;
    for m in &result.models {
        write_file(&dir.join(format!("table_{}.txt", m.label)), summary_table(m).as_bytes())?;
        write_file(&dir.join(format!("convergence_{}.csv", m.label)), convergence_csv(m).as_bytes())?;
        for t in &m.trials {
            let mut buf = Vec::new();
            t.report.write_trace_csv(&mut buf)?;
            write_file(&dir.join("traces").join(&m.label).join(format!("trial_{:04}.csv", t.trial)), &buf)?;
        }
    }
    let config_text = toml::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        config_sha256: sha256_hex(config_text.as_bytes()),
        summary_sha256: sha256_hex(summary.as_bytes()),
        threads,
        wall_time_secs: result.wall_time_secs,
        models: result
            .models
            .iter()
            .map(|m| ManifestModel {
                label: &m.label,
                coeffs: m.coeffs,
                completed: m.trials.len(),
                aborted: &m.aborted,
                trial_wall_time_secs: &m.wall_time_secs,
            })
            .collect(),
        warnings: &result.warnings,
    };
    write_file(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(())
}
