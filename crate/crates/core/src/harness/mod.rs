//! Configuration, ensemble orchestration, persistence and the canned
//! experiment suite behind the `kspde` command line.

mod config;
mod experiments;

pub use config::{ExperimentConfig, FitBlock, InitialDatum, ModelBlock, NoiseBlock, ResolvedConfig, SolverBlock};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One pass/fail comparison of a measured quantity against its bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
    pub stderr: f64,
}

impl Check {
    /// Passes iff `measured ≤ bound`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64, stderr: f64) -> Self {
        Self { name: name.into(), pass: measured <= bound, measured, bound, stderr }
    }

    /// Passes iff `measured ≥ bound`.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64, stderr: f64) -> Self {
        Self { name: name.into(), pass: measured >= bound, measured, bound, stderr }
    }

    pub fn flag(name: impl Into<String>, pass: bool, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), pass, measured, bound, stderr: 0.0 }
    }
}

/// Per-experiment report; the headline fields repeat the first check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
    pub stderr: f64,
    pub config_hash: String,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<PathBuf>,
    pub report: Report,
}

impl RunRecord {
    pub fn pass(&self) -> bool {
        self.report.pass
    }
}

/// Output directory of one run; remembers every file it hands out.
pub(crate) struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub(crate) fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path)?;
        self.files.push(path);
        Ok(BufWriter::new(file))
    }

    pub(crate) fn path(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        path
    }

    pub(crate) fn json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

pub struct ExperimentInfo {
    pub name: &'static str,
    pub doc: &'static str,
}

/// Names and one-line descriptions of the canned experiments.
pub fn list_experiments() -> Vec<ExperimentInfo> {
    experiments::REGISTRY.iter().map(|e| ExperimentInfo { name: e.name, doc: e.doc }).collect()
}

/// The canonical configuration of a canned experiment.
pub fn canonical_config(name: &str) -> Result<ResolvedConfig> {
    let entry = experiments::lookup(name)?;
    Ok((entry.canonical)())
}

/// Worker count: `KSPDE_THREADS` if set to a positive integer, else rayon's default.
pub fn worker_threads() -> usize {
    std::env::var("KSPDE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Maps `f` over the members in parallel; results come back in member order.
pub(crate) fn ensemble<R: Send>(seeds: &[u64], f: impl Fn(usize, u64) -> Result<R> + Sync) -> Result<Vec<R>> {
    seeds
        .par_iter()
        .enumerate()
        .map(|(member, &seed)| f(member, seed).map_err(|e| Error::Member { member, seed, source: Box::new(e) }))
        .collect()
}

/// Runs a resolved configuration, writing `run_config.json`, the plot data and
/// `report.json` under `out_dir`.
pub fn run_resolved(config: &ResolvedConfig, out_dir: &Path) -> Result<RunRecord> {
    config.validate()?;
    let entry = experiments::lookup(&config.experiment)?;
    let hash = config.hash();
    let start = Instant::now();
    let mut outputs = Outputs::new(out_dir.to_path_buf())?;
    outputs.json("run_config.json", config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let checks = pool.install(|| (entry.run)(config, &mut outputs))?;
    let head = checks.first().cloned().ok_or_else(|| Error::Config("experiment produced no verdicts".into()))?;
    let report = Report {
        name: config.experiment.clone(),
        pass: checks.iter().all(|c| c.pass),
        measured: head.measured,
        bound: head.bound,
        stderr: head.stderr,
        config_hash: hash.clone(),
        checks,
    };
    outputs.json("report.json", &report)?;
    Ok(RunRecord {
        experiment: config.experiment.clone(),
        config_hash: hash,
        seeds: config.member_seeds(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs: outputs.files,
        report,
    })
}

/// Resolves `file` over the canonical configuration of `name` and runs it.
/// The output directory is `out_dir`, else the file's `output_dir`, else `kspde-out/<name>`.
pub fn run_experiment(name: &str, file: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunRecord> {
    let config = canonical_config(name)?.overlay(file)?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| file.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("kspde-out").join(name));
    run_resolved(&config, &dir)
}

/// Result of a standalone exponent fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub summary: crate::model::FitSummary,
    /// Closed-form `(α, β)` of the fitted model.
    pub closed_form: (f64, f64),
    pub outputs: Vec<PathBuf>,
}

/// Fits `(α, β)` for the file's model (default: the `nondegeneracy-fit` model)
/// and writes `fit.csv` and `fit.json` under `out_dir`.
pub fn fit_exponents_from_config(file: &ExperimentConfig, out_dir: &Path) -> Result<FitOutcome> {
    let base = canonical_config("nondegeneracy-fit")?;
    let model = file.model.clone().unwrap_or(base.model);
    model.build()?;
    let fit = file.fit.clone().unwrap_or_else(|| FitBlock::default_for(&model));
    let mut outputs = Outputs::new(out_dir.to_path_buf())?;
    let (summary, closed_form) = experiments::fit_model(&model, &fit, &mut outputs, "fit")?;
    Ok(FitOutcome { summary, closed_form, outputs: outputs.files })
}
