//! Artifact writers. Everything except the `metadata` field of summaries is a
//! pure function of the resolved config, so reruns are byte-identical.

use crate::error::CliError;
use cvmaxcut::{OutcomeDistribution, TrainingTrace};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Outcomes below this probability are left out of distribution files; their
/// total is reported as `omitted_mass`.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Write { path: root.to_path_buf(), source })?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_json<S: Serialize + ?Sized>(&self, name: &str, value: &S) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).expect("artifact types serialize");
        text.push('\n');
        std::fs::write(&path, text).map_err(|source| CliError::Write { path: path.clone(), source })?;
        Ok(path)
    }

    fn csv_writer(&self, name: &str) -> Result<(csv::Writer<std::fs::File>, PathBuf), CliError> {
        let path = self.path(name);
        let w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        Ok((w, path))
    }

    /// `step,loss,regularized_loss`, one row per trace entry.
    pub fn write_loss_csv(&self, name: &str, trace: &TrainingTrace<f64>) -> Result<PathBuf, CliError> {
        let (mut w, path) = self.csv_writer(name)?;
        w.write_record(["step", "loss", "regularized_loss"]).map_err(|e| csv_error(&path, e))?;
        for (step, (l, r)) in trace.losses.iter().zip(&trace.regularized_losses).enumerate() {
            w.serialize((step, l, r)).map_err(|e| csv_error(&path, e))?;
        }
        w.flush().map_err(|source| CliError::Write { path: path.clone(), source })?;
        Ok(path)
    }

    /// `step,name,value`, one row per parameter per trace entry.
    pub fn write_params_csv(&self, name: &str, trace: &TrainingTrace<f64>) -> Result<PathBuf, CliError> {
        let (mut w, path) = self.csv_writer(name)?;
        w.write_record(["step", "name", "value"]).map_err(|e| csv_error(&path, e))?;
        let names = trace.final_params().names();
        for (step, p) in trace.params.iter().enumerate() {
            for (n, v) in names.iter().zip(p.values()) {
                w.serialize((step, n, v)).map_err(|e| csv_error(&path, e))?;
            }
        }
        w.flush().map_err(|source| CliError::Write { path: path.clone(), source })?;
        Ok(path)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Write { path: path.to_path_buf(), source: std::io::Error::other(e.to_string()) }
}

#[derive(Debug, Serialize)]
pub struct OutcomeEntry {
    pub outcome: Vec<usize>,
    pub probability: f64,
}

#[derive(Debug, Serialize)]
pub struct DistributionFile {
    pub n_modes: usize,
    pub cutoff: usize,
    pub leakage: f64,
    pub omitted_mass: f64,
    pub outcomes: Vec<OutcomeEntry>,
}

impl DistributionFile {
    pub fn new(d: &OutcomeDistribution<f64>) -> Self {
        let mut omitted = 0.0;
        let mut outcomes = Vec::new();
        for (counts, p) in d.iter() {
            if p >= PROBABILITY_FLOOR {
                outcomes.push(OutcomeEntry { outcome: counts, probability: p });
            } else {
                omitted += p;
            }
        }
        Self { n_modes: d.n_modes(), cutoff: d.cutoff(), leakage: d.leakage(), omitted_mass: omitted, outcomes }
    }
}

/// The only non-reproducible part of a run.
#[derive(Debug, Serialize)]
pub struct Metadata {
    pub timestamp_unix: u64,
    pub elapsed_seconds: f64,
}

impl Metadata {
    pub fn now(elapsed_seconds: f64) -> Self {
        let timestamp_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self { timestamp_unix, elapsed_seconds }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a C,
}

impl<'a, C: Serialize> Manifest<'a, C> {
    pub fn new(command: &'a str, config: &'a C) -> Self {
        Self { command, version: env!("CARGO_PKG_VERSION"), config }
    }
}
