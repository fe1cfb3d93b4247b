//! Experiment configuration: a JSON file, command-line overrides on top, and
//! the fully resolved record echoed into every run's manifest.

use crate::error::CliError;
use cvmaxcut::variational::TRAINING_MARGIN;
use cvmaxcut::{NgKind, TrainingConfig, DEFAULT_MARGIN};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const TRAINING_CUTOFF: usize = 9;
pub const VERIFICATION_CUTOFF: usize = 17;
pub const DEFAULT_OUT_DIR: &str = "out";
pub const DEFAULT_STAR_SIZE: usize = 4;

/// One graph path or a list of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphPaths {
    One(PathBuf),
    Many(Vec<PathBuf>),
}

impl GraphPaths {
    pub fn paths(&self) -> Vec<&Path> {
        match self {
            GraphPaths::One(p) => vec![p.as_path()],
            GraphPaths::Many(ps) => ps.iter().map(PathBuf::as_path).collect(),
        }
    }
}

/// Config file contents. Every key is optional; unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub graph: Option<GraphPaths>,
    pub ng_kind: Option<NgKind>,
    pub use_embedding: Option<bool>,
    pub n_layers: Option<usize>,
    pub cutoff: Option<usize>,
    pub learning_rate: Option<f64>,
    pub reg_strength: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub fd_step: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub margin: Option<f64>,
    pub star_size: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::File { path: path.to_path_buf(), message: format!("cannot read config: {e}") })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::File { path: path.to_path_buf(), message: format!("invalid config: {e}") })
    }

    /// Fills every key of `self` that `other` sets.
    pub fn overridden_by(self, other: ConfigFile) -> ConfigFile {
        ConfigFile {
            graph: other.graph.or(self.graph),
            ng_kind: other.ng_kind.or(self.ng_kind),
            use_embedding: other.use_embedding.or(self.use_embedding),
            n_layers: other.n_layers.or(self.n_layers),
            cutoff: other.cutoff.or(self.cutoff),
            learning_rate: other.learning_rate.or(self.learning_rate),
            reg_strength: other.reg_strength.or(self.reg_strength),
            steps: other.steps.or(self.steps),
            seed: other.seed.or(self.seed),
            fd_step: other.fd_step.or(self.fd_step),
            out_dir: other.out_dir.or(self.out_dir),
            margin: other.margin.or(self.margin),
            star_size: other.star_size.or(self.star_size),
        }
    }
}

/// Which command a config is resolved for; commands differ in their
/// cutoff and margin defaults.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Training,
    Verification,
}

/// Every option with defaults materialized. Serializes to a valid config file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub graph: Option<GraphPaths>,
    pub ng_kind: NgKind,
    pub use_embedding: bool,
    pub n_layers: usize,
    pub cutoff: usize,
    pub learning_rate: f64,
    pub reg_strength: f64,
    pub steps: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub out_dir: PathBuf,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub star_size: Option<usize>,
}

impl ResolvedConfig {
    pub fn resolve(file: ConfigFile, purpose: Purpose) -> Result<Self, CliError> {
        let defaults = TrainingConfig::<f64>::default();
        let (cutoff, margin) = match purpose {
            Purpose::Training => (TRAINING_CUTOFF, TRAINING_MARGIN),
            Purpose::Verification => (VERIFICATION_CUTOFF, DEFAULT_MARGIN),
        };
        let cfg = ResolvedConfig {
            graph: file.graph,
            ng_kind: file.ng_kind.unwrap_or(NgKind::None),
            use_embedding: file.use_embedding.unwrap_or(true),
            n_layers: file.n_layers.unwrap_or(1),
            cutoff: file.cutoff.unwrap_or(cutoff),
            learning_rate: file.learning_rate.unwrap_or(defaults.learning_rate),
            reg_strength: file.reg_strength.unwrap_or(defaults.reg_strength),
            steps: file.steps.unwrap_or(defaults.steps),
            seed: file.seed.unwrap_or(defaults.seed),
            fd_step: file.fd_step.unwrap_or(defaults.fd_step),
            out_dir: file.out_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            margin: file.margin.unwrap_or(margin),
            star_size: file.star_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |field, message: String| Err(CliError::Field { field, message });
        if !(1..=2).contains(&self.n_layers) {
            return bad("n_layers", format!("must be 1 or 2, got {}", self.n_layers));
        }
        if self.cutoff < 2 {
            return bad("cutoff", format!("must be at least 2, got {}", self.cutoff));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", format!("must be positive, got {}", self.learning_rate));
        }
        if !(self.reg_strength >= 0.0 && self.reg_strength.is_finite()) {
            return bad("reg_strength", format!("must be non-negative, got {}", self.reg_strength));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return bad("fd_step", format!("must be positive, got {}", self.fd_step));
        }
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return bad("margin", format!("must lie in (0, 1), got {}", self.margin));
        }
        if let Some(n) = self.star_size {
            if n < 3 {
                return bad("star_size", format!("must be at least 3, got {n}"));
            }
        }
        if let Some(g) = &self.graph {
            if g.paths().is_empty() {
                return bad("graph", "empty list of graph files".into());
            }
            if let Some(p) = g.paths().into_iter().find(|p| !p.is_file()) {
                return bad("graph", format!("file {} does not exist", p.display()));
            }
        }
        Ok(())
    }

    pub fn training(&self) -> TrainingConfig<f64> {
        TrainingConfig {
            learning_rate: self.learning_rate,
            reg_strength: self.reg_strength,
            steps: self.steps,
            seed: self.seed,
            fd_step: self.fd_step,
        }
    }

    /// The single graph path a command needs.
    pub fn single_graph(&self) -> Result<&Path, CliError> {
        match &self.graph {
            None => Err(CliError::Field { field: "graph", message: "no graph file given".into() }),
            Some(g) => match g.paths().as_slice() {
                [p] => Ok(p),
                ps => Err(CliError::Field { field: "graph", message: format!("expected one graph file, got {}", ps.len()) }),
            },
        }
    }
}
