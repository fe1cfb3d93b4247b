//! Command line driver: `solve`, `oracle`, `embed-check` and `ml`.
//!
//! Exit codes are 0 on success, 2 for configuration errors, 3 for numerical
//! failures and 4 when a problem exceeds the size guards.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use clap::{Args, Parser, Subcommand};
use config::{ConfigFile, GraphPaths, Purpose, ResolvedConfig};
use cvmaxcut::NgKind;
use error::CliError;
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "cvmaxcut", version, about = "Variational Max-Cut on a simulated photonic circuit")]
pub struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
    /// Output directory for all artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the circuit on one graph.
    Solve(TrainArgs),
    /// Exhaustive Max-Cut of a graph.
    Oracle(GraphArg),
    /// Check the graph embedding against its Gaussian oracles.
    EmbedCheck(EmbedArgs),
    /// Train one circuit on a set of graphs and report per-graph outputs.
    Ml(MlArgs),
}

#[derive(Debug, Args)]
pub struct GraphArg {
    /// Graph JSON file.
    #[arg(long, value_name = "PATH")]
    pub graph: Option<PathBuf>,
}

fn parse_ng_kind(s: &str) -> Result<NgKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown non-Gaussian kind `{s}` (none, kerr, cubic_phase)"))
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    #[arg(long, value_parser = parse_ng_kind)]
    pub ng_kind: Option<NgKind>,
    #[arg(long, value_name = "BOOL")]
    pub use_embedding: Option<bool>,
    #[arg(long)]
    pub n_layers: Option<usize>,
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub reg_strength: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Spectral margin of the graph embedding.
    #[arg(long)]
    pub margin: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MlArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Node count of the star set used when no graph is given.
    #[arg(long)]
    pub star_size: Option<usize>,
}

impl TrainArgs {
    fn overrides(&self) -> ConfigFile {
        ConfigFile {
            graph: self.graph.graph.clone().map(GraphPaths::One),
            ng_kind: self.ng_kind,
            use_embedding: self.use_embedding,
            n_layers: self.n_layers,
            cutoff: self.cutoff,
            learning_rate: self.learning_rate,
            reg_strength: self.reg_strength,
            steps: self.steps,
            fd_step: self.fd_step,
            margin: self.margin,
            ..Default::default()
        }
    }
}

impl Cli {
    /// Merges the config file, subcommand flags and global flags, in rising
    /// precedence.
    pub fn resolve(&self) -> Result<ResolvedConfig, CliError> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let (flags, purpose) = match &self.command {
            Command::Solve(t) => (t.overrides(), Purpose::Training),
            Command::Ml(m) => (ConfigFile { star_size: m.star_size, ..m.train.overrides() }, Purpose::Training),
            Command::Oracle(g) => {
                (ConfigFile { graph: g.graph.clone().map(GraphPaths::One), ..Default::default() }, Purpose::Verification)
            }
            Command::EmbedCheck(e) => (
                ConfigFile {
                    graph: e.graph.graph.clone().map(GraphPaths::One),
                    cutoff: e.cutoff,
                    margin: e.margin,
                    ..Default::default()
                },
                Purpose::Verification,
            ),
        };
        let global = ConfigFile { seed: self.seed, out_dir: self.out.clone(), ..Default::default() };
        ResolvedConfig::resolve(file.overridden_by(flags).overridden_by(global), purpose)
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.resolve()?;
    match &cli.command {
        Command::Solve(_) => {
            let s = commands::solve(&cfg)?;
            println!(
                "final loss {:.6}, best assignment {:?} (p = {:.4}), cut {} of {}, optimal: {}",
                s.final_loss,
                s.best_assignment.bits(),
                s.best_probability,
                s.best_cut,
                s.mc,
                s.optimal
            );
        }
        Command::Oracle(_) => {
            let sol = commands::oracle(&cfg)?;
            println!("{}", serde_json::to_string(&sol).expect("solution serializes"));
        }
        Command::EmbedCheck(_) => {
            let r = commands::embed_check(&cfg)?;
            println!(
                "takagi error {:.3e}, mesh unitarity error {:.3e}, moment discrepancy {:.3e}/{:.3e}, sigma_A physical: {}",
                r.takagi_error,
                r.mesh_unitarity_error,
                r.moment_discrepancy.mean,
                r.moment_discrepancy.covariance,
                r.sigma_a.physical
            );
        }
        Command::Ml(_) => {
            let r = commands::ml(&cfg)?;
            for g in &r.graphs {
                println!("{}: pattern {:?} (p = {:.3}), optimal: {}", g.graph, g.best_pattern.bits(), g.best_pattern_probability, g.best_pattern_optimal);
            }
            println!("loss {:.6} -> {:.6}, identical output: {}", r.initial_loss, r.final_loss, r.identical_output);
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { error::EXIT_CONFIG } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
