//! The four commands. Each takes a resolved config, writes its artifacts and
//! returns the in-memory report so callers and tests can inspect it.

use crate::config::{ResolvedConfig, DEFAULT_STAR_SIZE};
use crate::error::CliError;
use crate::output::{DistributionFile, Manifest, Metadata, OutDir};
use cvmaxcut::embed::unitarity_error;
use cvmaxcut::fock::{state_dimension, DEFAULT_MEMORY_BUDGET};
use cvmaxcut::maxcut::BRUTE_FORCE_LIMIT;
use cvmaxcut::variational::GraphOutcome;
use cvmaxcut::{
    brute_force_maxcut, covariance_from_adjacency, cut_weight, embed, make_star_set, moments_from_fock,
    propagate_gates, run_circuit, search_scaling, train_multi, CircuitConfig, CutAssignment, Error, GaussianMoments,
    MaxCutSolution, ScalingGrid, ScalingParams, TrainingTrace, Validity, WeightedGraph,
};
use serde::Serialize;
use std::path::Path;

fn load_graph(path: &Path) -> Result<WeightedGraph, CliError> {
    WeightedGraph::from_json_file(path).map_err(CliError::core(format!("graph {}", path.display())))
}

/// Rejects sizes the simulator or the oracle cannot handle before any work
/// starts.
fn guard_size(n: usize, cutoff: usize) -> Result<(), CliError> {
    if n > BRUTE_FORCE_LIMIT {
        return Err(CliError::Core {
            context: "size guard".into(),
            source: Error::TooLarge { n, limit: BRUTE_FORCE_LIMIT },
        });
    }
    state_dimension::<f64>(n, cutoff, DEFAULT_MEMORY_BUDGET).map_err(CliError::core("size guard"))?;
    Ok(())
}

fn oracle_of(graph: &WeightedGraph, label: &str) -> Result<MaxCutSolution, CliError> {
    brute_force_maxcut(graph).map_err(CliError::core(format!("oracle for {label}")))
}

/// Per-graph view of the trained circuit's output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphReport {
    pub graph: String,
    pub mc: f64,
    pub maximizers: Vec<CutAssignment>,
    pub most_probable_outcome: Vec<usize>,
    pub most_probable_probability: f64,
    /// `most_probable_outcome` binarized.
    pub assignment: CutAssignment,
    pub assignment_cut: f64,
    pub assignment_optimal: bool,
    pub best_pattern: CutAssignment,
    pub best_pattern_probability: f64,
    pub best_pattern_optimal: bool,
    pub loss: f64,
    pub leakage: f64,
}

fn is_optimal(sol: &MaxCutSolution, a: &CutAssignment) -> bool {
    sol.maximizers.contains(&a.canonical())
}

fn graph_report(
    label: String,
    graph: &WeightedGraph,
    sol: &MaxCutSolution,
    out: &GraphOutcome<f64>,
) -> Result<GraphReport, CliError> {
    let assignment_cut = cut_weight(graph, &out.assignment).map_err(CliError::core(label.clone()))?;
    Ok(GraphReport {
        mc: sol.mc,
        maximizers: sol.maximizers.clone(),
        most_probable_outcome: out.most_probable.clone(),
        most_probable_probability: out.most_probable_probability,
        assignment_optimal: is_optimal(sol, &out.assignment),
        assignment: out.assignment.clone(),
        assignment_cut,
        best_pattern_optimal: is_optimal(sol, &out.best_pattern),
        best_pattern: out.best_pattern.clone(),
        best_pattern_probability: out.best_pattern_probability,
        loss: out.loss,
        leakage: out.distribution.leakage(),
        graph: label,
    })
}

fn circuit_config(cfg: &ResolvedConfig, n: usize) -> Result<CircuitConfig<f64>, CliError> {
    let mut c = CircuitConfig::seeded(n, cfg.ng_kind, cfg.use_embedding, cfg.n_layers, cfg.cutoff, cfg.seed)
        .map_err(CliError::core("circuit"))?;
    c.margin = cfg.margin;
    Ok(c)
}

fn run_training(cfg: &ResolvedConfig, graphs: &[WeightedGraph]) -> Result<TrainingTrace<f64>, CliError> {
    let n = graphs[0].n();
    guard_size(n, cfg.cutoff)?;
    let tcfg = cfg.training();
    for w in tcfg.warnings() {
        eprintln!("warning: {w}");
    }
    train_multi(graphs, &circuit_config(cfg, n)?, &tcfg).map_err(CliError::core("training"))
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub graph: String,
    pub mc: f64,
    pub maximizers: Vec<CutAssignment>,
    pub best_assignment: CutAssignment,
    pub best_probability: f64,
    pub most_probable_outcome: Vec<usize>,
    pub best_cut: f64,
    pub achieved_ratio: f64,
    pub optimal: bool,
    pub best_pattern: CutAssignment,
    pub best_pattern_probability: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub final_regularized_loss: f64,
    pub leakage: f64,
    pub metadata: Metadata,
}

/// Trains the circuit on one graph.
pub fn solve(cfg: &ResolvedConfig) -> Result<SolveSummary, CliError> {
    let path = cfg.single_graph()?;
    let graph = load_graph(path)?;
    let label = path.display().to_string();
    guard_size(graph.n(), cfg.cutoff)?;
    let sol = oracle_of(&graph, &label)?;
    let trace = run_training(cfg, std::slice::from_ref(&graph))?;
    let report = graph_report(label.clone(), &graph, &sol, &trace.outcomes[0])?;

    let out = OutDir::create(&cfg.out_dir)?;
    out.write_json("manifest.json", &Manifest::new("solve", cfg))?;
    out.write_loss_csv("loss.csv", &trace)?;
    out.write_params_csv("params.csv", &trace)?;
    out.write_json("distribution.json", &DistributionFile::new(&trace.outcomes[0].distribution))?;
    let summary = SolveSummary {
        graph: label,
        mc: sol.mc,
        maximizers: sol.maximizers,
        best_assignment: report.assignment,
        best_probability: report.most_probable_probability,
        most_probable_outcome: report.most_probable_outcome,
        best_cut: report.assignment_cut,
        achieved_ratio: report.assignment_cut / sol.mc,
        optimal: report.assignment_optimal,
        best_pattern: report.best_pattern,
        best_pattern_probability: report.best_pattern_probability,
        initial_loss: trace.losses[0],
        final_loss: trace.final_loss(),
        final_regularized_loss: *trace.regularized_losses.last().expect("trace is non-empty"),
        leakage: report.leakage,
        metadata: Metadata::now(trace.elapsed_seconds),
    };
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}

/// Solves Max-Cut exhaustively; the result is also printed by the caller.
pub fn oracle(cfg: &ResolvedConfig) -> Result<MaxCutSolution, CliError> {
    let path = cfg.single_graph()?;
    let graph = load_graph(path)?;
    let sol = oracle_of(&graph, &path.display().to_string())?;
    let out = OutDir::create(&cfg.out_dir)?;
    out.write_json("manifest.json", &Manifest::new("oracle", cfg))?;
    out.write_json("oracle.json", &sol)?;
    Ok(sol)
}

#[derive(Debug, Serialize)]
pub struct MomentDiscrepancy {
    pub mean: f64,
    pub covariance: f64,
    /// Norm of the truncated Fock state; below 1 when the cutoff clips it.
    pub fock_norm: f64,
}

#[derive(Debug, Serialize)]
pub struct CovarianceReport {
    /// `None` when the resolvent is singular; see `error`.
    pub validity: Option<Validity>,
    pub physical: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CovarianceReport {
    fn of(a: &nalgebra::DMatrix<f64>) -> Self {
        match covariance_from_adjacency(a) {
            Ok(c) => Self { physical: c.validity.is_physical(), validity: Some(c.validity), error: None },
            Err(e) => Self { validity: None, physical: false, error: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ScalingReport {
    pub found: Option<ScalingParams<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct EmbedCheckReport {
    pub graph: String,
    pub n_nodes: usize,
    pub cutoff: usize,
    pub margin: f64,
    pub scale: f64,
    pub takagi_values: Vec<f64>,
    pub takagi_error: f64,
    pub takagi_unitarity_error: f64,
    pub squeezings: Vec<f64>,
    pub beamsplitter_count: usize,
    pub mesh_unitarity_error: f64,
    pub mesh_reconstruction_error: f64,
    pub moment_discrepancy: MomentDiscrepancy,
    /// Covariance route on the adjacency as given.
    pub sigma_a: CovarianceReport,
    /// Same route on the rescaled adjacency that the embedding encodes.
    pub sigma_a_rescaled: CovarianceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_scaling: Option<ScalingReport>,
}

fn max_abs<'a>(it: impl Iterator<Item = (&'a f64, &'a f64)>) -> f64 {
    it.map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Checks every stage of the embedding against its independent oracle.
pub fn embed_check(cfg: &ResolvedConfig) -> Result<EmbedCheckReport, CliError> {
    let path = cfg.single_graph()?;
    let graph = load_graph(path)?;
    let label = path.display().to_string();
    guard_size(graph.n(), cfg.cutoff)?;
    let program = embed::<f64>(&graph, cfg.margin).map_err(CliError::core(format!("embedding {label}")))?;

    let recon = program.takagi.reconstruct();
    let takagi_error = recon
        .iter()
        .zip(program.rescaled.iter())
        .map(|(z, &b)| (z.re - b).powi(2) + z.im.powi(2))
        .sum::<f64>()
        .sqrt();
    let mesh = program.mesh_transfer().map_err(CliError::core("mesh"))?;
    let mesh_reconstruction_error =
        mesh.iter().zip(program.takagi.unitary.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);

    let gates = program.gates();
    let state = run_circuit(graph.n(), cfg.cutoff, &gates).map_err(CliError::core("Fock simulation"))?;
    let fock = moments_from_fock(&state).map_err(CliError::core("Fock moments"))?;
    let gauss = propagate_gates(&GaussianMoments::vacuum(graph.n()), &gates).map_err(CliError::core("propagation"))?;
    let moment_discrepancy = MomentDiscrepancy {
        mean: max_abs(fock.mean().iter().zip(gauss.mean().iter())),
        covariance: max_abs(fock.covariance().iter().zip(gauss.covariance().iter())),
        fock_norm: state.norm_sqr(),
    };

    let adjacency = graph.adjacency::<f64>();
    let sigma_a = CovarianceReport::of(&adjacency);
    let search = (!sigma_a.physical).then(|| match search_scaling(&adjacency, &ScalingGrid::default()) {
        Ok(s) => ScalingReport { found: Some(s), error: None },
        Err(e) => ScalingReport { found: None, error: Some(e.to_string()) },
    });

    let report = EmbedCheckReport {
        graph: label,
        n_nodes: graph.n(),
        cutoff: cfg.cutoff,
        margin: cfg.margin,
        scale: program.scale,
        takagi_values: program.takagi.values.clone(),
        takagi_error,
        takagi_unitarity_error: unitarity_error(&program.takagi.unitary),
        squeezings: program.squeezings.clone(),
        beamsplitter_count: program.beamsplitter_count(),
        mesh_unitarity_error: unitarity_error(&mesh),
        mesh_reconstruction_error,
        moment_discrepancy,
        sigma_a,
        sigma_a_rescaled: CovarianceReport::of(&program.rescaled),
        search_scaling: search,
    };
    let out = OutDir::create(&cfg.out_dir)?;
    out.write_json("manifest.json", &Manifest::new("embed-check", cfg))?;
    out.write_json("embed_check.json", &report)?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct MlReport {
    pub graphs: Vec<GraphReport>,
    /// Every graph's most probable zero/non-zero pattern is the same.
    pub identical_output: bool,
    pub common_pattern: Option<CutAssignment>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub converged: bool,
}

#[derive(Debug, Serialize)]
pub struct MlSummary {
    pub n_graphs: usize,
    pub identical_output: bool,
    pub common_pattern: Option<CutAssignment>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub converged: bool,
    pub metadata: Metadata,
}

/// Trains one parameter set on a graph set: the listed graphs, or the star
/// set of `star_size` nodes when none are given.
pub fn ml(cfg: &ResolvedConfig) -> Result<MlReport, CliError> {
    let (labels, graphs): (Vec<String>, Vec<WeightedGraph>) = match &cfg.graph {
        Some(g) => g
            .paths()
            .into_iter()
            .map(|p| Ok((p.display().to_string(), load_graph(p)?)))
            .collect::<Result<Vec<_>, CliError>>()?
            .into_iter()
            .unzip(),
        None => {
            let n = cfg.star_size.unwrap_or(DEFAULT_STAR_SIZE);
            let set = make_star_set(n).map_err(|e| CliError::Field { field: "star_size", message: e.to_string() })?;
            ((0..n).map(|k| format!("star:center={k}")).collect(), set)
        }
    };
    let n = graphs[0].n();
    if let Some((l, g)) = labels.iter().zip(&graphs).find(|(_, g)| g.n() != n) {
        return Err(CliError::Field {
            field: "graph",
            message: format!("{l} has {} nodes, the first graph has {n}", g.n()),
        });
    }
    guard_size(n, cfg.cutoff)?;
    let sols = labels.iter().zip(&graphs).map(|(l, g)| oracle_of(g, l)).collect::<Result<Vec<_>, _>>()?;
    let trace = run_training(cfg, &graphs)?;

    let reports = labels
        .into_iter()
        .zip(&graphs)
        .zip(&sols)
        .zip(&trace.outcomes)
        .map(|(((l, g), s), o)| graph_report(l, g, s, o))
        .collect::<Result<Vec<_>, _>>()?;
    let first = &reports[0].best_pattern;
    let identical_output = reports.iter().all(|r| &r.best_pattern == first);
    let report = MlReport {
        identical_output,
        common_pattern: identical_output.then(|| first.clone()),
        initial_loss: trace.losses[0],
        final_loss: trace.final_loss(),
        converged: trace.final_loss() < trace.losses[0],
        graphs: reports,
    };

    let out = OutDir::create(&cfg.out_dir)?;
    let mut manifest_cfg = cfg.clone();
    if manifest_cfg.graph.is_none() {
        manifest_cfg.star_size = Some(graphs.len());
    }
    out.write_json("manifest.json", &Manifest::new("ml", &manifest_cfg))?;
    out.write_loss_csv("loss.csv", &trace)?;
    out.write_params_csv("params.csv", &trace)?;
    for (k, o) in trace.outcomes.iter().enumerate() {
        out.write_json(&format!("distribution_{k}.json"), &DistributionFile::new(&o.distribution))?;
    }
    out.write_json("report.json", &report)?;
    out.write_json(
        "summary.json",
        &MlSummary {
            n_graphs: graphs.len(),
            identical_output: report.identical_output,
            common_pattern: report.common_pattern.clone(),
            initial_loss: report.initial_loss,
            final_loss: report.final_loss,
            converged: report.converged,
            metadata: Metadata::now(trace.elapsed_seconds),
        },
    )?;
    Ok(report)
}
