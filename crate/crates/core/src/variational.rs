//! Variational Max-Cut circuit, distribution-based loss, finite-difference
//! gradients and SGD training over one or several graphs.
//!
//! Each layer is: fixed interferometer, squeeze layer, fixed interferometer,
//! displacement layer and an optional non-Gaussian layer. When embedding is
//! enabled the graph's state-preparation program runs first.

use crate::circuit::{run_circuit, CompiledGate, Compiler};
use crate::embed::{embed, haar_unitary, interferometer_mesh};
use crate::error::{Error, Result};
use crate::fock::{FockState, OutcomeDistribution};
use crate::gates::{
    displacement_real_block, kerr_diagonal, phase_conjugate, squeeze_real_block, CubicPhaseBasis, GateSpec,
};
use crate::graph::WeightedGraph;
use crate::maxcut::{binarize, brute_force_maxcut, cut_table, CutAssignment};
use crate::scalar::{from_usize, lit, to_f64, Real};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

/// Learning rates above this are known to make training unstable.
pub const LEARNING_RATE_WARNING: f64 = 0.5;

/// Embedding margin used by training circuits. Rescaling the adjacency
/// spectrum to 0.5 keeps the embedding squeezing near 0.55, which the
/// training cutoff of 9 represents with about 1% truncation loss; the
/// tighter [`DEFAULT_MARGIN`] would lose more than half of the state.
pub const TRAINING_MARGIN: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NgKind {
    #[serde(alias = "None")]
    None,
    #[serde(alias = "Kerr")]
    Kerr,
    #[serde(alias = "CubicPhase", alias = "cubic")]
    CubicPhase,
}

impl NgKind {
    pub fn is_some(self) -> bool {
        self != NgKind::None
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NgKind::None => "none",
            NgKind::Kerr => "kerr",
            NgKind::CubicPhase => "cubic_phase",
        }
    }
}

/// Which gate parameter a coordinate of the flat parameter vector drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    SqueezeMag,
    SqueezePhase,
    DispMag,
    DispPhase,
    Ng,
}

impl Role {
    fn name(self) -> &'static str {
        match self {
            Role::SqueezeMag => "squeeze_mag",
            Role::SqueezePhase => "squeeze_phase",
            Role::DispMag => "disp_mag",
            Role::DispPhase => "disp_phase",
            Role::Ng => "ng",
        }
    }
}

const ROLES: [Role; 5] = [Role::SqueezeMag, Role::SqueezePhase, Role::DispMag, Role::DispPhase, Role::Ng];

/// Trainable parameters stored as one flat vector. Per layer the layout is
/// `[squeeze_mag, squeeze_phase, disp_mag, disp_phase, ng]`, each block of
/// length `n_modes`; the `ng` block is absent when there is no
/// non-Gaussian layer.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationalParams<T: Real> {
    n_modes: usize,
    n_layers: usize,
    ng_kind: NgKind,
    values: Vec<T>,
}

impl<T: Real> VariationalParams<T> {
    pub fn layer_len(n_modes: usize, ng_kind: NgKind) -> usize {
        n_modes * if ng_kind.is_some() { 5 } else { 4 }
    }

    pub fn new(n_modes: usize, n_layers: usize, ng_kind: NgKind, values: Vec<T>) -> Result<Self> {
        let want = n_layers * Self::layer_len(n_modes, ng_kind);
        if values.len() != want {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters given, {want} needed for {n_modes} modes and {n_layers} layers",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("parameter {i} is not finite")));
        }
        Ok(Self { n_modes, n_layers, ng_kind, values })
    }

    pub fn zeros(n_modes: usize, n_layers: usize, ng_kind: NgKind) -> Self {
        let len = n_layers * Self::layer_len(n_modes, ng_kind);
        Self { n_modes, n_layers, ng_kind, values: vec![T::zero(); len] }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn ng_kind(&self) -> NgKind {
        self.ng_kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    fn block(&self, layer: usize, role: Role) -> Option<&[T]> {
        if role == Role::Ng && !self.ng_kind.is_some() {
            return None;
        }
        let n = self.n_modes;
        let k = ROLES.iter().position(|&r| r == role).unwrap_or(0);
        let start = layer * Self::layer_len(n, self.ng_kind) + k * n;
        Some(&self.values[start..start + n])
    }

    pub fn squeeze_mag(&self, layer: usize) -> &[T] {
        self.block(layer, Role::SqueezeMag).unwrap_or(&[])
    }

    pub fn squeeze_phase(&self, layer: usize) -> &[T] {
        self.block(layer, Role::SqueezePhase).unwrap_or(&[])
    }

    pub fn disp_mag(&self, layer: usize) -> &[T] {
        self.block(layer, Role::DispMag).unwrap_or(&[])
    }

    pub fn disp_phase(&self, layer: usize) -> &[T] {
        self.block(layer, Role::DispPhase).unwrap_or(&[])
    }

    pub fn ng(&self, layer: usize) -> Option<&[T]> {
        self.block(layer, Role::Ng)
    }

    /// `(layer, role, mode)` of flat coordinate `i`.
    pub fn locate(&self, i: usize) -> (usize, Role, usize) {
        let n = self.n_modes;
        let per = Self::layer_len(n, self.ng_kind);
        let (layer, rest) = (i / per, i % per);
        (layer, ROLES[rest / n], rest % n)
    }

    /// Names such as `l0.squeeze_mag.2`, in flat order.
    pub fn names(&self) -> Vec<String> {
        (0..self.len())
            .map(|i| {
                let (layer, role, mode) = self.locate(i);
                format!("l{layer}.{}.{mode}", role.name())
            })
            .collect()
    }

    pub fn sum_of_squares(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &v| a + v * v)
    }

    fn with_values(&self, values: Vec<T>) -> Self {
        Self { values, ..self.clone() }
    }
}

/// Uniform initialization: magnitudes and non-Gaussian strengths in
/// `[-0.5, 0.5)`, phases in `[0, 2 pi)`. Deterministic in `seed`.
pub fn init_params<T: Real>(n_modes: usize, n_layers: usize, ng_kind: NgKind, seed: u64) -> VariationalParams<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut p = VariationalParams::zeros(n_modes, n_layers, ng_kind);
    let two_pi = std::f64::consts::TAU;
    for i in 0..p.len() {
        let (_, role, _) = p.locate(i);
        let v: f64 = match role {
            Role::SqueezePhase | Role::DispPhase => rng.random_range(0.0..two_pi),
            _ => rng.random_range(-0.5..0.5),
        };
        p.values[i] = lit(v);
    }
    p
}

/// Circuit shape and the fixed interferometers of every layer.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitConfig<T: Real> {
    pub ng_kind: NgKind,
    pub use_embedding: bool,
    pub n_layers: usize,
    pub cutoff: usize,
    pub margin: T,
    /// Two meshes per layer, in circuit order.
    pub fixed_interferometers: Vec<Vec<GateSpec<T>>>,
}

impl<T: Real> CircuitConfig<T> {
    /// Draws the fixed interferometers as Haar-random unitaries from `seed`.
    /// The embedding margin starts at [`TRAINING_MARGIN`].
    pub fn seeded(
        n_modes: usize,
        ng_kind: NgKind,
        use_embedding: bool,
        n_layers: usize,
        cutoff: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(1..=2).contains(&n_layers) {
            return Err(Error::InvalidArgument(format!("n_layers must be 1 or 2, got {n_layers}")));
        }
        if cutoff < 2 {
            return Err(Error::InvalidArgument(format!("cutoff must be at least 2, got {cutoff}")));
        }
        if n_modes == 0 {
            return Err(Error::InvalidArgument("circuit needs at least one mode".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let fixed_interferometers = (0..2 * n_layers)
            .map(|_| interferometer_mesh(&haar_unitary::<T, _>(n_modes, &mut rng)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ng_kind, use_embedding, n_layers, cutoff, margin: lit(TRAINING_MARGIN), fixed_interferometers })
    }

    fn check(&self, params: &VariationalParams<T>) -> Result<()> {
        if params.ng_kind != self.ng_kind || params.n_layers != self.n_layers {
            return Err(Error::DimensionMismatch(format!(
                "parameters are for {} layers with ng {}, circuit has {} layers with ng {}",
                params.n_layers,
                params.ng_kind.as_str(),
                self.n_layers,
                self.ng_kind.as_str()
            )));
        }
        if self.fixed_interferometers.len() != 2 * self.n_layers {
            return Err(Error::DimensionMismatch("two fixed interferometers are needed per layer".into()));
        }
        Ok(())
    }
}

fn ng_gate<T: Real>(kind: NgKind, mode: usize, v: T) -> Option<GateSpec<T>> {
    match kind {
        NgKind::None => None,
        NgKind::Kerr => Some(GateSpec::kerr(mode, v)),
        NgKind::CubicPhase => Some(GateSpec::cubic_phase(mode, v)),
    }
}

/// Full gate sequence for one graph.
pub fn build_circuit<T: Real>(
    graph: &WeightedGraph,
    params: &VariationalParams<T>,
    cfg: &CircuitConfig<T>,
) -> Result<Vec<GateSpec<T>>> {
    cfg.check(params)?;
    if params.n_modes != graph.n() {
        return Err(Error::DimensionMismatch(format!(
            "parameters for {} modes, graph has {} nodes",
            params.n_modes,
            graph.n()
        )));
    }
    let mut gates = Vec::new();
    if cfg.use_embedding {
        gates.extend(embed(graph, cfg.margin)?.gates());
    }
    let n = params.n_modes;
    for layer in 0..cfg.n_layers {
        gates.extend(cfg.fixed_interferometers[2 * layer].iter().cloned());
        let (sm, sp) = (params.squeeze_mag(layer), params.squeeze_phase(layer));
        gates.extend((0..n).map(|j| GateSpec::squeeze(j, sm[j], sp[j])));
        gates.extend(cfg.fixed_interferometers[2 * layer + 1].iter().cloned());
        let (dm, dp) = (params.disp_mag(layer), params.disp_phase(layer));
        gates.extend((0..n).map(|j| GateSpec::displacement(j, dm[j], dp[j])));
        if let Some(ng) = params.ng(layer) {
            gates.extend((0..n).filter_map(|j| ng_gate(cfg.ng_kind, j, ng[j])));
        }
    }
    Ok(gates)
}

/// Photon-count distribution of the circuit for one graph.
pub fn circuit_distribution<T: Real>(
    graph: &WeightedGraph,
    params: &VariationalParams<T>,
    cfg: &CircuitConfig<T>,
) -> Result<OutcomeDistribution<T>> {
    let gates = build_circuit(graph, params, cfg)?;
    Ok(run_circuit(graph.n(), cfg.cutoff, &gates)?.photon_count_distribution())
}

fn loss_from_table<T: Real>(dist: &OutcomeDistribution<T>, table: &[T], mc: T) -> T {
    let expected = dist
        .pattern_masses()
        .iter()
        .zip(table)
        .fold(T::zero(), |a, (&p, &w)| a + p * w);
    -expected / mc
}

/// `-(expected cut weight of the binarized outcomes) / mc`; truncated
/// probability mass counts as an empty cut.
pub fn loss<T: Real>(dist: &OutcomeDistribution<T>, graph: &WeightedGraph, mc: T) -> Result<T> {
    if !(mc > T::zero()) {
        return Err(Error::Degenerate(format!("max cut must be positive, got {mc}")));
    }
    if dist.n_modes() != graph.n() {
        return Err(Error::DimensionMismatch(format!(
            "distribution over {} modes for a graph of {} nodes",
            dist.n_modes(),
            graph.n()
        )));
    }
    let table: Vec<T> = cut_table(graph).into_iter().map(lit).collect();
    Ok(loss_from_table(dist, &table, mc))
}

pub fn regularized_loss<T: Real>(raw: T, params: &VariationalParams<T>, reg_strength: T) -> T {
    raw + reg_strength * params.sum_of_squares()
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_gradient<T: Real, F>(mut objective: F, params: &[T], h: T) -> Result<Vec<T>>
where
    F: FnMut(&[T]) -> Result<T>,
{
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let mut x = params.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = x[i];
        let wrap = |e| Error::Objective { coordinate: i, source: Box::new(e) };
        x[i] = orig + h;
        let up = objective(&x).map_err(wrap)?;
        x[i] = orig - h;
        let down = objective(&x).map_err(wrap)?;
        x[i] = orig;
        grad.push((up - down) / (h + h));
    }
    Ok(grad)
}

/// `theta - lr (grad + 2 reg theta)`.
pub fn sgd_step<T: Real>(
    params: &VariationalParams<T>,
    grad: &[T],
    learning_rate: T,
    reg_strength: T,
    step: usize,
) -> Result<VariationalParams<T>> {
    if grad.len() != params.len() {
        return Err(Error::DimensionMismatch(format!(
            "gradient of length {} for {} parameters",
            grad.len(),
            params.len()
        )));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::Divergence { step, reason: format!("gradient component {i} is not finite") });
    }
    let two = lit::<T>(2.0);
    let values: Vec<T> = params
        .values
        .iter()
        .zip(grad)
        .map(|(&t, &g)| t - learning_rate * (g + two * reg_strength * t))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Divergence { step, reason: format!("parameter {i} became non-finite") });
    }
    Ok(params.with_values(values))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig<T> {
    pub learning_rate: T,
    pub reg_strength: T,
    pub steps: usize,
    pub seed: u64,
    pub fd_step: T,
}

impl<T: Real> Default for TrainingConfig<T> {
    fn default() -> Self {
        Self { learning_rate: lit(0.25), reg_strength: lit(1e-3), steps: 150, seed: 0, fd_step: lit(1e-4) }
    }
}

impl<T: Real> TrainingConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > T::zero()) {
            return Err(Error::InvalidArgument(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.reg_strength >= T::zero()) {
            return Err(Error::InvalidArgument(format!("reg_strength must be non-negative, got {}", self.reg_strength)));
        }
        if !(self.fd_step > T::zero()) {
            return Err(Error::InvalidArgument(format!("fd_step must be positive, got {}", self.fd_step)));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if to_f64(self.learning_rate) > LEARNING_RATE_WARNING {
            out.push(format!(
                "learning_rate {} exceeds {LEARNING_RATE_WARNING}; training may be unstable",
                self.learning_rate
            ));
        }
        out
    }
}

/// Final circuit output for one training graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphOutcome<T: Real> {
    pub distribution: OutcomeDistribution<T>,
    pub loss: T,
    pub mc: f64,
    /// Single most probable photon-count tuple and its probability.
    pub most_probable: Vec<usize>,
    pub most_probable_probability: T,
    /// `most_probable` binarized.
    pub assignment: CutAssignment,
    /// Zero/non-zero pattern with the largest total probability.
    pub best_pattern: CutAssignment,
    pub best_pattern_probability: T,
}

/// Entry `k` of each per-step vector describes the parameters after `k`
/// updates, so a run of `steps` updates has `steps + 1` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingTrace<T: Real> {
    pub losses: Vec<T>,
    pub regularized_losses: Vec<T>,
    pub params: Vec<VariationalParams<T>>,
    pub outcomes: Vec<GraphOutcome<T>>,
    pub elapsed_seconds: f64,
}

impl<T: Real> TrainingTrace<T> {
    pub fn final_loss(&self) -> T {
        *self.losses.last().expect("trace has an initial entry")
    }

    pub fn final_params(&self) -> &VariationalParams<T> {
        self.params.last().expect("trace has an initial entry")
    }
}

/// Trainable operation in the variational block.
#[derive(Clone, Copy, Debug)]
enum ParamOp {
    Squeeze { layer: usize, mode: usize },
    Disp { layer: usize, mode: usize },
    Ng { layer: usize, mode: usize },
}

#[derive(Clone, Debug)]
enum Stage<T: Real> {
    Fixed(Arc<Vec<CompiledGate<T>>>),
    Param(ParamOp),
}

struct GraphCase<T: Real> {
    start: FockState<T>,
    table: Vec<T>,
    mc: f64,
}

/// Compiled gates at one parameter point, plus the real blocks that phase
/// perturbations reuse.
struct Compiled<T: Real> {
    gates: Vec<Option<CompiledGate<T>>>,
    blocks: Vec<Option<Arc<DMatrix<T>>>>,
}

/// Loss evaluator that caches everything independent of the parameters and
/// re-runs only the suffix of the circuit after a perturbed gate.
struct Evaluator<T: Real> {
    cutoff: usize,
    ng_kind: NgKind,
    stages: Vec<Stage<T>>,
    cases: Vec<GraphCase<T>>,
    cubic: Option<CubicPhaseBasis<T>>,
}

impl<T: Real> Evaluator<T> {
    fn new(graphs: &[WeightedGraph], cfg: &CircuitConfig<T>) -> Result<Self> {
        let n = graphs[0].n();
        let mut compiler = Compiler::new(cfg.cutoff);
        let mut stages = Vec::new();
        let mut compile_fixed = |gates: &[GateSpec<T>]| -> Result<Stage<T>> {
            Ok(Stage::Fixed(Arc::new(compiler.compile_all(gates)?)))
        };
        for layer in 0..cfg.n_layers {
            stages.push(compile_fixed(&cfg.fixed_interferometers[2 * layer])?);
            stages.extend((0..n).map(|mode| Stage::Param(ParamOp::Squeeze { layer, mode })));
            stages.push(compile_fixed(&cfg.fixed_interferometers[2 * layer + 1])?);
            stages.extend((0..n).map(|mode| Stage::Param(ParamOp::Disp { layer, mode })));
            if cfg.ng_kind.is_some() {
                stages.extend((0..n).map(|mode| Stage::Param(ParamOp::Ng { layer, mode })));
            }
        }
        let mut cases = Vec::with_capacity(graphs.len());
        for g in graphs {
            let vacuum = FockState::vacuum(n, cfg.cutoff)?;
            let start = if cfg.use_embedding {
                let prefix = compiler.compile_all(&embed(g, cfg.margin)?.gates())?;
                crate::circuit::run_compiled(&vacuum, &prefix)?
            } else {
                vacuum
            };
            let sol = brute_force_maxcut(g)?;
            if !(sol.mc > 0.0) {
                return Err(Error::Degenerate(format!("graph max cut must be positive, got {}", sol.mc)));
            }
            let table = cut_table(g).into_iter().map(lit).collect();
            cases.push(GraphCase { start, table, mc: sol.mc });
        }
        let cubic = (cfg.ng_kind == NgKind::CubicPhase).then(|| CubicPhaseBasis::new(cfg.cutoff));
        Ok(Self { cutoff: cfg.cutoff, ng_kind: cfg.ng_kind, stages, cases, cubic })
    }

    fn op_gate(&self, op: ParamOp, p: &VariationalParams<T>, block: Option<&DMatrix<T>>) -> Result<(CompiledGate<T>, Option<Arc<DMatrix<T>>>)> {
        let c = self.cutoff;
        let half = lit::<T>(0.5);
        Ok(match op {
            ParamOp::Squeeze { layer, mode } => {
                let b = match block {
                    Some(b) => Arc::new(b.clone()),
                    None => Arc::new(squeeze_real_block(p.squeeze_mag(layer)[mode], c)?),
                };
                let m = phase_conjugate(&b, p.squeeze_phase(layer)[mode] * half);
                (CompiledGate::Single { mode, matrix: Arc::new(m) }, Some(b))
            }
            ParamOp::Disp { layer, mode } => {
                let b = match block {
                    Some(b) => Arc::new(b.clone()),
                    None => Arc::new(displacement_real_block(p.disp_mag(layer)[mode], c)?),
                };
                let m = phase_conjugate(&b, p.disp_phase(layer)[mode]);
                (CompiledGate::Single { mode, matrix: Arc::new(m) }, Some(b))
            }
            ParamOp::Ng { layer, mode } => {
                let v = p.ng(layer).map(|s| s[mode]).unwrap_or_else(T::zero);
                let g = match self.ng_kind {
                    NgKind::Kerr => CompiledGate::Diagonal { mode, diag: Arc::new(kerr_diagonal(v, c)) },
                    NgKind::CubicPhase => {
                        let basis = self.cubic.as_ref().expect("cubic basis built for cubic circuits");
                        CompiledGate::Single { mode, matrix: Arc::new(basis.gate(v)?) }
                    }
                    NgKind::None => unreachable!("no non-Gaussian stages without a non-Gaussian kind"),
                };
                (g, None)
            }
        })
    }

    fn compile(&self, p: &VariationalParams<T>) -> Result<Compiled<T>> {
        let mut gates = Vec::with_capacity(self.stages.len());
        let mut blocks = Vec::with_capacity(self.stages.len());
        for st in &self.stages {
            match st {
                Stage::Fixed(_) => {
                    gates.push(None);
                    blocks.push(None);
                }
                Stage::Param(op) => {
                    let (g, b) = self.op_gate(*op, p, None)?;
                    gates.push(Some(g));
                    blocks.push(b);
                }
            }
        }
        Ok(Compiled { gates, blocks })
    }

    fn apply_stage(&self, k: usize, compiled: &Compiled<T>, s: FockState<T>) -> Result<FockState<T>> {
        match &self.stages[k] {
            Stage::Fixed(gs) => {
                let mut s = s;
                for g in gs.iter() {
                    s = g.apply(&s)?;
                }
                Ok(s)
            }
            Stage::Param(_) => compiled.gates[k].as_ref().expect("parameter stage compiled").apply(&s),
        }
    }

    /// Runs the full circuit for every graph, keeping the state before each stage.
    fn forward(&self, compiled: &Compiled<T>) -> Result<(Vec<Vec<FockState<T>>>, Vec<OutcomeDistribution<T>>)> {
        let mut all = Vec::with_capacity(self.cases.len());
        let mut dists = Vec::with_capacity(self.cases.len());
        for case in &self.cases {
            let mut checkpoints = Vec::with_capacity(self.stages.len());
            let mut s = case.start.clone();
            for k in 0..self.stages.len() {
                checkpoints.push(s.clone());
                s = self.apply_stage(k, compiled, s)?;
            }
            dists.push(s.photon_count_distribution());
            all.push(checkpoints);
        }
        Ok((all, dists))
    }

    fn total_loss(&self, dists: &[OutcomeDistribution<T>]) -> T {
        dists
            .iter()
            .zip(&self.cases)
            .fold(T::zero(), |a, (d, c)| a + loss_from_table(d, &c.table, lit(c.mc)))
    }

    fn stage_of(&self, op_match: impl Fn(&ParamOp) -> bool) -> usize {
        self.stages
            .iter()
            .position(|s| matches!(s, Stage::Param(op) if op_match(op)))
            .expect("every coordinate maps to a stage")
    }

    /// Summed loss with coordinate `i` replaced, replaying from its stage.
    fn perturbed_loss(
        &self,
        p: &VariationalParams<T>,
        i: usize,
        value: T,
        compiled: &Compiled<T>,
        checkpoints: &[Vec<FockState<T>>],
    ) -> Result<T> {
        let (layer, role, mode) = p.locate(i);
        let k = match role {
            Role::SqueezeMag | Role::SqueezePhase => {
                self.stage_of(|op| matches!(op, ParamOp::Squeeze { layer: l, mode: m } if *l == layer && *m == mode))
            }
            Role::DispMag | Role::DispPhase => {
                self.stage_of(|op| matches!(op, ParamOp::Disp { layer: l, mode: m } if *l == layer && *m == mode))
            }
            Role::Ng => self.stage_of(|op| matches!(op, ParamOp::Ng { layer: l, mode: m } if *l == layer && *m == mode)),
        };
        let mut values = p.values.clone();
        values[i] = value;
        let q = p.with_values(values);
        let reuse = matches!(role, Role::SqueezePhase | Role::DispPhase);
        let block = if reuse { compiled.blocks[k].as_deref() } else { None };
        let op = match self.stages[k] {
            Stage::Param(op) => op,
            Stage::Fixed(_) => unreachable!(),
        };
        let (gate, _) = self.op_gate(op, &q, block)?;
        let mut total = T::zero();
        for (case, cps) in self.cases.iter().zip(checkpoints) {
            let mut s = gate.apply(&cps[k])?;
            for j in k + 1..self.stages.len() {
                s = self.apply_stage(j, compiled, s)?;
            }
            total += loss_from_table(&s.photon_count_distribution(), &case.table, lit(case.mc));
        }
        Ok(total)
    }

    /// Loss, distributions and central-difference gradient at `p`.
    fn loss_and_gradient(&self, p: &VariationalParams<T>, h: T) -> Result<(T, Vec<OutcomeDistribution<T>>, Vec<T>)> {
        let compiled = self.compile(p)?;
        let (checkpoints, dists) = self.forward(&compiled)?;
        let base = self.total_loss(&dists);
        let mut grad = Vec::with_capacity(p.len());
        for i in 0..p.len() {
            let x = p.values[i];
            let wrap = |e| Error::Objective { coordinate: i, source: Box::new(e) };
            let up = self.perturbed_loss(p, i, x + h, &compiled, &checkpoints).map_err(wrap)?;
            let down = self.perturbed_loss(p, i, x - h, &compiled, &checkpoints).map_err(wrap)?;
            grad.push((up - down) / (h + h));
        }
        Ok((base, dists, grad))
    }

    fn evaluate(&self, p: &VariationalParams<T>) -> Result<(T, Vec<OutcomeDistribution<T>>)> {
        let compiled = self.compile(p)?;
        let (_, dists) = self.forward(&compiled)?;
        Ok((self.total_loss(&dists), dists))
    }
}

/// Summed loss and its finite-difference gradient over a set of graphs, using
/// the suffix-replay evaluator.
pub fn loss_gradient<T: Real>(
    graphs: &[WeightedGraph],
    params: &VariationalParams<T>,
    cfg: &CircuitConfig<T>,
    h: T,
) -> Result<(T, Vec<T>)> {
    check_graphs(graphs, params, cfg)?;
    let ev = Evaluator::new(graphs, cfg)?;
    let (l, _, g) = ev.loss_and_gradient(params, h)?;
    Ok((l, g))
}

fn check_graphs<T: Real>(graphs: &[WeightedGraph], params: &VariationalParams<T>, cfg: &CircuitConfig<T>) -> Result<()> {
    let first = graphs.first().ok_or_else(|| Error::InvalidArgument("no training graphs".into()))?;
    if let Some(g) = graphs.iter().find(|g| g.n() != first.n()) {
        return Err(Error::DimensionMismatch(format!(
            "training graphs have {} and {} nodes",
            first.n(),
            g.n()
        )));
    }
    if params.n_modes != first.n() {
        return Err(Error::DimensionMismatch(format!(
            "parameters for {} modes, graphs have {} nodes",
            params.n_modes,
            first.n()
        )));
    }
    cfg.check(params)
}

pub fn train<T: Real>(graph: &WeightedGraph, cfg: &CircuitConfig<T>, tcfg: &TrainingConfig<T>) -> Result<TrainingTrace<T>> {
    train_multi(std::slice::from_ref(graph), cfg, tcfg)
}

/// Trains one parameter set on the summed loss of several graphs.
pub fn train_multi<T: Real>(
    graphs: &[WeightedGraph],
    cfg: &CircuitConfig<T>,
    tcfg: &TrainingConfig<T>,
) -> Result<TrainingTrace<T>> {
    let n = graphs.first().map(|g| g.n()).ok_or_else(|| Error::InvalidArgument("no training graphs".into()))?;
    let init = init_params(n, cfg.n_layers, cfg.ng_kind, tcfg.seed);
    train_from(graphs, cfg, tcfg, init)
}

/// Updates that push a gate past its stable range are a divergence; any
/// other failure inside the objective is reported as itself.
fn diverged(e: Error, step: usize) -> Error {
    let inner = match e {
        Error::Objective { source, .. } => *source,
        other => other,
    };
    match inner {
        Error::OutOfRange { .. } if step > 0 => Error::Divergence { step, reason: inner.to_string() },
        other => other,
    }
}

/// Training loop starting from given parameters.
pub fn train_from<T: Real>(
    graphs: &[WeightedGraph],
    cfg: &CircuitConfig<T>,
    tcfg: &TrainingConfig<T>,
    init: VariationalParams<T>,
) -> Result<TrainingTrace<T>> {
    let started = Instant::now();
    tcfg.validate()?;
    check_graphs(graphs, &init, cfg)?;
    // Embeddings depend only on the graph, so building them once gives the
    // same states as rebuilding them every step.
    let ev = Evaluator::new(graphs, cfg)?;
    let mut params = init;
    let mut losses = Vec::with_capacity(tcfg.steps + 1);
    let mut reg_losses = Vec::with_capacity(tcfg.steps + 1);
    let mut snapshots = Vec::with_capacity(tcfg.steps + 1);
    let record = |loss: T, p: &VariationalParams<T>, step: usize, losses: &mut Vec<T>, reg: &mut Vec<T>| -> Result<()> {
        if !loss.is_finite() {
            return Err(Error::Divergence { step, reason: format!("loss is {loss}") });
        }
        losses.push(loss);
        reg.push(regularized_loss(loss, p, tcfg.reg_strength));
        Ok(())
    };
    for step in 0..tcfg.steps {
        let (l, _, grad) = ev.loss_and_gradient(&params, tcfg.fd_step).map_err(|e| diverged(e, step))?;
        record(l, &params, step, &mut losses, &mut reg_losses)?;
        snapshots.push(params.clone());
        params = sgd_step(&params, &grad, tcfg.learning_rate, tcfg.reg_strength, step)?;
    }
    let (l, dists) = ev.evaluate(&params).map_err(|e| diverged(e, tcfg.steps))?;
    record(l, &params, tcfg.steps, &mut losses, &mut reg_losses)?;
    snapshots.push(params);
    let outcomes = dists
        .into_iter()
        .zip(&ev.cases)
        .map(|(d, case)| {
            let (counts, prob) = d.most_probable();
            let loss = loss_from_table(&d, &case.table, lit(case.mc));
            let masses = d.pattern_masses();
            let mut best = 0;
            for (m, &p) in masses.iter().enumerate() {
                if p > masses[best] {
                    best = m;
                }
            }
            GraphOutcome {
                best_pattern: CutAssignment::from_mask(best, d.n_modes()),
                best_pattern_probability: masses[best],
                assignment: binarize(&counts),
                most_probable: counts,
                most_probable_probability: prob,
                loss,
                mc: case.mc,
                distribution: d,
            }
        })
        .collect();
    Ok(TrainingTrace {
        losses,
        regularized_losses: reg_losses,
        params: snapshots,
        outcomes,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Unit-weight stars on `n_nodes` nodes, one per choice of center.
pub fn make_star_set(n_nodes: usize) -> Result<Vec<WeightedGraph>> {
    if n_nodes < 3 {
        return Err(Error::InvalidArgument(format!("star sets need at least 3 nodes, got {n_nodes}")));
    }
    (0..n_nodes)
        .map(|center| {
            WeightedGraph::new(n_nodes, (0..n_nodes).filter(|&j| j != center).map(|j| (center, j, 1.0)).collect())
        })
        .collect()
}

/// Mean of `values`, used by summaries.
pub fn mean<T: Real>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |a, &v| a + v) / from_usize(values.len().max(1))
}
