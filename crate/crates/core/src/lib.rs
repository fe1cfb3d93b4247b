//! Continuous-variable photonic circuit simulation for variational Max-Cut.
//!
//! The crate covers a truncated Fock-space simulator, gate synthesis,
//! Gaussian moment propagation used as an independent oracle, graph
//! embedding into squeezed states, an exhaustive Max-Cut solver and a
//! finite-difference trainer for the variational circuit.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! bottom of this file fix the scalar type for common use.
//!
//! ```
//! use cvmaxcut::{embed, run_circuit, WeightedGraph};
//!
//! let graph = WeightedGraph::star(3).unwrap();
//! let program = embed::<f64>(&graph, 0.5).unwrap();
//! let state = run_circuit(3, 8, &program.gates()).unwrap();
//! let dist = state.photon_count_distribution();
//! assert!(dist.leakage() < 0.05);
//! ```

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod embed;
pub mod error;
pub mod fock;
pub mod gates;
pub mod gaussian;
pub mod graph;
pub mod maxcut;
pub mod scalar;
pub mod variational;

pub use circuit::{run_circuit, run_compiled, CompiledGate, Compiler};
pub use embed::{
    embed, haar_unitary, interferometer_mesh, rescale_adjacency, squeezings_from_takagi, takagi, EmbeddingProgram,
    Takagi, DEFAULT_MARGIN,
};
pub use error::{Error, Result};
pub use fock::{wigner, FockState, OutcomeDistribution, SingleModeDensity, HBAR};
pub use gates::{symplectic_of, GateKind, GateSpec, SymplecticAction};
pub use gaussian::{
    covariance_from_adjacency, doubled_covariance, is_valid_covariance, moments_from_fock, propagate,
    propagate_gates, search_scaling, GaussianMoments, ScalingGrid, ScalingParams, Validity,
};
pub use graph::WeightedGraph;
pub use maxcut::{binarize, brute_force_maxcut, cut_weight, CutAssignment, MaxCutSolution};
pub use scalar::Real;
pub use variational::{
    build_circuit, finite_diff_gradient, init_params, loss, make_star_set, regularized_loss, sgd_step, train,
    train_multi, CircuitConfig, NgKind, TrainingConfig, TrainingTrace, VariationalParams,
};

pub type FockStateF64 = FockState<f64>;
pub type FockStateF32 = FockState<f32>;
pub type GateSpecF64 = GateSpec<f64>;
pub type GaussianMomentsF64 = GaussianMoments<f64>;
pub type OutcomeDistributionF64 = OutcomeDistribution<f64>;
pub type VariationalParamsF64 = VariationalParams<f64>;
pub type CircuitConfigF64 = CircuitConfig<f64>;
pub type TrainingConfigF64 = TrainingConfig<f64>;
pub type TrainingTraceF64 = TrainingTrace<f64>;
pub type EmbeddingProgramF64 = EmbeddingProgram<f64>;
