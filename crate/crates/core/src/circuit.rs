//! Gate sequences compiled to Fock-space operators and run on states.

use crate::error::{Error, Result};
use crate::fock::{FockState, SparseTwoMode};
use crate::gates::{
    beamsplitter_fock, kerr_diagonal, rotation_diagonal, CubicPhaseBasis, GateKind, GateSpec,
};
use crate::scalar::Real;
use nalgebra::{Complex, DMatrix};
use std::sync::Arc;

/// A gate in the form the Fock simulator consumes.
#[derive(Clone, Debug)]
pub enum CompiledGate<T: Real> {
    Single { mode: usize, matrix: Arc<DMatrix<Complex<T>>> },
    Diagonal { mode: usize, diag: Arc<Vec<Complex<T>>> },
    Two { modes: (usize, usize), gate: Arc<SparseTwoMode<T>> },
}

impl<T: Real> CompiledGate<T> {
    pub fn apply(&self, state: &FockState<T>) -> Result<FockState<T>> {
        match self {
            CompiledGate::Single { mode, matrix } => state.apply_single_mode(*mode, matrix),
            CompiledGate::Diagonal { mode, diag } => state.apply_diagonal(*mode, diag),
            CompiledGate::Two { modes, gate } => state.apply_two_mode_sparse(modes.0, modes.1, gate),
        }
    }
}

/// Compiles gate specifications at a fixed cutoff, caching the cubic phase
/// eigenbasis between calls.
#[derive(Clone, Debug)]
pub struct Compiler<T: Real> {
    cutoff: usize,
    cubic: Option<Arc<CubicPhaseBasis<T>>>,
}

impl<T: Real> Compiler<T> {
    pub fn new(cutoff: usize) -> Self {
        Self { cutoff, cubic: None }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn cubic_basis(&mut self) -> Arc<CubicPhaseBasis<T>> {
        let cutoff = self.cutoff;
        self.cubic.get_or_insert_with(|| Arc::new(CubicPhaseBasis::new(cutoff))).clone()
    }

    pub fn compile(&mut self, gate: &GateSpec<T>) -> Result<CompiledGate<T>> {
        let gate = GateSpec::new(gate.kind, gate.params.clone(), gate.modes.clone())?;
        let c = self.cutoff;
        let p = &gate.params;
        let mode = gate.modes[0];
        Ok(match gate.kind {
            GateKind::Rotation => CompiledGate::Diagonal { mode, diag: Arc::new(rotation_diagonal(p[0], c)) },
            GateKind::Kerr => CompiledGate::Diagonal { mode, diag: Arc::new(kerr_diagonal(p[0], c)) },
            GateKind::CubicPhase => CompiledGate::Single { mode, matrix: Arc::new(self.cubic_basis().gate(p[0])?) },
            GateKind::Squeeze | GateKind::Displacement => {
                CompiledGate::Single { mode, matrix: Arc::new(gate.fock_matrix(c)?) }
            }
            GateKind::Beamsplitter => CompiledGate::Two {
                modes: (gate.modes[0], gate.modes[1]),
                gate: Arc::new(SparseTwoMode::from_dense(&beamsplitter_fock(p[0], p[1], c))),
            },
        })
    }

    pub fn compile_all(&mut self, gates: &[GateSpec<T>]) -> Result<Vec<CompiledGate<T>>> {
        gates.iter().map(|g| self.compile(g)).collect()
    }
}

/// Runs compiled gates in order.
pub fn run_compiled<T: Real>(state: &FockState<T>, gates: &[CompiledGate<T>]) -> Result<FockState<T>> {
    let mut s = state.clone();
    for g in gates {
        s = g.apply(&s)?;
    }
    Ok(s)
}

/// Runs a gate sequence on the vacuum of `n_modes` modes.
pub fn run_circuit<T: Real>(n_modes: usize, cutoff: usize, gates: &[GateSpec<T>]) -> Result<FockState<T>> {
    if let Some(g) = gates.iter().find(|g| g.modes.iter().any(|&m| m >= n_modes)) {
        return Err(Error::InvalidArgument(format!(
            "{} on modes {:?} exceeds {n_modes} modes",
            g.kind.name(),
            g.modes
        )));
    }
    let compiled = Compiler::new(cutoff).compile_all(gates)?;
    run_compiled(&FockState::vacuum(n_modes, cutoff)?, &compiled)
}
