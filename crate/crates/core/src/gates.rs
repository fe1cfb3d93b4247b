//! Gate specifications, truncated Fock matrices and phase-space actions.
//!
//! Non-diagonal Fock gates come from matrix exponentials of their generators.
//! The exponential is taken in a working space larger than the cutoff and then
//! truncated, so the returned block approximates the corresponding block of
//! the untruncated operator (and is therefore sub-unitary). The beamsplitter
//! conserves total photon number, so each photon-number sector is
//! exponentiated exactly.
//!
//! Phase-space actions use `(x_1..x_N, p_1..p_N)` ordering and moments in
//! units of hbar (vacuum covariance `I/2`). A matrix `M` maps Heisenberg
//! quadratures as `r -> M r + d`.

use crate::error::{Error, Result};
use crate::scalar::{c_real, cis, from_usize, lit, Real};
use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Largest squeezing magnitude accepted by [`squeeze_fock`].
pub const SQUEEZE_LIMIT: f64 = 5.0;
/// Largest displacement magnitude accepted by [`displacement_fock`].
pub const DISPLACEMENT_LIMIT: f64 = 5.0;
/// Largest cubic phase strength accepted by [`cubic_phase_fock`].
pub const CUBIC_LIMIT: f64 = 2.0;
/// Extra Fock levels used when building cubic phase gates.
pub const CUBIC_PAD: usize = 240;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Squeeze,
    Displacement,
    Rotation,
    Beamsplitter,
    Kerr,
    CubicPhase,
}

impl GateKind {
    pub fn param_count(self) -> usize {
        match self {
            GateKind::Squeeze | GateKind::Displacement | GateKind::Beamsplitter => 2,
            GateKind::Rotation | GateKind::Kerr | GateKind::CubicPhase => 1,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Beamsplitter => 2,
            _ => 1,
        }
    }

    pub fn is_gaussian(self) -> bool {
        !matches!(self, GateKind::Kerr | GateKind::CubicPhase)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Squeeze => "Squeeze",
            GateKind::Displacement => "Displacement",
            GateKind::Rotation => "Rotation",
            GateKind::Beamsplitter => "Beamsplitter",
            GateKind::Kerr => "Kerr",
            GateKind::CubicPhase => "CubicPhase",
        }
    }
}

/// A gate with its parameters and the modes it acts on.
///
/// Parameters by kind: squeeze `(r, phi)`, displacement `(|alpha|, arg alpha)`,
/// rotation `(phi)`, beamsplitter `(theta, phi)`, Kerr `(kappa)`, cubic phase `(gamma)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSpec<T> {
    pub kind: GateKind,
    pub params: Vec<T>,
    pub modes: Vec<usize>,
}

impl<T: Real> GateSpec<T> {
    pub fn new(kind: GateKind, params: Vec<T>, modes: Vec<usize>) -> Result<Self> {
        if params.len() != kind.param_count() {
            return Err(Error::InvalidArgument(format!(
                "{} takes {} parameters, got {}",
                kind.name(),
                kind.param_count(),
                params.len()
            )));
        }
        if modes.len() != kind.arity() {
            return Err(Error::InvalidArgument(format!(
                "{} acts on {} modes, got {}",
                kind.name(),
                kind.arity(),
                modes.len()
            )));
        }
        if kind.arity() == 2 && modes[0] == modes[1] {
            return Err(Error::InvalidArgument(format!(
                "{} needs two distinct modes",
                kind.name()
            )));
        }
        Ok(Self { kind, params, modes })
    }

    pub fn squeeze(mode: usize, r: T, phi: T) -> Self {
        Self { kind: GateKind::Squeeze, params: vec![r, phi], modes: vec![mode] }
    }

    pub fn displacement(mode: usize, magnitude: T, phase: T) -> Self {
        Self { kind: GateKind::Displacement, params: vec![magnitude, phase], modes: vec![mode] }
    }

    pub fn rotation(mode: usize, phi: T) -> Self {
        Self { kind: GateKind::Rotation, params: vec![phi], modes: vec![mode] }
    }

    pub fn beamsplitter(mode_a: usize, mode_b: usize, theta: T, phi: T) -> Self {
        Self { kind: GateKind::Beamsplitter, params: vec![theta, phi], modes: vec![mode_a, mode_b] }
    }

    pub fn kerr(mode: usize, kappa: T) -> Self {
        Self { kind: GateKind::Kerr, params: vec![kappa], modes: vec![mode] }
    }

    pub fn cubic_phase(mode: usize, gamma: T) -> Self {
        Self { kind: GateKind::CubicPhase, params: vec![gamma], modes: vec![mode] }
    }

    /// Fock-basis matrix of this gate at the given cutoff.
    pub fn fock_matrix(&self, cutoff: usize) -> Result<DMatrix<Complex<T>>> {
        let p = &self.params;
        match self.kind {
            GateKind::Squeeze => squeeze_fock(p[0], p[1], cutoff),
            GateKind::Displacement => displacement_fock(cis(p[1]) * p[0], cutoff),
            GateKind::Rotation => Ok(rotation_fock(p[0], cutoff)),
            GateKind::Beamsplitter => Ok(beamsplitter_fock(p[0], p[1], cutoff)),
            GateKind::Kerr => Ok(kerr_fock(p[0], cutoff)),
            GateKind::CubicPhase => cubic_phase_fock(p[0], cutoff),
        }
    }
}

/// Truncated annihilation operator: `sqrt(n)` on the first superdiagonal.
pub fn annihilation_matrix<T: Real>(cutoff: usize) -> DMatrix<Complex<T>> {
    real_annihilation::<T>(cutoff).map(c_real)
}

fn real_annihilation<T: Real>(dim: usize) -> DMatrix<T> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = from_usize::<T>(n).sqrt();
    }
    a
}

/// Number operator `a^dagger a`, i.e. `diag(0, 1, ..., cutoff - 1)`.
pub fn number_matrix<T: Real>(cutoff: usize) -> DMatrix<Complex<T>> {
    let a = annihilation_matrix::<T>(cutoff);
    a.adjoint() * a
}

fn guard<T: Real>(what: &'static str, value: T, limit: f64) -> Result<()> {
    let v = crate::scalar::to_f64(value);
    if !v.is_finite() || v.abs() > limit {
        return Err(Error::OutOfRange { what, value: v, limit });
    }
    Ok(())
}

/// Applies the rotation conjugation `R(theta) G R(theta)^dagger`, i.e.
/// multiplies entry `(m, n)` of a real matrix by `e^{i (m - n) theta}`.
pub fn phase_conjugate<T: Real>(g: &DMatrix<T>, theta: T) -> DMatrix<Complex<T>> {
    let n = g.nrows();
    let phases: Vec<Complex<T>> = (0..n).map(|k| cis(from_usize::<T>(k) * theta)).collect();
    DMatrix::from_fn(n, g.ncols(), |m, k| {
        if m == k {
            c_real(g[(m, k)])
        } else {
            phases[m] * phases[k].conj() * g[(m, k)]
        }
    })
}

/// Real block `S(r, 0)` truncated to the cutoff.
pub fn squeeze_real_block<T: Real>(r: T, cutoff: usize) -> Result<DMatrix<T>> {
    guard("r", r, SQUEEZE_LIMIT)?;
    let r_abs = crate::scalar::to_f64(r).abs();
    let dim = cutoff + 30 + (40.0 * r_abs).ceil() as usize;
    let a = real_annihilation::<T>(dim);
    let a2 = &a * &a;
    let gen = (&a2 - a2.transpose()) * (r / lit(2.0));
    Ok(gen.exp().view((0, 0), (cutoff, cutoff)).into_owned())
}

/// Real block `D(|alpha|)` truncated to the cutoff.
pub fn displacement_real_block<T: Real>(magnitude: T, cutoff: usize) -> Result<DMatrix<T>> {
    guard("|alpha|", magnitude, DISPLACEMENT_LIMIT)?;
    let m = crate::scalar::to_f64(magnitude).abs();
    let dim = cutoff + 20 + (8.0 * m + 4.0 * m * m).ceil() as usize;
    let a = real_annihilation::<T>(dim);
    let gen = (a.transpose() - &a) * magnitude;
    Ok(gen.exp().view((0, 0), (cutoff, cutoff)).into_owned())
}

/// Squeeze gate `exp{(r/2)(e^{-i phi} a^2 - e^{i phi} a^dagger^2)}`.
pub fn squeeze_fock<T: Real>(r: T, phi: T, cutoff: usize) -> Result<DMatrix<Complex<T>>> {
    guard("phi", phi, f64::MAX)?;
    Ok(phase_conjugate(&squeeze_real_block(r, cutoff)?, phi / lit(2.0)))
}

/// Displacement gate `exp{alpha a^dagger - alpha^* a}`.
pub fn displacement_fock<T: Real>(alpha: Complex<T>, cutoff: usize) -> Result<DMatrix<Complex<T>>> {
    let mag = crate::scalar::norm_sqr(alpha).sqrt();
    let block = displacement_real_block(mag, cutoff)?;
    let theta = if mag > T::zero() { alpha.im.atan2(alpha.re) } else { T::zero() };
    Ok(phase_conjugate(&block, theta))
}

/// Rotation gate `exp{i phi n}`, diagonal with entries `e^{i n phi}`.
pub fn rotation_fock<T: Real>(phi: T, cutoff: usize) -> DMatrix<Complex<T>> {
    DMatrix::from_diagonal(&DVector::from_vec(rotation_diagonal(phi, cutoff)))
}

pub fn rotation_diagonal<T: Real>(phi: T, cutoff: usize) -> Vec<Complex<T>> {
    (0..cutoff).map(|n| cis(from_usize::<T>(n) * phi)).collect()
}

/// Kerr gate `exp{i kappa n^2}`.
pub fn kerr_fock<T: Real>(kappa: T, cutoff: usize) -> DMatrix<Complex<T>> {
    DMatrix::from_diagonal(&DVector::from_vec(kerr_diagonal(kappa, cutoff)))
}

pub fn kerr_diagonal<T: Real>(kappa: T, cutoff: usize) -> Vec<Complex<T>> {
    (0..cutoff)
        .map(|n| cis(kappa * from_usize::<T>(n * n)))
        .collect()
}

/// Eigenbasis of the position operator `x = a + a^dagger` in a padded space,
/// reused for every cubic phase strength.
#[derive(Clone, Debug)]
pub struct CubicPhaseBasis<T: Real> {
    cutoff: usize,
    /// First `cutoff` rows of the eigenvector matrix.
    vectors: DMatrix<T>,
    cubes: Vec<T>,
}

impl<T: Real> CubicPhaseBasis<T> {
    pub fn new(cutoff: usize) -> Self {
        Self::with_working_dim(cutoff, cutoff + CUBIC_PAD)
    }

    pub fn with_working_dim(cutoff: usize, dim: usize) -> Self {
        let dim = dim.max(cutoff);
        let a = real_annihilation::<T>(dim);
        let x = &a + a.transpose();
        let eig = SymmetricEigen::new(x);
        let vectors = eig.eigenvectors.view((0, 0), (cutoff, dim)).into_owned();
        let three = lit::<T>(3.0);
        let cubes = eig.eigenvalues.iter().map(|&l| l * l * l / three).collect();
        Self { cutoff, vectors, cubes }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// `exp{i gamma x^3 / 3}` restricted to the first `cutoff` levels.
    pub fn gate(&self, gamma: T) -> Result<DMatrix<Complex<T>>> {
        guard("gamma", gamma, CUBIC_LIMIT)?;
        let c = self.cutoff;
        let phases: Vec<Complex<T>> = self.cubes.iter().map(|&q| cis(gamma * q)).collect();
        let mut out = DMatrix::from_element(c, c, c_real(T::zero()));
        for (k, ph) in phases.iter().enumerate() {
            for n in 0..c {
                let vn = self.vectors[(n, k)];
                if vn == T::zero() {
                    continue;
                }
                let w = *ph * vn;
                for m in 0..c {
                    out[(m, n)] += w * self.vectors[(m, k)];
                }
            }
        }
        Ok(out)
    }
}

/// Cubic phase gate `exp{i gamma x^3 / 3}` with `x = a + a^dagger`.
pub fn cubic_phase_fock<T: Real>(gamma: T, cutoff: usize) -> Result<DMatrix<Complex<T>>> {
    guard("gamma", gamma, CUBIC_LIMIT)?;
    CubicPhaseBasis::new(cutoff).gate(gamma)
}

/// Beamsplitter `exp{theta (e^{i phi} a^dagger b - e^{-i phi} a b^dagger)}` on
/// two modes. Row and column indices are `n_a * cutoff + n_b`.
///
/// Its one-photon block in the basis `(|1,0>, |0,1>)` is
/// `[[cos theta, e^{i phi} sin theta], [-e^{-i phi} sin theta, cos theta]]`,
/// which is also the map `a -> T a` on annihilation operators.
pub fn beamsplitter_fock<T: Real>(theta: T, phi: T, cutoff: usize) -> DMatrix<Complex<T>> {
    let cc = cutoff;
    let mut out = DMatrix::from_element(cc * cc, cc * cc, c_real(T::zero()));
    let phases: Vec<Complex<T>> = (0..cc).map(|n| cis(from_usize::<T>(n) * phi)).collect();
    for total in 0..=2 * (cc - 1) {
        // sector basis |k, total - k>, k = 0..=total
        let size = total + 1;
        let mut gen = DMatrix::<T>::zeros(size, size);
        for k in 0..total {
            let amp = (from_usize::<T>(k + 1) * from_usize::<T>(total - k)).sqrt() * theta;
            gen[(k + 1, k)] = amp;
            gen[(k, k + 1)] = -amp;
        }
        let e = if theta == T::zero() { DMatrix::identity(size, size) } else { gen.exp() };
        let lo = total.saturating_sub(cc - 1);
        let hi = total.min(cc - 1);
        for m in lo..=hi {
            for k in lo..=hi {
                let v = e[(m, k)];
                if v == T::zero() {
                    continue;
                }
                let row = m * cc + (total - m);
                let col = k * cc + (total - k);
                out[(row, col)] = if m == k { c_real(v) } else { phases[m] * phases[k].conj() * v };
            }
        }
    }
    out
}

/// One-photon transfer matrix of a beamsplitter on its two modes.
pub fn beamsplitter_transfer<T: Real>(theta: T, phi: T) -> [[Complex<T>; 2]; 2] {
    let (s, co) = (theta.sin(), theta.cos());
    [
        [c_real(co), cis(phi) * s],
        [-(cis(-phi) * s), c_real(co)],
    ]
}

/// Phase-space action of a Gaussian gate.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticAction<T: Real> {
    pub matrix: DMatrix<T>,
    pub displacement: DVector<T>,
}

impl<T: Real> SymplecticAction<T> {
    pub fn identity(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
            displacement: DVector::zeros(2 * n_modes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// Phase-space action of a passive linear transform with transfer
    /// matrix `u` (`a_i -> sum_j u_ij a_j`).
    pub fn from_transfer(u: &DMatrix<Complex<T>>) -> Self {
        let n = u.nrows();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let z = u[(i, j)];
                m[(i, j)] = z.re;
                m[(i, n + j)] = -z.im;
                m[(n + i, j)] = z.im;
                m[(n + i, n + j)] = z.re;
            }
        }
        Self { matrix: m, displacement: DVector::zeros(2 * n) }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Self) -> Self {
        Self {
            matrix: &next.matrix * &self.matrix,
            displacement: &next.matrix * &self.displacement + &next.displacement,
        }
    }

    /// Largest entry of `M J M^T - J`.
    pub fn symplectic_error(&self) -> T {
        let j = symplectic_form::<T>(self.n_modes());
        let d = &self.matrix * &j * self.matrix.transpose() - &j;
        d.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }
}

/// Canonical form `J = [[0, I], [-I, 0]]` for `(x..., p...)` ordering.
pub fn symplectic_form<T: Real>(n_modes: usize) -> DMatrix<T> {
    let n = n_modes;
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = T::one();
        j[(n + k, k)] = -T::one();
    }
    j
}

/// Phase-space action of a Gaussian gate embedded in `n_modes` modes.
pub fn symplectic_of<T: Real>(gate: &GateSpec<T>, n_modes: usize) -> Result<SymplecticAction<T>> {
    if !gate.kind.is_gaussian() {
        return Err(Error::UnsupportedKind(gate.kind.name()));
    }
    let gate = GateSpec::new(gate.kind, gate.params.clone(), gate.modes.clone())?;
    if let Some(&m) = gate.modes.iter().find(|&&m| m >= n_modes) {
        return Err(Error::InvalidArgument(format!("mode {m} out of range for {n_modes} modes")));
    }
    let n = n_modes;
    let mut act = SymplecticAction::identity(n);
    let p = &gate.params;
    match gate.kind {
        GateKind::Squeeze => {
            let k = gate.modes[0];
            let (ch, sh) = (p[0].cosh(), p[0].sinh());
            let (cp, sp) = (p[1].cos(), p[1].sin());
            act.matrix[(k, k)] = ch - sh * cp;
            act.matrix[(k, n + k)] = -sh * sp;
            act.matrix[(n + k, k)] = -sh * sp;
            act.matrix[(n + k, n + k)] = ch + sh * cp;
        }
        GateKind::Displacement => {
            let k = gate.modes[0];
            let s2 = lit::<T>(2.0).sqrt();
            act.displacement[k] = s2 * p[0] * p[1].cos();
            act.displacement[n + k] = s2 * p[0] * p[1].sin();
        }
        GateKind::Rotation => {
            let k = gate.modes[0];
            let (co, s) = (p[0].cos(), p[0].sin());
            act.matrix[(k, k)] = co;
            act.matrix[(k, n + k)] = -s;
            act.matrix[(n + k, k)] = s;
            act.matrix[(n + k, n + k)] = co;
        }
        GateKind::Beamsplitter => {
            let (a, b) = (gate.modes[0], gate.modes[1]);
            let t = beamsplitter_transfer(p[0], p[1]);
            let mut u = DMatrix::<Complex<T>>::identity(n, n);
            u[(a, a)] = t[0][0];
            u[(a, b)] = t[0][1];
            u[(b, a)] = t[1][0];
            u[(b, b)] = t[1][1];
            act = SymplecticAction::from_transfer(&u);
        }
        GateKind::Kerr | GateKind::CubicPhase => unreachable!(),
    }
    Ok(act)
}

/// Single-photon transfer matrix of a sequence of passive gates (rotations
/// and beamsplitters), composed in application order.
pub fn passive_transfer<T: Real>(gates: &[GateSpec<T>], n_modes: usize) -> Result<DMatrix<Complex<T>>> {
    let mut total = DMatrix::<Complex<T>>::identity(n_modes, n_modes);
    for g in gates {
        let mut u = DMatrix::<Complex<T>>::identity(n_modes, n_modes);
        match g.kind {
            GateKind::Rotation => u[(g.modes[0], g.modes[0])] = cis(g.params[0]),
            GateKind::Beamsplitter => {
                let (a, b) = (g.modes[0], g.modes[1]);
                let t = beamsplitter_transfer(g.params[0], g.params[1]);
                u[(a, a)] = t[0][0];
                u[(a, b)] = t[0][1];
                u[(b, a)] = t[1][0];
                u[(b, b)] = t[1][1];
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "{} is not a passive linear gate",
                    other.name()
                )))
            }
        }
        total = u * total;
    }
    Ok(total)
}
