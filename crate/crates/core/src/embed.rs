//! Graph embedding: rescale the adjacency matrix, Takagi-decompose it, turn
//! the singular values into squeezing and compile the unitary into a
//! nearest-neighbour beamsplitter mesh.

use crate::error::{Error, Result};
use crate::gates::{passive_transfer, GateKind, GateSpec};
use crate::graph::WeightedGraph;
use crate::scalar::{c, c_real, lit, norm_sqr, to_f64, Real};
use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

/// Default distance of the rescaled spectral radius from 1.
pub const DEFAULT_MARGIN: f64 = 0.05;
/// Unitarity tolerance for [`interferometer_mesh`] inputs.
pub const UNITARY_TOLERANCE: f64 = 1e-8;

/// Angles below this are treated as exact identities and dropped from meshes.
const ANGLE_EPS: f64 = 1e-15;

/// Rescaled adjacency `A / scale` with spectral radius `1 - margin`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rescaled<T: Real> {
    pub matrix: DMatrix<T>,
    pub scale: T,
}

fn check_square_symmetric<T: Real>(b: &DMatrix<T>, tol: f64) -> Result<()> {
    if b.nrows() != b.ncols() || b.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "expected a non-empty square matrix, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    let mut worst = 0.0f64;
    for i in 0..b.nrows() {
        for j in 0..i {
            worst = worst.max(to_f64((b[(i, j)] - b[(j, i)]).abs()));
        }
    }
    if !(worst <= tol) {
        return Err(Error::NotSymmetric(worst));
    }
    Ok(())
}

pub fn spectral_radius<T: Real>(a: &DMatrix<T>) -> T {
    SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .fold(T::zero(), |m, v| m.max(v.abs()))
}

/// Scales `a` up or down so its spectral radius becomes `1 - margin`.
pub fn rescale_adjacency<T: Real>(a: &DMatrix<T>, margin: T) -> Result<Rescaled<T>> {
    check_square_symmetric(a, 1e-12)?;
    if !(margin > T::zero() && margin < T::one()) {
        return Err(Error::InvalidArgument(format!("margin must lie in (0, 1), got {margin}")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("adjacency has non-finite entries".into()));
    }
    let rho = spectral_radius(a);
    if !(to_f64(rho) > 1e-12) {
        return Err(Error::Degenerate("adjacency matrix has zero spectral radius".into()));
    }
    let scale = rho / (T::one() - margin);
    Ok(Rescaled { matrix: a / scale, scale })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Takagi<T: Real> {
    pub unitary: DMatrix<Complex<T>>,
    /// Non-negative values, sorted descending.
    pub values: Vec<T>,
}

impl<T: Real> Takagi<T> {
    /// `U diag(d) U^T`.
    pub fn reconstruct(&self) -> DMatrix<Complex<T>> {
        let n = self.values.len();
        let d = DMatrix::from_fn(n, n, |i, j| if i == j { c_real(self.values[i]) } else { c_real(T::zero()) });
        &self.unitary * d * self.unitary.transpose()
    }
}

/// Takagi factorization `B = U diag(d) U^T` of a real symmetric matrix via its
/// eigendecomposition; negative eigenvalues get a factor `i` on their column.
pub fn takagi<T: Real>(b: &DMatrix<T>) -> Result<Takagi<T>> {
    check_square_symmetric(b, 1e-10)?;
    let n = b.nrows();
    let sym = (b + b.transpose()) * lit::<T>(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .abs()
            .partial_cmp(&eig.eigenvalues[i].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut unitary = DMatrix::from_element(n, n, c_real(T::zero()));
    let mut values = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[k];
        let factor = if lambda >= T::zero() { c_real(T::one()) } else { c(T::zero(), T::one()) };
        for row in 0..n {
            unitary[(row, col)] = factor * eig.eigenvectors[(row, k)];
        }
        values.push(lambda.abs());
    }
    Ok(Takagi { unitary, values })
}

/// `r_i = atanh(d_i)`, defined for `d_i` in `[0, 1)`.
pub fn squeezings_from_takagi<T: Real>(d: &[T]) -> Result<Vec<T>> {
    d.iter()
        .map(|&v| {
            if !(v >= T::zero() && v < T::one()) {
                Err(Error::Domain(format!("atanh needs a value in [0, 1), got {v}")))
            } else {
                Ok(v.atanh())
            }
        })
        .collect()
}

/// Largest entry of `U^dagger U - I`, as a magnitude.
pub fn unitarity_error<T: Real>(u: &DMatrix<Complex<T>>) -> T {
    let n = u.nrows();
    let g = u.adjoint() * u;
    let mut worst = T::zero();
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { c_real(T::one()) } else { c_real(T::zero()) };
            worst = worst.max(norm_sqr(g[(i, j)] - target).sqrt());
        }
    }
    worst
}

fn arg<T: Real>(z: Complex<T>) -> T {
    z.im.atan2(z.re)
}

/// Beamsplitter on `(p, p+1)` whose right action zeroes `u[(row, p)]`.
fn right_null<T: Real>(u: &DMatrix<Complex<T>>, row: usize, p: usize) -> (T, T) {
    let (x, y) = (u[(row, p)], u[(row, p + 1)]);
    let theta = norm_sqr(x).sqrt().atan2(norm_sqr(y).sqrt());
    (theta, arg(y) - arg(x))
}

/// Beamsplitter on `(p, p+1)` whose left action zeroes `u[(p + 1, col)]`.
fn left_null<T: Real>(u: &DMatrix<Complex<T>>, p: usize, col: usize) -> (T, T) {
    let (x, y) = (u[(p, col)], u[(p + 1, col)]);
    let theta = norm_sqr(y).sqrt().atan2(norm_sqr(x).sqrt());
    (theta, arg(x) - arg(y))
}

fn bs_matrix<T: Real>(theta: T, phi: T) -> [[Complex<T>; 2]; 2] {
    crate::gates::beamsplitter_transfer(theta, phi)
}

fn apply_right<T: Real>(u: &mut DMatrix<Complex<T>>, p: usize, theta: T, phi: T) {
    let t = bs_matrix(theta, phi);
    for r in 0..u.nrows() {
        let (a, b) = (u[(r, p)], u[(r, p + 1)]);
        u[(r, p)] = a * t[0][0] + b * t[1][0];
        u[(r, p + 1)] = a * t[0][1] + b * t[1][1];
    }
}

fn apply_left<T: Real>(u: &mut DMatrix<Complex<T>>, p: usize, theta: T, phi: T) {
    let t = bs_matrix(theta, phi);
    for col in 0..u.ncols() {
        let (a, b) = (u[(p, col)], u[(p + 1, col)]);
        u[(p, col)] = t[0][0] * a + t[0][1] * b;
        u[(p + 1, col)] = t[1][0] * a + t[1][1] * b;
    }
}

fn is_identity_bs<T: Real>(theta: T) -> bool {
    to_f64(theta).abs() < ANGLE_EPS
}

/// Rectangular nearest-neighbour decomposition of a unitary into
/// beamsplitters followed by one rotation per mode. Gates are listed in
/// application order; their composed transfer matrix equals `u`.
pub fn interferometer_mesh<T: Real>(u: &DMatrix<Complex<T>>) -> Result<Vec<GateSpec<T>>> {
    if u.nrows() != u.ncols() || u.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!("unitary must be square, got {}x{}", u.nrows(), u.ncols())));
    }
    let err = to_f64(unitarity_error(u));
    if !(err <= UNITARY_TOLERANCE) {
        return Err(Error::NotUnitary(err));
    }
    let n = u.nrows();
    let mut w = u.clone();
    let mut right = Vec::new();
    let mut left = Vec::new();
    for i in 0..n.saturating_sub(1) {
        if i % 2 == 0 {
            for j in 0..=i {
                let (row, p) = (n - 1 - j, i - j);
                let (theta, phi) = right_null(&w, row, p);
                apply_right(&mut w, p, theta, phi);
                right.push((p, theta, phi));
            }
        } else {
            for j in 1..=i + 1 {
                let (q, col) = (n + j - i - 2, j - 1);
                let (theta, phi) = left_null(&w, q - 1, col);
                apply_left(&mut w, q - 1, theta, phi);
                left.push((q - 1, theta, phi));
            }
        }
    }
    // now L_k..L_1 U X_1..X_m = D, so U = L_1^-1..L_k^-1 D X_m^-1..X_1^-1
    let phases: Vec<T> = (0..n).map(|k| arg(w[(k, k)])).collect();
    let mut gates = Vec::new();
    for &(p, theta, phi) in &right {
        if !is_identity_bs(theta) {
            gates.push(GateSpec::beamsplitter(p, p + 1, -theta, phi));
        }
    }
    // L^-1 D = D L' with L' = T(-theta, phi + beta - alpha)
    for &(p, theta, phi) in left.iter().rev() {
        if !is_identity_bs(theta) {
            let shifted = phi + phases[p + 1] - phases[p];
            gates.push(GateSpec::beamsplitter(p, p + 1, -theta, shifted));
        }
    }
    for (k, &a) in phases.iter().enumerate() {
        if to_f64(a).abs() >= ANGLE_EPS {
            gates.push(GateSpec::rotation(k, a));
        }
    }
    Ok(gates)
}

/// Haar-random unitary from the QR factorization of a complex Gaussian matrix.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex<T>> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(lit::<T>(re), lit::<T>(im))
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let mag = norm_sqr(d).sqrt();
        let phase = if mag > T::zero() { d / mag } else { c_real(T::one()) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// State-preparation program for a graph: single-mode squeezers followed by
/// an interferometer.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingProgram<T: Real> {
    pub squeezings: Vec<T>,
    pub mesh: Vec<GateSpec<T>>,
    pub scale: T,
    pub takagi: Takagi<T>,
    pub rescaled: DMatrix<T>,
}

impl<T: Real> EmbeddingProgram<T> {
    pub fn n_modes(&self) -> usize {
        self.squeezings.len()
    }

    /// Squeezers then mesh, in application order.
    pub fn gates(&self) -> Vec<GateSpec<T>> {
        let mut out: Vec<GateSpec<T>> = self
            .squeezings
            .iter()
            .enumerate()
            .filter(|(_, &r)| r != T::zero())
            .map(|(k, &r)| GateSpec::squeeze(k, r, T::zero()))
            .collect();
        out.extend(self.mesh.iter().cloned());
        out
    }

    /// Single-photon transfer matrix of the mesh.
    pub fn mesh_transfer(&self) -> Result<DMatrix<Complex<T>>> {
        passive_transfer(&self.mesh, self.n_modes())
    }

    pub fn beamsplitter_count(&self) -> usize {
        self.mesh.iter().filter(|g| g.kind == GateKind::Beamsplitter).count()
    }
}

pub fn embed<T: Real>(graph: &WeightedGraph, margin: T) -> Result<EmbeddingProgram<T>> {
    let a = graph.adjacency::<T>();
    let Rescaled { matrix, scale } = rescale_adjacency(&a, margin)?;
    let tk = takagi(&matrix)?;
    let squeezings = squeezings_from_takagi(&tk.values)?;
    let mesh = interferometer_mesh(&tk.unitary)?;
    Ok(EmbeddingProgram { squeezings, mesh, scale, takagi: tk, rescaled: matrix })
}
