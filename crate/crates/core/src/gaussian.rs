//! Gaussian moments: the adjacency-matrix covariance representation with its
//! validity checks, and moment propagation through symplectic actions.
//!
//! Moments are stored in units of hbar: the vacuum has zero mean and
//! covariance `I/2`, and a valid state satisfies `sigma + (i/2) J >= 0`.
//! Quadratures are ordered `(x_1..x_N, p_1..p_N)`.

use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::gates::{symplectic_form, symplectic_of, GateSpec, SymplecticAction};
use crate::scalar::{c, c_real, from_usize, lit, to_f64, Real};
use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Smallest eigenvalue a covariance must exceed to count as positive definite.
pub const PD_TOLERANCE: f64 = 1e-10;
/// Allowed negativity of `sigma + (i/2) J`.
pub const UNCERTAINTY_TOLERANCE: f64 = 1e-9;
/// Allowed norm of `(2 sigma J)^2 + I` for a pure state.
pub const PURITY_TOLERANCE: f64 = 1e-6;
/// Resolvent eigenvalues below this magnitude count as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMoments<T: Real> {
    mean: DVector<T>,
    covariance: DMatrix<T>,
}

impl<T: Real> GaussianMoments<T> {
    /// Builds moments after checking shapes and symmetry (within `1e-12`
    /// relative to the largest entry).
    pub fn new(mean: DVector<T>, covariance: DMatrix<T>) -> Result<Self> {
        let dim = covariance.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || covariance.ncols() != dim || mean.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "mean of length {} with {}x{} covariance",
                mean.len(),
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let asym = max_asymmetry(&covariance);
        let scale = covariance.amax().max(T::one());
        if to_f64(asym) > 1e-12 * to_f64(scale) {
            return Err(Error::NotSymmetric(to_f64(asym)));
        }
        Ok(Self { mean, covariance })
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            mean: DVector::zeros(2 * n_modes),
            covariance: DMatrix::identity(2 * n_modes, 2 * n_modes) * lit::<T>(0.5),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<T> {
        &self.covariance
    }

    /// Probability of measuring zero photons in every mode.
    pub fn vacuum_probability(&self) -> Result<T> {
        let q = &self.covariance + DMatrix::identity(self.mean.len(), self.mean.len()) * lit::<T>(0.5);
        let lu = q.clone().lu();
        let det = lu.determinant();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::Singular("sigma + I/2".into()))?;
        let quad = (self.mean.transpose() * inv * &self.mean)[(0, 0)];
        Ok((-quad / lit(2.0)).exp() / det.sqrt())
    }
}

fn max_asymmetry<T: Real>(m: &DMatrix<T>) -> T {
    let mut worst = T::zero();
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams<T> {
    pub c: T,
    pub d: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validity {
    pub positive_definite: bool,
    pub uncertainty_ok: bool,
    pub pure: bool,
}

impl Validity {
    /// Positive definite and obeys the uncertainty relation.
    pub fn is_physical(&self) -> bool {
        self.positive_definite && self.uncertainty_ok
    }
}

/// Covariance built from an adjacency matrix together with its validity.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyCovariance<T: Real> {
    pub moments: GaussianMoments<T>,
    pub validity: Validity,
}

pub fn is_valid_covariance<T: Real>(m: &GaussianMoments<T>) -> Validity {
    let sigma = m.covariance();
    let dim = sigma.nrows();
    let n = dim / 2;
    let sym = (sigma + sigma.transpose()) * lit::<T>(0.5);
    let min_eig = SymmetricEigen::new(sym.clone())
        .eigenvalues
        .iter()
        .fold(T::max_value().unwrap_or_else(T::one), |a, &v| a.min(v));
    let positive_definite = to_f64(min_eig) > PD_TOLERANCE;

    let j = symplectic_form::<T>(n);
    let half = lit::<T>(0.5);
    let h = DMatrix::from_fn(dim, dim, |r, col| c(sym[(r, col)], half * j[(r, col)]));
    let min_h = SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .fold(T::max_value().unwrap_or_else(T::one), |a, &v| a.min(v));
    let uncertainty_ok = to_f64(min_h) >= -UNCERTAINTY_TOLERANCE;

    let sj = &sym * &j * lit::<T>(2.0);
    let resid = &sj * &sj + DMatrix::<T>::identity(dim, dim);
    let pure = to_f64(resid.norm()) <= PURITY_TOLERANCE;

    Validity { positive_definite, uncertainty_ok, pure }
}

fn check_symmetric<T: Real>(a: &DMatrix<T>) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "adjacency must be square and non-empty, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let asym = max_asymmetry(a);
    if to_f64(asym) > 1e-12 {
        return Err(Error::NotSymmetric(to_f64(asym)));
    }
    Ok(())
}

/// Maps `(I - K)^{-1} - I/2`, with `K = X * block_diag(B, B)` for a real
/// symmetric `B` of size `m`, to an `(x, p)` covariance over `m` modes.
fn resolvent_covariance<T: Real>(b: &DMatrix<T>) -> Result<DMatrix<T>> {
    let m = b.nrows();
    // X * diag(B, B) = [[0, B], [B, 0]]
    let mut k = DMatrix::<T>::identity(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            k[(i, m + j)] -= b[(i, j)];
            k[(m + i, j)] -= b[(i, j)];
        }
    }
    let eig = SymmetricEigen::new(k);
    let min_abs = eig
        .eigenvalues
        .iter()
        .fold(T::max_value().unwrap_or_else(T::one), |a, &v| a.min(v.abs()));
    if to_f64(min_abs) < SINGULAR_TOLERANCE {
        return Err(Error::Singular(format!(
            "I - XA has an eigenvalue of magnitude {:e}",
            to_f64(min_abs)
        )));
    }
    let inv_diag = eig.eigenvalues.map(|v| T::one() / v);
    let mut sigma_c = &eig.eigenvectors * DMatrix::from_diagonal(&inv_diag) * eig.eigenvectors.transpose();
    for i in 0..2 * m {
        sigma_c[(i, i)] -= lit::<T>(0.5);
    }
    // complex-basis (a, a^dagger) covariance to (x, p): R sigma R^dagger with
    // R = [[I, I], [-iI, iI]] / sqrt(2)
    let s = lit::<T>(0.5).sqrt();
    let r = DMatrix::from_fn(2 * m, 2 * m, |i, j| {
        let same = i % m == j % m;
        if !same {
            return c_real(T::zero());
        }
        match (i < m, j < m) {
            (true, _) => c_real(s),
            (false, true) => c(T::zero(), -s),
            (false, false) => c(T::zero(), s),
        }
    });
    let sc = sigma_c.map(c_real);
    let out: DMatrix<Complex<T>> = &r * sc * r.adjoint();
    let re = out.map(|z| z.re);
    Ok((&re + re.transpose()) * lit::<T>(0.5))
}

/// Covariance `sigma_A = (I - X A) ^ {-1} - I/2` of the pure Gaussian state
/// whose adjacency (B) matrix is `a`, with zero mean.
pub fn covariance_from_adjacency<T: Real>(a: &DMatrix<T>) -> Result<AdjacencyCovariance<T>> {
    check_symmetric(a)?;
    let cov = resolvent_covariance(a)?;
    let moments = GaussianMoments { mean: DVector::zeros(cov.nrows()), covariance: cov };
    let validity = is_valid_covariance(&moments);
    Ok(AdjacencyCovariance { moments, validity })
}

/// Covariance of the doubled construction built from `A' = diag(A, A)` with
/// scaling `(c, d)`: a `4n x 4n` matrix over `2n` modes.
pub fn doubled_covariance<T: Real>(a: &DMatrix<T>, s: ScalingParams<T>) -> Result<GaussianMoments<T>> {
    check_symmetric(a)?;
    if !(s.d > T::zero()) {
        return Err(Error::InvalidArgument(format!("scaling d must be positive, got {}", s.d)));
    }
    let n = a.nrows();
    let mut b = DMatrix::<T>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = a[(i, j)] * s.d;
            b[(n + i, n + j)] = a[(i, j)] * s.d;
        }
        b[(i, i)] += s.c * s.d;
        b[(n + i, n + i)] += s.c * s.d;
    }
    let cov = resolvent_covariance(&b)?;
    Ok(GaussianMoments { mean: DVector::zeros(cov.nrows()), covariance: cov })
}

/// Scan grid for [`search_scaling`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingGrid<T> {
    pub c_values: Vec<T>,
    pub d_values: Vec<T>,
}

impl<T: Real> Default for ScalingGrid<T> {
    /// `c` in `{0, 0.1, ..., 2}` and `d` in `{0.01, 0.02, ..., 1}`.
    fn default() -> Self {
        Self {
            c_values: (0..=20).map(|k| lit(k as f64 / 10.0)).collect(),
            d_values: (1..=100).map(|k| lit(k as f64 / 100.0)).collect(),
        }
    }
}

/// First `(c, d)` on the grid, scanning `d` ascending and then `c` ascending,
/// whose doubled covariance is positive definite and obeys the uncertainty
/// relation. Singular grid points are skipped.
pub fn search_scaling<T: Real>(a: &DMatrix<T>, grid: &ScalingGrid<T>) -> Result<ScalingParams<T>> {
    check_symmetric(a)?;
    for &d in &grid.d_values {
        for &cv in &grid.c_values {
            let s = ScalingParams { c: cv, d };
            match doubled_covariance(a, s) {
                Ok(m) if is_valid_covariance(&m).is_physical() => return Ok(s),
                Ok(_) | Err(Error::Singular(_)) | Err(Error::InvalidArgument(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Err(Error::ScalingNotFound { c_points: grid.c_values.len(), d_points: grid.d_values.len() })
}

/// Folds phase-space actions over the moments left to right.
pub fn propagate<T: Real>(moments: &GaussianMoments<T>, actions: &[SymplecticAction<T>]) -> Result<GaussianMoments<T>> {
    let mut mean = moments.mean.clone();
    let mut cov = moments.covariance.clone();
    for (k, act) in actions.iter().enumerate() {
        if act.matrix.nrows() != mean.len() || act.displacement.len() != mean.len() {
            return Err(Error::DimensionMismatch(format!(
                "action {k} has dimension {}, moments have {}",
                act.matrix.nrows(),
                mean.len()
            )));
        }
        mean = &act.matrix * mean + &act.displacement;
        cov = &act.matrix * cov * act.matrix.transpose();
    }
    let cov = (&cov + cov.transpose()) * lit::<T>(0.5);
    Ok(GaussianMoments { mean, covariance: cov })
}

/// Propagates moments through a sequence of Gaussian gates.
pub fn propagate_gates<T: Real>(moments: &GaussianMoments<T>, gates: &[GateSpec<T>]) -> Result<GaussianMoments<T>> {
    let n = moments.n_modes();
    let actions = gates.iter().map(|g| symplectic_of(g, n)).collect::<Result<Vec<_>>>()?;
    propagate(moments, &actions)
}

/// Applies `a` on `mode` to a Fock amplitude vector (truncation drops nothing
/// since `a` only lowers photon numbers).
fn lower<T: Real>(state: &FockState<T>, amps: &[Complex<T>], mode: usize) -> Vec<Complex<T>> {
    let cut = state.cutoff();
    let stride = state.stride(mode);
    let mut out = vec![c_real(T::zero()); amps.len()];
    let sqrt: Vec<T> = (0..cut).map(|n| from_usize::<T>(n).sqrt()).collect();
    for (idx, &amp) in amps.iter().enumerate() {
        let n = (idx / stride) % cut;
        if n > 0 {
            out[idx - stride] += amp * sqrt[n];
        }
    }
    out
}

fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(c_real(T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

/// First and second quadrature moments of a (possibly unnormalized) Fock
/// state, normalized by its squared norm.
pub fn moments_from_fock<T: Real>(state: &FockState<T>) -> Result<GaussianMoments<T>> {
    let n = state.n_modes();
    let psi = state.amplitudes();
    let norm = state.norm_sqr();
    if !(norm > T::zero()) {
        return Err(Error::Degenerate("state has zero norm".into()));
    }
    let lowered: Vec<Vec<Complex<T>>> = (0..n).map(|k| lower(state, psi, k)).collect();
    let first: Vec<Complex<T>> = lowered.iter().map(|v| inner(psi, v) / norm).collect();
    let mut nn = DMatrix::from_element(n, n, c_real(T::zero()));
    let mut mm = DMatrix::from_element(n, n, c_real(T::zero()));
    for j in 0..n {
        for k in 0..n {
            nn[(j, k)] = inner(&lowered[j], &lowered[k]) / norm;
            let jk = lower(state, &lowered[k], j);
            mm[(j, k)] = inner(psi, &jk) / norm;
        }
    }
    let s2 = lit::<T>(2.0).sqrt();
    let half = lit::<T>(0.5);
    let mut mean = DVector::zeros(2 * n);
    for j in 0..n {
        mean[j] = s2 * first[j].re;
        mean[n + j] = s2 * first[j].im;
    }
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let delta = if j == k { half } else { T::zero() };
            let m = mm[(j, k)];
            let nv = (nn[(j, k)] + nn[(k, j)].conj()) * half;
            cov[(j, k)] = m.re + nv.re + delta - mean[j] * mean[k];
            cov[(n + j, n + k)] = -m.re + nv.re + delta - mean[n + j] * mean[n + k];
            let xp = m.im + nv.im - mean[j] * mean[n + k];
            cov[(j, n + k)] = xp;
            cov[(n + k, j)] = xp;
        }
    }
    let cov = (&cov + cov.transpose()) * half;
    Ok(GaussianMoments { mean, covariance: cov })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockState;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).amax() < tol
    }

    #[test]
    fn vacuum_is_valid_and_pure() {
        let v = GaussianMoments::<f64>::vacuum(3);
        let r = is_valid_covariance(&v);
        assert_eq!(r, Validity { positive_definite: true, uncertainty_ok: true, pure: true });
        assert!((v.vacuum_probability().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn validity_examples() {
        let small = GaussianMoments::new(DVector::zeros(2), DMatrix::identity(2, 2) * 0.1).unwrap();
        let r = is_valid_covariance(&small);
        assert!(r.positive_definite && !r.uncertainty_ok);
        let thermal = GaussianMoments::new(DVector::zeros(2), DMatrix::identity(2, 2) * 2.0).unwrap();
        let r = is_valid_covariance(&thermal);
        assert!(r.positive_definite && r.uncertainty_ok && !r.pure);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            GaussianMoments::<f64>::new(DVector::zeros(3), DMatrix::identity(3, 3)),
            Err(Error::DimensionMismatch(_))
        ));
        let mut m = DMatrix::<f64>::identity(2, 2);
        m[(0, 1)] = 0.1;
        assert!(matches!(GaussianMoments::new(DVector::zeros(2), m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn zero_adjacency_gives_vacuum() {
        let out = covariance_from_adjacency(&DMatrix::<f64>::zeros(3, 3)).unwrap();
        assert!(close(out.moments.covariance(), &(DMatrix::identity(6, 6) * 0.5), 1e-15));
        assert!(out.validity.is_physical() && out.validity.pure);
    }

    #[test]
    fn two_node_adjacency_matches_direct_inverse() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.2, 0.2, 0.0]);
        let out = covariance_from_adjacency(&a).unwrap();
        // oracle: invert I - X diag(A, A) with a general LU, then change basis by hand
        let mut k = DMatrix::<f64>::identity(4, 4);
        for (i, j) in [(0, 3), (1, 2), (2, 1), (3, 0)] {
            k[(i, j)] = -0.2;
        }
        let sc = k.try_inverse().unwrap() - DMatrix::identity(4, 4) * 0.5;
        // x_j = (a_j + a_j^dagger)/sqrt2, p_j = (a_j - a_j^dagger)/(i sqrt2)
        let w = |i: usize, j: usize| -> Complex<f64> {
            let h = 0.5f64.sqrt();
            let (mode_i, mode_j) = (i % 2, j % 2);
            if mode_i != mode_j {
                return Complex::new(0.0, 0.0);
            }
            let sign = if j < 2 { 1.0 } else { -1.0 };
            if i < 2 {
                Complex::new(h, 0.0)
            } else {
                Complex::new(0.0, -h * sign)
            }
        };
        let wm = DMatrix::from_fn(4, 4, w);
        let want = (&wm * sc.map(|v| Complex::new(v, 0.0)) * wm.adjoint()).map(|z| z.re);
        assert!(close(out.moments.covariance(), &want, 1e-12));
        assert!(max_asymmetry(out.moments.covariance()) < 1e-12);
        assert!(out.validity.is_physical());
    }

    #[test]
    fn adjacency_covariance_matches_two_mode_squeezing() {
        // B = [[0, t], [t, 0]] is a two-mode squeezed vacuum with tanh r = t
        let t = 0.4f64;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, t, t, 0.0]);
        let cov = covariance_from_adjacency(&a).unwrap().moments.covariance().clone();
        let r = t.atanh();
        let (ch, sh) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
        // <x1 x2> = sinh(2r)/2 and <p1 p2> = -sinh(2r)/2 for this sign of B
        assert!((cov[(0, 0)] - ch).abs() < 1e-12);
        assert!((cov[(0, 1)].abs() - sh).abs() < 1e-12);
        assert!((cov[(2, 3)] + cov[(0, 1)]).abs() < 1e-12);
    }

    #[test]
    fn singular_resolvent() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(covariance_from_adjacency(&a), Err(Error::Singular(_))));
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(matches!(covariance_from_adjacency(&a), Err(Error::Singular(_))));
    }

    #[test]
    fn doubled_covariance_shapes() {
        let z = DMatrix::<f64>::zeros(3, 3);
        let m = doubled_covariance(&z, ScalingParams { c: 0.0, d: 0.7 }).unwrap();
        assert_eq!(m.covariance().nrows(), 12);
        assert!(close(m.covariance(), &(DMatrix::identity(12, 12) * 0.5), 1e-15));
        assert!(doubled_covariance(&z, ScalingParams { c: 0.0, d: 0.0 }).is_err());
    }

    #[test]
    fn scaling_search() {
        let z = DMatrix::<f64>::zeros(2, 2);
        let s = search_scaling(&z, &ScalingGrid::default()).unwrap();
        assert_eq!(s, ScalingParams { c: 0.0, d: 0.01 });
        let empty = ScalingGrid::<f64> { c_values: vec![], d_values: vec![0.1] };
        assert_eq!(
            search_scaling(&z, &empty),
            Err(Error::ScalingNotFound { c_points: 0, d_points: 1 })
        );
        let star = crate::graph::WeightedGraph::star(4).unwrap().adjacency::<f64>();
        let s = search_scaling(&star, &ScalingGrid::default()).unwrap();
        let m = doubled_covariance(&star, s).unwrap();
        assert!(is_valid_covariance(&m).is_physical());
    }

    #[test]
    fn propagate_examples() {
        let v = GaussianMoments::<f64>::vacuum(1);
        assert_eq!(propagate(&v, &[]).unwrap(), v);
        let s = propagate_gates(&v, &[GateSpec::squeeze(0, 0.3, 0.0)]).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[(-0.6f64).exp() / 2.0, 0.0, 0.0, 0.6f64.exp() / 2.0]);
        assert!(close(s.covariance(), &want, 1e-14));
        let r = propagate_gates(&v, &[GateSpec::rotation(0, 1.2)]).unwrap();
        assert!(close(r.covariance(), v.covariance(), 1e-15));
        let bad = SymplecticAction::<f64>::identity(2);
        assert!(matches!(propagate(&v, &[bad]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn fock_moments_vacuum_and_displaced() {
        let v = FockState::<f64>::vacuum(2, 6).unwrap();
        let m = moments_from_fock(&v).unwrap();
        assert!(close(m.covariance(), &(DMatrix::identity(4, 4) * 0.5), 1e-15));
        assert!(m.mean().amax() == 0.0);

        let alpha = Complex::new(0.4, -0.3);
        let s = FockState::<f64>::vacuum(1, 25)
            .unwrap()
            .apply_single_mode(0, &crate::gates::displacement_fock(alpha, 25).unwrap())
            .unwrap();
        let m = moments_from_fock(&s).unwrap();
        let s2 = 2f64.sqrt();
        assert!((m.mean()[0] - s2 * alpha.re).abs() < 1e-8);
        assert!((m.mean()[1] - s2 * alpha.im).abs() < 1e-8);
        assert!(close(m.covariance(), &(DMatrix::identity(2, 2) * 0.5), 1e-8));
    }

    #[test]
    fn fock_moments_squeezed_match_propagation() {
        let g = GateSpec::squeeze(0, 0.3, 0.0);
        let s = FockState::<f64>::vacuum(1, 25)
            .unwrap()
            .apply_single_mode(0, &g.fock_matrix(25).unwrap())
            .unwrap();
        let fock = moments_from_fock(&s).unwrap();
        let oracle = propagate_gates(&GaussianMoments::vacuum(1), &[g]).unwrap();
        assert!(close(fock.covariance(), oracle.covariance(), 1e-4));
    }

    #[test]
    fn vacuum_probability_of_coherent_state() {
        let v = GaussianMoments::<f64>::vacuum(1);
        let d = propagate_gates(&v, &[GateSpec::displacement(0, 0.7, 0.4)]).unwrap();
        assert!((d.vacuum_probability().unwrap() - (-0.49f64).exp()).abs() < 1e-12);
    }
}
