//! Multi-mode states in a truncated Fock basis.
//!
//! Amplitudes are stored densely, mode-major: the photon count of mode 0 is
//! the most significant digit of the flat index. Every mode shares one cutoff.
//! Quadratures follow the `hbar = 2` convention, `x = a + a^dagger`,
//! `p = -i (a - a^dagger)`, so the vacuum has unit quadrature variance.

use crate::error::{Error, Result};
use crate::scalar::{c_real, from_usize, lit, norm_sqr, Real};
use nalgebra::{Complex, DMatrix};

/// Default memory budget for a single state vector (2 GiB).
pub const DEFAULT_MEMORY_BUDGET: u128 = 2 << 30;

/// Value of hbar used for quadrature operators and the Wigner function.
pub const HBAR: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct FockState<T: Real> {
    n_modes: usize,
    cutoff: usize,
    amps: Vec<Complex<T>>,
}

/// Number of amplitudes in a state of `n_modes` at `cutoff`, checked against a byte budget.
pub fn state_dimension<T: Real>(n_modes: usize, cutoff: usize, budget_bytes: u128) -> Result<usize> {
    if n_modes == 0 {
        return Err(Error::InvalidArgument("a state needs at least one mode".into()));
    }
    if cutoff < 2 {
        return Err(Error::InvalidArgument(format!("cutoff must be at least 2, got {cutoff}")));
    }
    let elem = std::mem::size_of::<Complex<T>>() as u128;
    let mut dim: u128 = 1;
    for _ in 0..n_modes {
        dim = dim.saturating_mul(cutoff as u128);
    }
    let required = dim.saturating_mul(elem);
    if required > budget_bytes || dim > usize::MAX as u128 {
        return Err(Error::Sizing {
            n_modes,
            cutoff,
            required_bytes: required,
            budget_bytes,
        });
    }
    Ok(dim as usize)
}

/// Vacuum state `|0,...,0>` under the default memory budget.
pub fn new_vacuum<T: Real>(n_modes: usize, cutoff: usize) -> Result<FockState<T>> {
    FockState::vacuum(n_modes, cutoff)
}

impl<T: Real> FockState<T> {
    pub fn vacuum(n_modes: usize, cutoff: usize) -> Result<Self> {
        Self::vacuum_with_budget(n_modes, cutoff, DEFAULT_MEMORY_BUDGET)
    }

    pub fn vacuum_with_budget(n_modes: usize, cutoff: usize, budget_bytes: u128) -> Result<Self> {
        let dim = state_dimension::<T>(n_modes, cutoff, budget_bytes)?;
        let mut amps = vec![Complex::new(T::zero(), T::zero()); dim];
        amps[0] = c_real(T::one());
        Ok(Self {
            n_modes,
            cutoff,
            amps,
        })
    }

    /// The product Fock state `|counts[0], counts[1], ...>`.
    pub fn basis(n_modes: usize, cutoff: usize, counts: &[usize]) -> Result<Self> {
        let mut s = Self::vacuum(n_modes, cutoff)?;
        let idx = s.index_of(counts)?;
        s.amps[0] = c_real(T::zero());
        s.amps[idx] = c_real(T::one());
        Ok(s)
    }

    pub fn from_amplitudes(n_modes: usize, cutoff: usize, amps: Vec<Complex<T>>) -> Result<Self> {
        let dim = state_dimension::<T>(n_modes, cutoff, DEFAULT_MEMORY_BUDGET)?;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {n_modes} modes at cutoff {cutoff} (expected {dim})",
                amps.len()
            )));
        }
        Ok(Self {
            n_modes,
            cutoff,
            amps,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }

    pub fn amplitude(&self, counts: &[usize]) -> Result<Complex<T>> {
        Ok(self.amps[self.index_of(counts)?])
    }

    /// Squared norm; below one once probability has leaked past the cutoff.
    pub fn norm_sqr(&self) -> T {
        self.amps.iter().fold(T::zero(), |acc, a| acc + norm_sqr(*a))
    }

    /// Stride of `mode` in the flat amplitude index.
    pub fn stride(&self, mode: usize) -> usize {
        self.cutoff.pow((self.n_modes - 1 - mode) as u32)
    }

    pub fn index_of(&self, counts: &[usize]) -> Result<usize> {
        if counts.len() != self.n_modes {
            return Err(Error::DimensionMismatch(format!(
                "{} photon counts for {} modes",
                counts.len(),
                self.n_modes
            )));
        }
        let mut idx = 0;
        for &n in counts {
            if n >= self.cutoff {
                return Err(Error::InvalidArgument(format!(
                    "photon count {n} not below cutoff {}",
                    self.cutoff
                )));
            }
            idx = idx * self.cutoff + n;
        }
        Ok(idx)
    }

    pub fn counts_of(&self, index: usize) -> Vec<usize> {
        counts_of(index, self.n_modes, self.cutoff)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::InvalidArgument(format!(
                "mode {mode} out of range for {} modes",
                self.n_modes
            )));
        }
        Ok(())
    }

    /// Contracts a `cutoff x cutoff` gate with the amplitudes along one mode axis.
    pub fn apply_single_mode(&self, mode: usize, gate: &DMatrix<Complex<T>>) -> Result<Self> {
        self.check_mode(mode)?;
        let c = self.cutoff;
        if gate.nrows() != c || gate.ncols() != c {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} gate on a mode with cutoff {c}",
                gate.nrows(),
                gate.ncols()
            )));
        }
        let mut rows = Vec::with_capacity(c * c);
        for m in 0..c {
            for k in 0..c {
                rows.push(gate[(m, k)]);
            }
        }
        let stride = self.stride(mode);
        let block = stride * c;
        let zero = Complex::new(T::zero(), T::zero());
        let mut out = vec![zero; self.amps.len()];
        let mut buf = vec![zero; c];
        for outer in (0..self.amps.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = self.amps[base + k * stride];
                }
                for m in 0..c {
                    let row = &rows[m * c..(m + 1) * c];
                    let mut acc = zero;
                    for (g, b) in row.iter().zip(&buf) {
                        acc += *g * *b;
                    }
                    out[base + m * stride] = acc;
                }
            }
        }
        Ok(Self {
            n_modes: self.n_modes,
            cutoff: c,
            amps: out,
        })
    }

    /// Applies a gate that is diagonal in the Fock basis of one mode.
    pub fn apply_diagonal(&self, mode: usize, diag: &[Complex<T>]) -> Result<Self> {
        self.check_mode(mode)?;
        let c = self.cutoff;
        if diag.len() != c {
            return Err(Error::DimensionMismatch(format!(
                "diagonal of length {} on a mode with cutoff {c}",
                diag.len()
            )));
        }
        let stride = self.stride(mode);
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| *a * diag[(i / stride) % c])
            .collect();
        Ok(Self {
            n_modes: self.n_modes,
            cutoff: c,
            amps,
        })
    }

    /// Contracts a `cutoff^2 x cutoff^2` gate over two mode axes. Row and
    /// column indices of the gate are `n_a * cutoff + n_b`.
    pub fn apply_two_mode(&self, mode_a: usize, mode_b: usize, gate: &DMatrix<Complex<T>>) -> Result<Self> {
        let c = self.cutoff;
        if gate.nrows() != c * c || gate.ncols() != c * c {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} two-mode gate at cutoff {c}",
                gate.nrows(),
                gate.ncols()
            )));
        }
        self.apply_two_mode_sparse(mode_a, mode_b, &SparseTwoMode::from_dense(gate))
    }

    pub fn apply_two_mode_sparse(&self, mode_a: usize, mode_b: usize, gate: &SparseTwoMode<T>) -> Result<Self> {
        self.check_mode(mode_a)?;
        self.check_mode(mode_b)?;
        if mode_a == mode_b {
            return Err(Error::InvalidArgument(format!(
                "two-mode gate needs distinct modes, got {mode_a} twice"
            )));
        }
        let c = self.cutoff;
        if gate.cutoff != c {
            return Err(Error::DimensionMismatch(format!(
                "two-mode gate built for cutoff {} applied at cutoff {c}",
                gate.cutoff
            )));
        }
        let sa = self.stride(mode_a);
        let sb = self.stride(mode_b);
        // flat offsets of each (n_a, n_b) pair
        let offsets: Vec<usize> = (0..c * c).map(|p| (p / c) * sa + (p % c) * sb).collect();
        let zero = Complex::new(T::zero(), T::zero());
        let mut out = vec![zero; self.amps.len()];
        for base in 0..self.amps.len() {
            if !(base / sa).is_multiple_of(c) || !(base / sb).is_multiple_of(c) {
                continue;
            }
            for &(row, col, v) in &gate.entries {
                let a = self.amps[base + offsets[col]];
                out[base + offsets[row]] += v * a;
            }
        }
        Ok(Self {
            n_modes: self.n_modes,
            cutoff: c,
            amps: out,
        })
    }

    /// Probability of every photon-count tuple, with the mass lost to
    /// truncation reported as leakage rather than renormalized away.
    pub fn photon_count_distribution(&self) -> OutcomeDistribution<T> {
        let probs: Vec<T> = self.amps.iter().map(|a| norm_sqr(*a)).collect();
        OutcomeDistribution::new(self.n_modes, self.cutoff, probs)
    }

    /// Reduced density matrix of one mode (partial trace over the others).
    pub fn reduce_single_mode(&self, mode: usize) -> Result<SingleModeDensity<T>> {
        self.check_mode(mode)?;
        let c = self.cutoff;
        let stride = self.stride(mode);
        let block = stride * c;
        let mut rho = DMatrix::from_element(c, c, Complex::new(T::zero(), T::zero()));
        for outer in (0..self.amps.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for m in 0..c {
                    let am = self.amps[base + m * stride];
                    if am.re == T::zero() && am.im == T::zero() {
                        continue;
                    }
                    for n in 0..c {
                        rho[(m, n)] += am * self.amps[base + n * stride].conj();
                    }
                }
            }
        }
        Ok(SingleModeDensity { matrix: rho })
    }
}

/// Photon counts encoded by a flat index.
pub fn counts_of(mut index: usize, n_modes: usize, cutoff: usize) -> Vec<usize> {
    let mut counts = vec![0; n_modes];
    for slot in counts.iter_mut().rev() {
        *slot = index % cutoff;
        index /= cutoff;
    }
    counts
}

/// Non-zero entries of a two-mode gate, stored as `(row, col, value)`.
#[derive(Clone, Debug)]
pub struct SparseTwoMode<T: Real> {
    pub cutoff: usize,
    pub entries: Vec<(usize, usize, Complex<T>)>,
}

impl<T: Real> SparseTwoMode<T> {
    pub fn from_dense(gate: &DMatrix<Complex<T>>) -> Self {
        let c = (gate.nrows() as f64).sqrt().round() as usize;
        let mut entries = Vec::new();
        for col in 0..gate.ncols() {
            for row in 0..gate.nrows() {
                let v = gate[(row, col)];
                if v.re != T::zero() || v.im != T::zero() {
                    entries.push((row, col, v));
                }
            }
        }
        Self { cutoff: c, entries }
    }
}

/// Photon-counting outcome probabilities over all tuples below the cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution<T: Real> {
    n_modes: usize,
    cutoff: usize,
    probs: Vec<T>,
    leakage: T,
}

impl<T: Real> OutcomeDistribution<T> {
    /// Builds a distribution from dense probabilities indexed like [`FockState`].
    pub fn new(n_modes: usize, cutoff: usize, probs: Vec<T>) -> Self {
        let total = probs.iter().fold(T::zero(), |a, &p| a + p);
        let leakage = (T::one() - total).max(T::zero());
        Self {
            n_modes,
            cutoff,
            probs,
            leakage,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Probability mass lost to truncation, `1 - sum of probabilities`.
    pub fn leakage(&self) -> T {
        self.leakage
    }

    pub fn probabilities(&self) -> &[T] {
        &self.probs
    }

    pub fn total(&self) -> T {
        self.probs.iter().fold(T::zero(), |a, &p| a + p)
    }

    pub fn probability(&self, counts: &[usize]) -> T {
        if counts.len() != self.n_modes || counts.iter().any(|&n| n >= self.cutoff) {
            return T::zero();
        }
        let idx = counts.iter().fold(0, |acc, &n| acc * self.cutoff + n);
        self.probs[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, T)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (counts_of(i, self.n_modes, self.cutoff), p))
    }

    /// Most probable photon-count tuple; ties go to the lowest flat index.
    pub fn most_probable(&self) -> (Vec<usize>, T) {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        (counts_of(best, self.n_modes, self.cutoff), self.probs[best])
    }

    /// Total probability per zero/non-zero pattern. Entry `mask` holds the
    /// mass of outcomes whose mode `k` is non-zero exactly when bit
    /// `n_modes - 1 - k` of `mask` is set (mode 0 is the high bit).
    pub fn pattern_masses(&self) -> Vec<T> {
        let n = self.n_modes;
        let c = self.cutoff;
        let mut masses = vec![T::zero(); 1 << n];
        // mask of each flat index, built digit by digit
        let mut masks = vec![0usize; 1];
        for _ in 0..n {
            let mut next = Vec::with_capacity(masks.len() * c);
            for &m in &masks {
                next.push(m << 1);
                for _ in 1..c {
                    next.push((m << 1) | 1);
                }
            }
            masks = next;
        }
        for (p, m) in self.probs.iter().zip(masks) {
            masses[m] += *p;
        }
        masses
    }
}

/// Reduced density operator of a single mode.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleModeDensity<T: Real> {
    pub matrix: DMatrix<Complex<T>>,
}

impl<T: Real> SingleModeDensity<T> {
    pub fn new(matrix: DMatrix<Complex<T>>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi|` for a single-mode amplitude vector.
    pub fn from_pure(amps: &[Complex<T>]) -> Self {
        let c = amps.len();
        Self {
            matrix: DMatrix::from_fn(c, c, |m, n| amps[m] * amps[n].conj()),
        }
    }

    /// `|n><n|` at the given cutoff.
    pub fn fock(n: usize, cutoff: usize) -> Self {
        let mut matrix = DMatrix::from_element(cutoff, cutoff, Complex::new(T::zero(), T::zero()));
        matrix[(n, n)] = c_real(T::one());
        Self { matrix }
    }

    pub fn cutoff(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> T {
        (0..self.cutoff()).fold(T::zero(), |a, i| a + self.matrix[(i, i)].re)
    }

    /// Largest `|rho - rho^dagger|` entry.
    pub fn hermiticity_error(&self) -> T {
        let c = self.cutoff();
        let mut worst = T::zero();
        for i in 0..c {
            for j in 0..c {
                let d = self.matrix[(i, j)] - self.matrix[(j, i)].conj();
                worst = worst.max(norm_sqr(d).sqrt());
            }
        }
        worst
    }
}

fn check_grid<T: Real>(name: &str, grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument(format!("{name} grid is empty")));
    }
    let increasing = grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = grid.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::InvalidArgument(format!("{name} grid is not monotone")));
    }
    Ok(())
}

/// Wigner quasi-probability of a single-mode density on an `x` by `p` grid.
///
/// Row `i`, column `j` of the result holds `W(x_grid[i], p_grid[j])`. The
/// function integrates to the trace of the density over the phase plane
/// (`hbar = 2`, so the vacuum is a unit-variance Gaussian).
pub fn wigner<T: Real>(density: &SingleModeDensity<T>, x_grid: &[T], p_grid: &[T]) -> Result<DMatrix<T>> {
    check_grid("x", x_grid)?;
    check_grid("p", p_grid)?;
    let rho = &density.matrix;
    let c = density.cutoff();
    let two = lit::<T>(2.0);
    let pi = T::pi();
    let hbar = lit::<T>(HBAR);
    let scale = (hbar / two).sqrt() * two;
    let sqrt_n: Vec<T> = (0..c).map(|n| from_usize::<T>(n).sqrt()).collect();
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = DMatrix::zeros(x_grid.len(), p_grid.len());
    let mut w = vec![zero; c];
    for (i, &x) in x_grid.iter().enumerate() {
        for (j, &p) in p_grid.iter().enumerate() {
            // Laguerre-type recurrence over the Wigner functions of |m><n|
            let alpha = Complex::new(x / scale, p / scale);
            let two_a = alpha * two;
            let two_ac = alpha.conj() * two;
            w[0] = c_real((-two * norm_sqr(alpha)).exp() / pi);
            let mut acc = rho[(0, 0)].re * w[0].re;
            for n in 1..c {
                w[n] = two_a * w[n - 1] / sqrt_n[n];
                acc += two * (rho[(0, n)] * w[n]).re;
            }
            for m in 1..c {
                let mut temp = w[m];
                w[m] = (two_ac * temp - w[m - 1] * sqrt_n[m]) / sqrt_n[m];
                acc += (rho[(m, m)] * w[m]).re;
                for n in (m + 1)..c {
                    let next = (two_a * w[n - 1] - temp * sqrt_n[m]) / sqrt_n[n];
                    temp = w[n];
                    w[n] = next;
                    acc += two * (rho[(m, n)] * w[n]).re;
                }
            }
            out[(i, j)] = acc / hbar;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn vacuum_layout() {
        let s = FockState::<f64>::vacuum(1, 4).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let s = FockState::<f64>::vacuum(2, 3).unwrap();
        assert_eq!(s.dim(), 9);
        assert_eq!(s.amplitude(&[0, 0]).unwrap(), c(1.0, 0.0));
        assert_eq!(s.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);
        let s = FockState::<f64>::vacuum(4, 17).unwrap();
        assert_eq!(s.dim(), 83521);
        assert_eq!(s.norm_sqr(), 1.0);
    }

    #[test]
    fn sizing_errors() {
        let err = FockState::<f64>::vacuum_with_budget(6, 17, 1 << 20).unwrap_err();
        match err {
            Error::Sizing { n_modes, cutoff, .. } => assert_eq!((n_modes, cutoff), (6, 17)),
            e => panic!("unexpected {e:?}"),
        }
        assert!(FockState::<f64>::vacuum(0, 4).is_err());
        assert!(FockState::<f64>::vacuum(2, 1).is_err());
    }

    #[test]
    fn index_round_trip() {
        let s = FockState::<f64>::vacuum(3, 5).unwrap();
        for i in 0..s.dim() {
            assert_eq!(s.index_of(&s.counts_of(i)).unwrap(), i);
        }
        assert_eq!(s.index_of(&[1, 2, 3]).unwrap(), 25 + 10 + 3);
    }

    #[test]
    fn identity_and_phase_gates() {
        let s = FockState::<f64>::basis(2, 3, &[1, 2]).unwrap();
        let id = DMatrix::identity(3, 3);
        assert_eq!(s.apply_single_mode(1, &id).unwrap(), s);
        let id2 = DMatrix::identity(9, 9);
        assert_eq!(s.apply_two_mode(0, 1, &id2).unwrap(), s);
        let phase = DMatrix::from_fn(3, 3, |m, n| if m == n { crate::scalar::cis(0.7 * m as f64) } else { c(0.0, 0.0) });
        let v = FockState::<f64>::vacuum(2, 3).unwrap();
        assert_eq!(v.apply_single_mode(0, &phase).unwrap(), v);
    }

    #[test]
    fn gate_acts_on_chosen_axis() {
        // swap |0> and |1> on mode 1 only
        let mut x = DMatrix::from_element(3, 3, c(0.0, 0.0));
        x[(0, 1)] = c(1.0, 0.0);
        x[(1, 0)] = c(1.0, 0.0);
        x[(2, 2)] = c(1.0, 0.0);
        let s = FockState::<f64>::basis(3, 3, &[2, 0, 1]).unwrap();
        let out = s.apply_single_mode(1, &x).unwrap();
        assert_eq!(out.amplitude(&[2, 1, 1]).unwrap(), c(1.0, 0.0));
        let diag = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)];
        let out = s.apply_diagonal(2, &diag).unwrap();
        assert_eq!(out.amplitude(&[2, 0, 1]).unwrap(), c(0.0, 1.0));
    }

    #[test]
    fn two_mode_dimension_errors() {
        let s = FockState::<f64>::vacuum(2, 3).unwrap();
        assert!(matches!(
            s.apply_two_mode(0, 0, &DMatrix::identity(9, 9)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            s.apply_two_mode(0, 1, &DMatrix::identity(4, 4)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(s.apply_single_mode(2, &DMatrix::identity(3, 3)).is_err());
        assert!(s.apply_single_mode(0, &DMatrix::identity(4, 4)).is_err());
    }

    #[test]
    fn two_mode_gate_ordering() {
        // two-mode gate that maps |n_a, n_b> -> |n_b, n_a> (a swap)
        let cut = 3;
        let swap = DMatrix::from_fn(9, 9, |r, col| {
            if r == (col % cut) * cut + col / cut {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let s = FockState::<f64>::basis(3, cut, &[2, 1, 0]).unwrap();
        let out = s.apply_two_mode(0, 2, &swap).unwrap();
        assert_eq!(out.amplitude(&[0, 1, 2]).unwrap(), c(1.0, 0.0));
        let out = s.apply_two_mode(2, 1, &swap).unwrap();
        assert_eq!(out.amplitude(&[2, 0, 1]).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn distributions() {
        let v = FockState::<f64>::vacuum(3, 4).unwrap();
        let d = v.photon_count_distribution();
        assert_eq!(d.probability(&[0, 0, 0]), 1.0);
        assert_eq!(d.leakage(), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = FockState::from_amplitudes(1, 3, vec![c(h, 0.0), c(h, 0.0), c(0.0, 0.0)]).unwrap();
        let d = s.photon_count_distribution();
        approx(d.probability(&[0]), 0.5, 1e-15);
        approx(d.probability(&[1]), 0.5, 1e-15);
        let lossy = FockState::from_amplitudes(1, 2, vec![c(0.6, 0.0), c(0.0, 0.6)]).unwrap();
        let d = lossy.photon_count_distribution();
        approx(d.total() + d.leakage(), 1.0, 1e-12);
        approx(d.leakage(), 0.28, 1e-12);
    }

    #[test]
    fn pattern_masses_group_nonzero_counts() {
        let h = 0.5;
        let mut amps = vec![c(0.0, 0.0); 9];
        amps[0] = c(h, 0.0); // (0,0)
        amps[1] = c(h, 0.0); // (0,1)
        amps[2] = c(h, 0.0); // (0,2)
        amps[3 + 1] = c(h, 0.0); // (1,1)
        let s = FockState::from_amplitudes(2, 3, amps).unwrap();
        let m = s.photon_count_distribution().pattern_masses();
        approx(m[0b00], 0.25, 1e-15);
        approx(m[0b01], 0.5, 1e-15);
        approx(m[0b10], 0.0, 1e-15);
        approx(m[0b11], 0.25, 1e-15);
    }

    #[test]
    fn partial_traces() {
        let s = FockState::from_amplitudes(1, 3, vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]).unwrap();
        let rho = s.reduce_single_mode(0).unwrap();
        assert_eq!(rho, SingleModeDensity::from_pure(s.amplitudes()));

        let s = FockState::<f64>::basis(2, 3, &[0, 1]).unwrap();
        let rho = s.reduce_single_mode(0).unwrap();
        assert_eq!(rho, SingleModeDensity::fock(0, 3));

        // (|00> + |11>)/sqrt2 reduces to diag(1/2, 1/2)
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![c(0.0, 0.0); 9];
        amps[0] = c(h, 0.0);
        amps[4] = c(h, 0.0);
        let s = FockState::from_amplitudes(2, 3, amps).unwrap();
        for mode in 0..2 {
            let rho = s.reduce_single_mode(mode).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j && i < 2 { 0.5 } else { 0.0 };
                    approx(rho.matrix[(i, j)].re, want, 1e-15);
                    approx(rho.matrix[(i, j)].im, 0.0, 1e-15);
                }
            }
        }
    }

    #[test]
    fn wigner_grid_validation() {
        let rho = SingleModeDensity::<f64>::fock(0, 3);
        assert!(wigner(&rho, &[], &[0.0]).is_err());
        assert!(wigner(&rho, &[0.0, 1.0, 0.5], &[0.0]).is_err());
        assert!(wigner(&rho, &[1.0, 0.0], &[0.0]).is_ok());
    }

    #[test]
    fn wigner_vacuum_peak_and_single_photon_dip() {
        let grid: Vec<f64> = (0..41).map(|i| -4.0 + 0.2 * i as f64).collect();
        let w = wigner(&SingleModeDensity::fock(0, 4), &grid, &grid).unwrap();
        let max = w.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(w[(20, 20)], max);
        approx(w[(20, 20)], 1.0 / (2.0 * std::f64::consts::PI), 1e-12);
        let w1 = wigner(&SingleModeDensity::fock(1, 4), &[0.0], &[0.0]).unwrap();
        approx(w1[(0, 0)], -1.0 / (2.0 * std::f64::consts::PI), 1e-12);
    }

    #[test]
    fn runs_in_single_precision() {
        let s = FockState::<f32>::vacuum(2, 4).unwrap();
        let d = s.photon_count_distribution();
        assert_eq!(d.probability(&[0, 0]), 1.0f32);
    }
}
