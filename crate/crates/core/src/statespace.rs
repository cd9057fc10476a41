//! Dense complex linear algebra on the truncated Fock space and on the
//! (two-level atom) ⊗ (field) product space.
//!
//! Joint states are stored as a single amplitude vector of length `2 * dim`:
//! the first `dim` entries are the field amplitudes attached to the atomic
//! level `|+⟩`, the next `dim` entries those attached to `|−⟩`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Absolute tolerance for "this state is normalized".
pub const STATE_TOLERANCE: f64 = 1e-9;
/// Absolute tolerance for matrix identities (Hermiticity, trace).
pub const MATRIX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateSpaceError {
    #[error("Fock space dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("Fock truncation too small for |alpha|^2 = {mean_photons}: need dim >= {required}, got {dim}")]
    Truncation {
        mean_photons: f64,
        required: usize,
        dim: usize,
    },
    #[error("generator is not Hermitian (max |H - H^dagger| = {0:e})")]
    NotHermitian(f64),
    #[error("shape mismatch: expected length {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Smallest Fock dimension that keeps the Poisson tail of a coherent state
/// with mean photon number `mean_photons` negligible (`n + 10 sqrt(n) + 20`).
pub fn required_dim(mean_photons: f64) -> usize {
    let n = mean_photons.max(0.0);
    (n + 10.0 * n.sqrt() + 20.0).ceil() as usize
}

/// Ladder operators on the Fock levels `|0⟩ .. |dim-1⟩`.
#[derive(Debug, Clone)]
pub struct FockSpace {
    dim: usize,
    lowering: CMatrix,
    number: CMatrix,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self, StateSpaceError> {
        make_fock_space(dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The annihilation operator `a`.
    pub fn lowering(&self) -> &CMatrix {
        &self.lowering
    }

    /// The creation operator `a†`.
    pub fn raising(&self) -> CMatrix {
        self.lowering.adjoint()
    }

    /// The number operator `a†a`, diagonal `(0, 1, .., dim-1)`.
    pub fn number(&self) -> &CMatrix {
        &self.number
    }

    /// The quadrature `a + a†`.
    pub fn quadrature(&self) -> CMatrix {
        &self.lowering + self.lowering.adjoint()
    }
}

pub fn make_fock_space(dim: usize) -> Result<FockSpace, StateSpaceError> {
    if dim < 2 {
        return Err(StateSpaceError::InvalidDimension(dim));
    }
    let mut lowering = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        lowering[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let number = CMatrix::from_diagonal(&CVector::from_iterator(
        dim,
        (0..dim).map(|n| Complex64::new(n as f64, 0.0)),
    ));
    Ok(FockSpace { dim, lowering, number })
}

/// Truncated coherent state `|alpha⟩` on `dim` Fock levels, renormalized.
///
/// Fails when `dim` is below [`required_dim`] for `|alpha|^2`.
pub fn coherent_state(alpha: Complex64, dim: usize) -> Result<CVector, StateSpaceError> {
    if dim < 2 {
        return Err(StateSpaceError::InvalidDimension(dim));
    }
    let mean = alpha.norm_sqr();
    let required = required_dim(mean);
    if dim < required {
        return Err(StateSpaceError::Truncation {
            mean_photons: mean,
            required,
            dim,
        });
    }
    let mut v = CVector::zeros(dim);
    v[0] = Complex64::new((-0.5 * mean).exp(), 0.0);
    for n in 1..dim {
        v[n] = v[n - 1] * alpha / (n as f64).sqrt();
    }
    let norm = v.norm();
    Ok(v / Complex64::new(norm, 0.0))
}

/// `Σ n |c_n|^2` for a single field block (not renormalized).
pub fn block_mean_photon(block: &[Complex64]) -> f64 {
    block.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
}

/// Amplitudes on (atom) ⊗ (field), `|+⟩` block first.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    dim: usize,
    amplitudes: CVector,
}

impl JointState {
    pub fn new(dim: usize, amplitudes: CVector) -> Result<Self, StateSpaceError> {
        if dim < 2 {
            return Err(StateSpaceError::InvalidDimension(dim));
        }
        if amplitudes.len() != 2 * dim {
            return Err(StateSpaceError::ShapeMismatch {
                expected: 2 * dim,
                got: amplitudes.len(),
            });
        }
        Ok(Self { dim, amplitudes })
    }

    /// `(c_plus |+⟩ + c_minus |−⟩) ⊗ |field⟩`.
    pub fn product(c_plus: Complex64, c_minus: Complex64, field: &CVector) -> Result<Self, StateSpaceError> {
        Self::from_blocks(&(field * c_plus), &(field * c_minus))
    }

    /// `|+⟩ ⊗ |plus⟩ + |−⟩ ⊗ |minus⟩`, blocks taken as given (no normalization).
    pub fn from_blocks(plus: &CVector, minus: &CVector) -> Result<Self, StateSpaceError> {
        if plus.len() != minus.len() {
            return Err(StateSpaceError::ShapeMismatch {
                expected: plus.len(),
                got: minus.len(),
            });
        }
        let dim = plus.len();
        let amplitudes = CVector::from_iterator(2 * dim, plus.iter().chain(minus.iter()).copied());
        Self::new(dim, amplitudes)
    }

    /// The atom in `(|+⟩ + |−⟩)/√2`, the field in vacuum.
    pub fn initial(dim: usize) -> Result<Self, StateSpaceError> {
        let mut vacuum = CVector::zeros(dim.max(1));
        vacuum[0] = Complex64::new(1.0, 0.0);
        let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::product(c, c, &vacuum)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut CVector {
        &mut self.amplitudes
    }

    pub fn plus_block(&self) -> &[Complex64] {
        &self.amplitudes.as_slice()[..self.dim]
    }

    pub fn minus_block(&self) -> &[Complex64] {
        &self.amplitudes.as_slice()[self.dim..]
    }

    /// Mutable access to the `|+⟩` (`index == 0`) or `|−⟩` (`index == 1`) block.
    pub fn block_mut(&mut self, index: usize) -> &mut [Complex64] {
        let dim = self.dim;
        &mut self.amplitudes.as_mut_slice()[index * dim..(index + 1) * dim]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn mean_photon(&self) -> f64 {
        block_mean_photon(self.plus_block()) + block_mean_photon(self.minus_block())
    }

    /// `P(n)` summed over both atomic levels.
    pub fn photon_distribution(&self) -> Vec<f64> {
        self.plus_block()
            .iter()
            .zip(self.minus_block())
            .map(|(p, m)| p.norm_sqr() + m.norm_sqr())
            .collect()
    }

    pub fn vacuum_probability(&self) -> f64 {
        self.plus_block()[0].norm_sqr() + self.minus_block()[0].norm_sqr()
    }

    /// `Tr(ρ_field^2)` without forming the density matrix.
    pub fn field_purity(&self) -> f64 {
        let pp = block_norm_sqr(self.plus_block());
        let mm = block_norm_sqr(self.minus_block());
        let pm = block_inner(self.plus_block(), self.minus_block());
        pp * pp + mm * mm + 2.0 * pm.norm_sqr()
    }

    /// `|⟨φ+|φ−⟩| / (‖φ+‖ ‖φ−‖)`: overlap of the two normalized field branches.
    /// Zero if either branch is empty.
    pub fn atom_coherence(&self) -> f64 {
        let pp = block_norm_sqr(self.plus_block());
        let mm = block_norm_sqr(self.minus_block());
        if pp == 0.0 || mm == 0.0 {
            return 0.0;
        }
        block_inner(self.plus_block(), self.minus_block()).norm() / (pp * mm).sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &JointState) -> Result<Complex64, StateSpaceError> {
        if self.dim != other.dim {
            return Err(StateSpaceError::ShapeMismatch {
                expected: 2 * self.dim,
                got: 2 * other.dim,
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|⟨self|other⟩|^2`.
    pub fn fidelity(&self, other: &JointState) -> Result<f64, StateSpaceError> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

fn block_norm_sqr(block: &[Complex64]) -> f64 {
    block.iter().map(|c| c.norm_sqr()).sum()
}

fn block_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self, StateSpaceError> {
        if entries.nrows() != entries.ncols() {
            return Err(StateSpaceError::ShapeMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn mean_photon(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.entries[(n, n)].re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermitian within 1e-12, unit trace within 1e-12, eigenvalues ≥ −1e-10.
    pub fn is_physical(&self) -> bool {
        let tr = self.trace();
        self.hermiticity_error() <= MATRIX_TOLERANCE
            && (tr.re - 1.0).abs() <= MATRIX_TOLERANCE
            && tr.im.abs() <= MATRIX_TOLERANCE
            && self.min_eigenvalue() >= -1e-10
    }
}

/// Trace out the atom: `ρ = |φ+⟩⟨φ+| + |φ−⟩⟨φ−|`.
pub fn reduce_to_field(state: &JointState) -> DensityMatrix {
    let plus = CVector::from_column_slice(state.plus_block());
    let minus = CVector::from_column_slice(state.minus_block());
    let entries = &plus * plus.adjoint() + &minus * minus.adjoint();
    DensityMatrix { entries }
}

/// `max |H_ij − conj(H_ji)|`.
pub fn hermiticity_error(h: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..h.nrows() {
        for j in i..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_hermitian(h: &CMatrix) -> Result<(), StateSpaceError> {
    if h.nrows() != h.ncols() {
        return Err(StateSpaceError::ShapeMismatch {
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    let scale = h.iter().map(|c| c.norm()).fold(1.0_f64, f64::max);
    let err = hermiticity_error(h);
    if err > MATRIX_TOLERANCE * scale {
        return Err(StateSpaceError::NotHermitian(err));
    }
    Ok(())
}

/// `exp(−iHt)` for Hermitian `H`, via its spectral decomposition.
pub fn unitary_propagator(h: &CMatrix, t: f64) -> Result<CMatrix, StateSpaceError> {
    check_hermitian(h)?;
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda * t);
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= phase;
        }
    }
    Ok(scaled * v.adjoint())
}

/// `exp(−iHt) v`; `H` must be Hermitian within 1e-12 (relative to its largest entry).
pub fn matrix_exponential_apply(h: &CMatrix, t: f64, v: &CVector) -> Result<CVector, StateSpaceError> {
    if v.len() != h.nrows() {
        return Err(StateSpaceError::ShapeMismatch {
            expected: h.nrows(),
            got: v.len(),
        });
    }
    Ok(unitary_propagator(h, t)? * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fock_space_ladder() {
        let two = make_fock_space(2).unwrap();
        assert_eq!(two.lowering()[(0, 1)], c(1.0, 0.0));
        assert_eq!(two.lowering()[(0, 0)], c(0.0, 0.0));
        assert_eq!(two.lowering()[(1, 0)], c(0.0, 0.0));
        assert_eq!(two.lowering()[(1, 1)], c(0.0, 0.0));

        let three = make_fock_space(3).unwrap();
        assert!((three.lowering()[(1, 2)].re - std::f64::consts::SQRT_2).abs() < 1e-15);

        let forty = make_fock_space(40).unwrap();
        for n in 0..40 {
            assert_eq!(forty.number()[(n, n)], c(n as f64, 0.0));
        }
    }

    #[test]
    fn fock_space_rejects_small_dim() {
        assert_eq!(make_fock_space(1).unwrap_err(), StateSpaceError::InvalidDimension(1));
        assert!(make_fock_space(0).is_err());
    }

    #[test]
    fn commutator_is_identity_except_last_level() {
        let fock = make_fock_space(12).unwrap();
        let a = fock.lowering();
        let ad = fock.raising();
        let comm = a * &ad - &ad * a;
        for n in 0..11 {
            assert!((comm[(n, n)] - c(1.0, 0.0)).norm() < 1e-14);
        }
        assert!((comm[(11, 11)] - c(-11.0, 0.0)).norm() < 1e-13);
        // a†a agrees with a a† − 1 on the retained levels
        let shifted = a * &ad - CMatrix::identity(12, 12);
        for n in 0..11 {
            assert!((shifted[(n, n)] - fock.number()[(n, n)]).norm() < 1e-14);
        }
    }

    #[test]
    fn coherent_state_examples() {
        let vac = coherent_state(c(0.0, 0.0), 30).unwrap();
        assert_eq!(vac[0], c(1.0, 0.0));
        assert!(vac.iter().skip(1).all(|z| z.norm() == 0.0));

        let small = coherent_state(c(0.0, -0.02), 40).unwrap();
        assert!((block_mean_photon(small.as_slice()) - 4.0e-4).abs() < 1e-12);

        let two = coherent_state(c(2.0, 0.0), 60).unwrap();
        // e^{-4}
        assert!((two[0].norm_sqr() - 0.018_315_638_888_734_18).abs() < 1e-14);
        assert!((block_mean_photon(two.as_slice()) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn coherent_state_truncation_error() {
        // |alpha|^2 = 25 needs 25 + 50 + 20 = 95 levels
        match coherent_state(c(5.0, 0.0), 60) {
            Err(StateSpaceError::Truncation { required, dim, .. }) => {
                assert_eq!(required, 95);
                assert_eq!(dim, 60);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn reduce_product_state_is_pure() {
        let state = JointState::initial(8).unwrap();
        let rho = reduce_to_field(&state);
        assert!((rho.entries()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-15);
        assert!(rho.is_physical());
    }

    #[test]
    fn reduce_orthogonal_branches_is_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut plus = CVector::zeros(6);
        let mut minus = CVector::zeros(6);
        plus[0] = c(s, 0.0);
        minus[3] = c(0.0, s);
        let state = JointState::from_blocks(&plus, &minus).unwrap();
        let rho = reduce_to_field(&state);
        assert!((rho.purity() - 0.5).abs() < 1e-15);
        assert!((state.field_purity() - 0.5).abs() < 1e-15);
        assert!((rho.mean_photon() - state.mean_photon()).abs() < 1e-15);
        assert!(rho.is_physical());
    }

    #[test]
    fn expm_zero_generator_is_identity() {
        let h = CMatrix::zeros(3, 3);
        let v = CVector::from_vec(vec![c(1.0, 0.5), c(-0.2, 0.0), c(0.0, 0.3)]);
        let out = matrix_exponential_apply(&h, 2.0, &v).unwrap();
        assert!((out - &v).norm() < 1e-15);
    }

    #[test]
    fn expm_diagonal_phase() {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        let v = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let out = matrix_exponential_apply(&h, std::f64::consts::PI, &v).unwrap();
        assert!((out[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((out[1] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = c(1.0, 0.0);
        let v = CVector::zeros(2);
        assert!(matches!(
            matrix_exponential_apply(&h, 1.0, &v),
            Err(StateSpaceError::NotHermitian(_))
        ));
    }
}
