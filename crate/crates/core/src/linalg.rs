//! Dense complex linear algebra on qubit registers.
//!
//! Conventions used throughout the crate:
//!
//! * Qubit 0 is the most significant tensor slot. For an `n`-qubit register the
//!   bit of qubit `q` inside a basis index `i` is `(i >> (n - 1 - q)) & 1`, and
//!   `tensor(a, b)` places `a` on the lower-numbered qubits.
//! * The computational basis follows the superconducting-qubit labeling:
//!   `|0>` is the ground state and `Z = |1><1| - |0><0|`, so `Z|1> = +|1>`.
//!   This is the opposite sign of the usual quantum-computing `Z`; every
//!   matrix produced here uses it consistently.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Tolerance for Hermiticity, unitarity and trace checks.
pub const CHECK_TOL: f64 = 1e-10;
/// Residual allowed after re-symmetrizing a density matrix.
pub const REPAIR_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a density matrix.
pub const EIGEN_FLOOR: f64 = -1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Kronecker product with `a` as the most significant factor.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn tensor_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| tensor(&acc, f))
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.trace()
}

pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

pub fn unitarity_error(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(m.adjoint() * m), &identity(m.nrows()))
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    hermiticity_error(m) <= tol
}

pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    unitarity_error(m) <= tol
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Distance between `u` and `v` after removing the best relative global phase:
/// `max |u - e^{i theta} v|` with `theta = arg Tr(v^dagger u)`, the phase that
/// minimizes the Frobenius distance.
pub fn phase_distance(u: &ComplexMatrix, v: &ComplexMatrix) -> f64 {
    let overlap: C64 = v.iter().zip(u.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    max_abs_diff(u, &v.map(|z| z * phase))
}

/// Number of qubits for a `dim`-dimensional register, if `dim` is a power of two.
pub fn qubits_for_dim(dim: usize) -> Option<usize> {
    (dim.is_power_of_two()).then(|| dim.trailing_zeros() as usize)
}

fn check_targets(targets: &[usize], n_qubits: usize) -> Result<()> {
    for (k, &t) in targets.iter().enumerate() {
        if t >= n_qubits {
            return Err(Error::QubitOutOfRange {
                index: t,
                n_qubits,
            });
        }
        if targets[..k].contains(&t) {
            return Err(Error::DuplicateQubit(t));
        }
    }
    Ok(())
}

/// Bit offsets of each local basis index of `targets` inside the full register.
fn local_offsets(targets: &[usize], n_qubits: usize) -> Vec<usize> {
    let k = targets.len();
    (0..1usize << k)
        .map(|l| {
            targets
                .iter()
                .enumerate()
                .filter(|(j, _)| (l >> (k - 1 - j)) & 1 == 1)
                .map(|(_, &q)| 1usize << (n_qubits - 1 - q))
                .sum()
        })
        .collect()
}

/// Left-multiplies `mat` in place by `u` acting on `targets` (identity elsewhere).
/// The first entry of `targets` is the most significant slot of `u`.
pub fn apply_local_left(
    mat: &mut ComplexMatrix,
    u: &ComplexMatrix,
    targets: &[usize],
    n_qubits: usize,
) -> Result<()> {
    check_targets(targets, n_qubits)?;
    let local = 1usize << targets.len();
    if u.nrows() != local || u.ncols() != local {
        return Err(Error::DimensionMismatch {
            expected: local,
            found: u.nrows(),
        });
    }
    let full = 1usize << n_qubits;
    if mat.nrows() != full {
        return Err(Error::DimensionMismatch {
            expected: full,
            found: mat.nrows(),
        });
    }
    let offsets = local_offsets(targets, n_qubits);
    let mask: usize = offsets.iter().fold(0, |m, o| m | o);
    let mut gathered = vec![ZERO; local];
    for col in 0..mat.ncols() {
        let mut column = mat.column_mut(col);
        for base in (0..full).filter(|b| b & mask == 0) {
            for (g, off) in gathered.iter_mut().zip(&offsets) {
                *g = column[base | off];
            }
            for (row, off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (m, g) in gathered.iter().enumerate() {
                    acc += u[(row, m)] * g;
                }
                column[base | off] = acc;
            }
        }
    }
    Ok(())
}

/// Embeds `u` on `targets` of an `n_qubits` register.
pub fn embed(u: &ComplexMatrix, targets: &[usize], n_qubits: usize) -> Result<ComplexMatrix> {
    let mut out = identity(1 << n_qubits);
    apply_local_left(&mut out, u, targets, n_qubits)?;
    Ok(out)
}

/// `exp(-i t H)` for Hermitian `h`, via its eigendecomposition.
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let dev = hermiticity_error(h);
    if dev > CHECK_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let eig = hermitian_eigen(h);
    Ok(eig.function(|e| (-I * t * e).exp()))
}

/// Eigendecomposition `H = V diag(e) V^dagger` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V diag(f(e)) V^dagger`.
    pub fn function(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &e) in self.values.iter().enumerate() {
            let fe = f(e);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= fe);
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn hermitian_eigen(h: &ComplexMatrix) -> HermitianEigen {
    let n = h.nrows();
    let m = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| {
        let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
        faer::c64::new(z.re, z.im)
    });
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("Hermitian eigendecomposition converges for finite input");
    let (s, u) = (eig.S(), eig.U());
    HermitianEigen {
        values: (0..n).map(|k| s[k].re).collect(),
        vectors: ComplexMatrix::from_fn(n, n, |i, j| C64::new(u[(i, j)].re, u[(i, j)].im)),
    }
}

/// A normalized state vector on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: ComplexVector,
}

impl PureState {
    pub fn new(amplitudes: ComplexVector) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len()).ok_or_else(|| {
            Error::InvalidState(format!("length {} is not a power of two", amplitudes.len()))
        })?;
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > REPAIR_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Normalizes `amplitudes` before validation.
    pub fn normalized(amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Self::new(amplitudes / C64::from(norm))
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if n_qubits == 0 || index >= dim {
            return Err(Error::InvalidState(format!(
                "basis index {index} invalid for {n_qubits} qubits"
            )));
        }
        let mut v = ComplexVector::zeros(dim);
        v[index] = ONE;
        Self::new(v)
    }

    /// Computational basis state from a bit label such as `"0110"` (qubit 0 first).
    pub fn from_label(label: &str) -> Result<Self> {
        if label.is_empty() {
            return Err(Error::InvalidState("empty basis label".into()));
        }
        let mut index = 0usize;
        for ch in label.chars() {
            index <<= 1;
            match ch {
                '0' => {}
                '1' => index |= 1,
                other => {
                    return Err(Error::InvalidState(format!(
                        "basis label character {other:?} is not 0 or 1"
                    )))
                }
            }
        }
        Self::basis(label.len(), index)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: self.projector(),
        }
    }
}

/// Positive semidefinite, unit-trace operator on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and the eigenvalue floor, then
    /// re-symmetrizes.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        let n_qubits = qubits_for_dim(matrix.nrows()).ok_or_else(|| {
            Error::InvalidState(format!("dimension {} is not a power of two", matrix.nrows()))
        })?;
        if n_qubits == 0 {
            return Err(Error::InvalidState("need at least one qubit".into()));
        }
        if !is_finite(&matrix) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm = hermiticity_error(&matrix);
        if herm > CHECK_TOL {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > CHECK_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let state = Self { n_qubits, matrix }.repaired();
        let min_eig = hermitian_eigen(&state.matrix)
            .values
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < EIGEN_FLOOR {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(state)
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            n_qubits,
            matrix: identity(dim).map(|z| z / dim as f64),
        }
    }

    pub fn from_pure(state: &PureState) -> Self {
        state.to_density()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    fn repaired(mut self) -> Self {
        let sym = (&self.matrix + self.matrix.adjoint()).map(|z| z * 0.5);
        self.matrix = sym;
        self
    }

    /// `rho (x) other` with `self` on the lower-numbered qubits.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits + other.n_qubits,
            matrix: tensor(&self.matrix, &other.matrix),
        }
    }

    /// `U rho U^dagger` with `u` embedded on `targets`.
    pub fn apply_unitary(&self, u: &ComplexMatrix, targets: &[usize]) -> Result<DensityMatrix> {
        let dev = unitarity_error(u);
        if dev > CHECK_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        let mut left = self.matrix.clone();
        apply_local_left(&mut left, u, targets, self.n_qubits)?;
        let mut both = left.adjoint();
        apply_local_left(&mut both, u, targets, self.n_qubits)?;
        Ok(DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: both.adjoint(),
        }
        .repaired())
    }

    /// `U rho U^dagger` for a full-register unitary.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<DensityMatrix> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.nrows(),
            });
        }
        let dev = unitarity_error(u);
        if dev > CHECK_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        Ok(DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: u * &self.matrix * u.adjoint(),
        }
        .repaired())
    }

    /// `Tr(obs rho)`.
    pub fn expectation(&self, obs: &ComplexMatrix) -> Result<C64> {
        if obs.nrows() != self.dim() || obs.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: obs.nrows(),
            });
        }
        Ok(trace_product(obs, &self.matrix))
    }

    /// Reduced state on `keep`, in the order listed.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        check_targets(keep, self.n_qubits)?;
        if keep.is_empty() {
            return Err(Error::Empty("kept qubit list"));
        }
        let traced: Vec<usize> = (0..self.n_qubits).filter(|q| !keep.contains(q)).collect();
        let keep_off = local_offsets(keep, self.n_qubits);
        let traced_off = local_offsets(&traced, self.n_qubits);
        let dim = keep_off.len();
        let out = ComplexMatrix::from_fn(dim, dim, |i, j| {
            traced_off
                .iter()
                .map(|t| self.matrix[(keep_off[i] | t, keep_off[j] | t)])
                .sum()
        });
        Ok(DensityMatrix {
            n_qubits: keep.len(),
            matrix: out,
        }
        .repaired())
    }
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{pauli, Pauli};

    fn ket(v: &[C64]) -> PureState {
        PureState::normalized(ComplexVector::from_column_slice(v)).unwrap()
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
    }

    #[test]
    fn zz_eigenvalue_on_one_zero() {
        let zz = tensor(&pauli(Pauli::Z), &pauli(Pauli::Z));
        let state = PureState::from_label("10").unwrap();
        let v = state.to_density().expectation(&zz).unwrap();
        assert!((v - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn kronecker_matches_nested_loops() {
        let x = pauli(Pauli::X);
        let y = pauli(Pauli::Y);
        let k = tensor(&x, &y);
        let mut oracle = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                for k2 in 0..2 {
                    for l in 0..2 {
                        oracle[(2 * i + k2, 2 * j + l)] = x[(i, j)] * y[(k2, l)];
                    }
                }
            }
        }
        assert_eq!(k, oracle);
    }

    #[test]
    fn apply_identity_and_bit_flip() {
        let rho = PureState::from_label("0").unwrap().to_density();
        let same = rho.apply_unitary(&identity(2), &[0]).unwrap();
        assert!(max_abs_diff(same.matrix(), rho.matrix()) < 1e-15);
        let flipped = rho.apply_unitary(&pauli(Pauli::X), &[0]).unwrap();
        let one = PureState::from_label("1").unwrap().to_density();
        assert!(max_abs_diff(flipped.matrix(), one.matrix()) < 1e-15);
    }

    #[test]
    fn cz_on_one_xplus_gives_xminus_marginal() {
        // CZ = |1><1| (x) Z + |0><0| (x) I, written out by hand
        let cz = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![
            ONE,
            ONE,
            -ONE,
            ONE,
        ]));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x_plus = ket(&[c(s, 0.0), c(s, 0.0)]);
        let x_minus = ket(&[c(-s, 0.0), c(s, 0.0)]);
        let one = PureState::from_label("1").unwrap();
        let rho = one.to_density().tensor(&x_plus.to_density());
        let out = rho.apply_unitary(&cz, &[0, 1]).unwrap();
        let marginal = out.partial_trace(&[1]).unwrap();
        assert!(max_abs_diff(marginal.matrix(), &x_minus.projector()) < 1e-14);
    }

    #[test]
    fn apply_unitary_rejects_bad_input() {
        let rho = DensityMatrix::maximally_mixed(2);
        let not_unitary = identity(2).map(|z| z * 2.0);
        assert!(matches!(
            rho.apply_unitary(&not_unitary, &[0]),
            Err(Error::NotUnitary { .. })
        ));
        assert!(matches!(
            rho.apply_unitary(&pauli(Pauli::X), &[2]),
            Err(Error::QubitOutOfRange { .. })
        ));
        let cz = identity(4);
        assert!(matches!(
            rho.apply_unitary(&cz, &[1, 1]),
            Err(Error::DuplicateQubit(1))
        ));
    }

    #[test]
    fn expectation_examples() {
        let z = pauli(Pauli::Z);
        let one = PureState::from_label("1").unwrap().to_density();
        assert!((one.expectation(&z).unwrap() - ONE).norm() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!(mixed.expectation(&z).unwrap().norm() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let y_plus = ket(&[c(0.0, s), c(s, 0.0)]);
        let ex = y_plus.to_density().expectation(&pauli(Pauli::X)).unwrap();
        assert!(ex.norm() < 1e-15);
        let ey = y_plus.to_density().expectation(&pauli(Pauli::Y)).unwrap();
        assert!((ey - ONE).norm() < 1e-15);
        assert!(matches!(
            mixed.expectation(&identity(4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let rho = DensityMatrix::maximally_mixed(2);
        let all = rho.partial_trace(&[0, 1]).unwrap();
        assert!(max_abs_diff(all.matrix(), rho.matrix()) < 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sys = ket(&[c(0.3, 0.1), c(0.2, -0.9)]).to_density();
        let anc = PureState::from_label("0").unwrap().to_density();
        let joint = sys.tensor(&anc);
        let back = joint.partial_trace(&[0]).unwrap();
        assert!(max_abs_diff(back.matrix(), sys.matrix()) < 1e-15);

        let bell = ket(&[c(s, 0.0), ZERO, ZERO, c(s, 0.0)]).to_density();
        let half = bell.partial_trace(&[1]).unwrap();
        assert!(max_abs_diff(half.matrix(), DensityMatrix::maximally_mixed(1).matrix()) < 1e-15);

        assert!(matches!(
            bell.partial_trace(&[0, 0]),
            Err(Error::DuplicateQubit(0))
        ));
        assert!(matches!(
            bell.partial_trace(&[5]),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(identity(2)).is_err());
        let neg = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(DensityMatrix::new(neg).is_err());
        let mut non_herm = DensityMatrix::maximally_mixed(1).into_matrix();
        non_herm[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(
            DensityMatrix::new(non_herm),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let x = pauli(Pauli::X);
        let rotated = x.map(|z| z * C64::from_polar(1.0, 0.7));
        assert!(phase_distance(&rotated, &x) < 1e-15);
        assert!(phase_distance(&pauli(Pauli::Z), &x) > 0.5);
    }

    #[test]
    fn expm_hermitian_matches_closed_form() {
        let z = pauli(Pauli::Z);
        let u = expm_hermitian(&z, 0.3).unwrap();
        assert!((u[(0, 0)] - (I * 0.3).exp()).norm() < 1e-14);
        assert!((u[(1, 1)] - (-I * 0.3).exp()).norm() < 1e-14);
    }
}
