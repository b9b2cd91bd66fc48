//! Random instances for randomized identity checks.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{expm_hermitian, ComplexMatrix, ComplexVector, DensityMatrix, PureState, C64};
use crate::observables::{Pauli, PauliString};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| gaussian(rng))
}

pub fn random_pure<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> PureState {
    let v = ComplexVector::from_fn(1 << n_qubits, |_, _| gaussian(rng));
    PureState::normalized(v).expect("gaussian vector is nonzero")
}

/// Full-rank mixed state `G G^dagger / Tr(G G^dagger)`.
pub fn random_density<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(1 << n_qubits, rng);
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m.map(|z| z / tr)).expect("Wishart matrix is a valid state")
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, rng);
    (&g + g.adjoint()).map(|z| z * 0.5)
}

pub fn random_unitary<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> ComplexMatrix {
    let h = random_hermitian(1 << n_qubits, rng);
    expm_hermitian(&h, 1.0).expect("hermitian by construction")
}

/// Uniformly random non-identity Pauli string with a random sign.
pub fn random_pauli<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> PauliString {
    const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    loop {
        let factors: Vec<Pauli> = (0..n_qubits).map(|_| LETTERS[rng.gen_range(0..4)]).collect();
        let p = PauliString::new(factors, rng.gen()).expect("nonempty");
        if !p.is_identity() {
            return p;
        }
    }
}

/// Uniform on `(0, pi/2]`.
pub fn random_phi<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    FRAC_PI_2 * (1.0 - rng.gen::<f64>())
}
