//! Hamiltonians and exact propagators (units with hbar = 1).

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, hermiticity_error, ComplexMatrix, HermitianEigen, C64, CHECK_TOL, I,
};
use crate::observables::{Pauli, PauliString};

/// Default nonintegrable point of the mixed-field Ising chain.
pub const DEFAULT_J: f64 = 1.0;
pub const DEFAULT_G: f64 = 1.05;
pub const DEFAULT_H: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl Hamiltonian {
    pub fn new(terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let n_qubits = terms
            .first()
            .map(|(_, p)| p.n_qubits())
            .ok_or(Error::Empty("Hamiltonian term list"))?;
        for (coef, p) in &terms {
            if p.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: n_qubits,
                    found: p.n_qubits(),
                });
            }
            if !coef.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient on {p}")));
            }
        }
        Ok(Self { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let dim = 1 << self.n_qubits;
        self.terms
            .iter()
            .fold(ComplexMatrix::zeros(dim, dim), |acc, (coef, p)| {
                acc + p.matrix().map(|z| z * *coef)
            })
    }

    /// Whether `p` commutes with every term.
    pub fn commutes_with(&self, p: &PauliString) -> bool {
        self.terms
            .iter()
            .all(|(coef, t)| *coef == 0.0 || t.commutes_with(p))
    }
}

/// `H = -J sum Z_i Z_{i+1} - g sum X_i - h sum Z_i` with open boundaries.
pub fn build_mixed_field_ising(n: usize, j: f64, g: f64, h: f64) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Ising chain needs at least 2 sites, got {n}"
        )));
    }
    let mut terms = Vec::with_capacity(3 * n - 1);
    for i in 0..n - 1 {
        let mut f = vec![Pauli::I; n];
        f[i] = Pauli::Z;
        f[i + 1] = Pauli::Z;
        terms.push((-j, PauliString::new(f, false)?));
    }
    for i in 0..n {
        terms.push((-g, PauliString::single(n, i, Pauli::X)?));
    }
    for i in 0..n {
        terms.push((-h, PauliString::single(n, i, Pauli::Z)?));
    }
    Hamiltonian::new(terms)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Propagator {
    pub matrix: ComplexMatrix,
    pub duration: f64,
}

impl Propagator {
    pub fn dagger(&self) -> Propagator {
        Propagator {
            matrix: self.matrix.adjoint(),
            duration: -self.duration,
        }
    }
}

/// Diagonalized Hamiltonian; propagators at many times reuse one eigendecomposition.
#[derive(Clone, Debug)]
pub struct Spectrum {
    eigen: HermitianEigen,
}

impl Spectrum {
    pub fn new(h: &ComplexMatrix) -> Result<Self> {
        let dev = hermiticity_error(h);
        if dev > CHECK_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(Self {
            eigen: hermitian_eigen(h),
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn propagator(&self, t: f64) -> Propagator {
        Propagator {
            matrix: self.eigen.function(|e| (-I * (t * e)).exp()),
            duration: t,
        }
    }
}

/// `exp(-i t H)`.
pub fn propagator(h: &Hamiltonian, t: f64) -> Result<Propagator> {
    Ok(Spectrum::new(&h.matrix())?.propagator(t))
}

/// `U^dagger B U`.
pub fn heisenberg(obs: &PauliString, u: &Propagator) -> Result<ComplexMatrix> {
    heisenberg_matrix(&obs.matrix(), u)
}

pub fn heisenberg_matrix(obs: &ComplexMatrix, u: &Propagator) -> Result<ComplexMatrix> {
    if obs.shape() != u.matrix.shape() {
        return Err(Error::DimensionMismatch {
            expected: u.matrix.nrows(),
            found: obs.nrows(),
        });
    }
    Ok(u.matrix.adjoint() * obs * &u.matrix)
}

/// Energy expectation `Tr(H rho)` helper.
pub fn energy(h: &ComplexMatrix, rho: &ComplexMatrix) -> C64 {
    crate::linalg::trace_product(h, rho)
}
