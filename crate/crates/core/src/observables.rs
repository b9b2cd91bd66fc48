//! Pauli strings and the elementary gate matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, identity, tensor, tensor_all, ComplexMatrix, C64, I, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(ch: char) -> Option<Self> {
        match ch.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Single-qubit Pauli matrix in the `(|0>, |1>)` basis with `Z = |1><1| - |0><0|`,
/// `Y = -i|1><0| + i|0><1|` and `X = |1><0| + |0><1|`.
pub fn pauli(p: Pauli) -> ComplexMatrix {
    let m = match p {
        Pauli::I => [ONE, ZERO, ZERO, ONE],
        Pauli::X => [ZERO, ONE, ONE, ZERO],
        Pauli::Y => [ZERO, I, -I, ZERO],
        Pauli::Z => [-ONE, ZERO, ZERO, ONE],
    };
    ComplexMatrix::from_row_slice(2, 2, &m)
}

/// Signed tensor product of single-qubit Paulis. Text form is the sign followed
/// by one letter per qubit in slot order, e.g. `+XIZY`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    factors: Vec<Pauli>,
    negative: bool,
}

impl PauliString {
    pub fn new(factors: Vec<Pauli>, negative: bool) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Empty("Pauli string"));
        }
        Ok(Self { factors, negative })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            factors: vec![Pauli::I; n_qubits.max(1)],
            negative: false,
        }
    }

    /// `p` on qubit `q` of an `n_qubits` register.
    pub fn single(n_qubits: usize, q: usize, p: Pauli) -> Result<Self> {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
        let mut factors = vec![Pauli::I; n_qubits];
        factors[q] = p;
        Self::new(factors, false)
    }

    pub fn n_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.factors
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn negated(&self) -> Self {
        Self {
            factors: self.factors.clone(),
            negative: !self.negative,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(|&p| p == Pauli::I)
    }

    /// Qubits carrying a non-identity factor.
    pub fn support(&self) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    /// Two Pauli strings commute iff they differ on an even number of slots
    /// where both are non-identity.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        assert_eq!(self.n_qubits(), other.n_qubits(), "register size mismatch");
        self.factors
            .iter()
            .zip(&other.factors)
            .filter(|(&a, &b)| a != Pauli::I && b != Pauli::I && a != b)
            .count()
            % 2
            == 0
    }

    pub fn matrix(&self) -> ComplexMatrix {
        pauli_matrix(self)
    }

    /// The string placed on `targets` of a larger register.
    pub fn embedded(&self, targets: &[usize], n_qubits: usize) -> Result<PauliString> {
        if targets.len() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                found: targets.len(),
            });
        }
        let mut factors = vec![Pauli::I; n_qubits];
        for (k, &t) in targets.iter().enumerate() {
            if t >= n_qubits {
                return Err(Error::QubitOutOfRange { index: t, n_qubits });
            }
            if targets[..k].contains(&t) {
                return Err(Error::DuplicateQubit(t));
            }
            factors[t] = self.factors[k];
        }
        PauliString::new(factors, self.negative)
    }
}

pub fn pauli_matrix(p: &PauliString) -> ComplexMatrix {
    let mats: Vec<ComplexMatrix> = p.factors.iter().map(|&f| pauli(f)).collect();
    let m = tensor_all(mats.iter());
    if p.negative {
        -m
    } else {
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.negative { '-' } else { '+' })?;
        for p in &self.factors {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (negative, body) = match s.chars().next() {
            Some('+') => (false, &s[1..]),
            Some('-') => (true, &s[1..]),
            _ => (false, s),
        };
        let factors = body
            .chars()
            .map(Pauli::from_char)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::ParsePauli(s.to_string()))?;
        if factors.is_empty() {
            return Err(Error::ParsePauli(s.to_string()));
        }
        Ok(Self { factors, negative })
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }
}

/// `exp[-i (angle/2) P] = cos(angle/2) I - i sin(angle/2) P`.
pub fn rotation_gate(axis: Axis, angle: f64) -> ComplexMatrix {
    let (s, co) = (angle / 2.0).sin_cos();
    identity(2).map(|z| z * co) + pauli(axis.pauli()).map(|z| z * c(0.0, -s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntanglingKind {
    Cz,
    Zx90,
}

/// The two native entangling gates, first slot is the control.
///
/// `CZ = |1><1| (x) Z + |0><0| (x) I`, which with this crate's `Z` sign is
/// `diag(1, 1, -1, 1)`; it is not symmetric under swapping the qubits.
/// `ZX90 = exp(-i (pi/4) Z (x) X)`.
pub fn entangling_gate(kind: EntanglingKind) -> ComplexMatrix {
    let z = pauli(Pauli::Z);
    match kind {
        EntanglingKind::Cz => {
            let one = PauliProjector::One.matrix();
            let zero = PauliProjector::Zero.matrix();
            tensor(&one, &z) + tensor(&zero, &identity(2))
        }
        EntanglingKind::Zx90 => {
            let zx = tensor(&z, &pauli(Pauli::X));
            let h = std::f64::consts::FRAC_1_SQRT_2;
            identity(4).map(|v| v * h) + zx.map(|v| v * c(0.0, -h))
        }
    }
}

/// Computational-basis projectors `|0><0|` and `|1><1|`.
#[derive(Clone, Copy, Debug)]
pub enum PauliProjector {
    Zero,
    One,
}

impl PauliProjector {
    pub fn matrix(self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(2, 2);
        match self {
            PauliProjector::Zero => m[(0, 0)] = ONE,
            PauliProjector::One => m[(1, 1)] = ONE,
        }
        m
    }
}

/// Ancilla coupling `exp[-i (phi/2) A (x) Y]` on system (x) ancilla, with the
/// ancilla in the last slot. Closed form relies on `A^2 = 1`.
pub fn coupling_unitary(a: &PauliString, phi: f64) -> ComplexMatrix {
    coupling_unitary_for(&a.matrix(), phi)
}

/// Same as [`coupling_unitary`] for an arbitrary involutory matrix.
pub fn coupling_unitary_for(a: &ComplexMatrix, phi: f64) -> ComplexMatrix {
    let (s, co) = (phi / 2.0).sin_cos();
    let ay = tensor(a, &pauli(Pauli::Y));
    identity(ay.nrows()).map(|z| z * co) + ay.map(|z| z * C64::new(0.0, -s))
}
