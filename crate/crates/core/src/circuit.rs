//! Gate-level circuits and synthesis of the ancilla-coupled measurement
//! circuits from the native `CZ` or `ZX90` entangling gate.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::linalg::{apply_local_left, identity, unitarity_error, ComplexMatrix, CHECK_TOL};
use crate::measurement::MeasurementKind;
use crate::observables::{entangling_gate, rotation_gate, Axis, EntanglingKind, Pauli, PauliString};

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Rx { target: usize, angle: f64 },
    Ry { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    Cz { control: usize, target: usize },
    Zx90 { control: usize, target: usize },
    Custom { targets: Vec<usize>, matrix: ComplexMatrix },
}

impl Gate {
    pub fn targets(&self) -> Vec<usize> {
        match self {
            Gate::Rx { target, .. } | Gate::Ry { target, .. } | Gate::Rz { target, .. } => {
                vec![*target]
            }
            Gate::Cz { control, target } | Gate::Zx90 { control, target } => {
                vec![*control, *target]
            }
            Gate::Custom { targets, .. } => targets.clone(),
        }
    }

    pub fn matrix(&self) -> ComplexMatrix {
        match self {
            Gate::Rx { angle, .. } => rotation_gate(Axis::X, *angle),
            Gate::Ry { angle, .. } => rotation_gate(Axis::Y, *angle),
            Gate::Rz { angle, .. } => rotation_gate(Axis::Z, *angle),
            Gate::Cz { .. } => entangling_gate(EntanglingKind::Cz),
            Gate::Zx90 { .. } => entangling_gate(EntanglingKind::Zx90),
            Gate::Custom { matrix, .. } => matrix.clone(),
        }
    }

    /// Gates (in time order) realizing the inverse up to a global phase, drawn
    /// from the same gate set. `ZX90^dagger` is `ZX90 (Z (x) X)` up to phase.
    pub fn inverse(&self) -> Vec<Gate> {
        match self {
            Gate::Rx { target, angle } => vec![Gate::Rx { target: *target, angle: -angle }],
            Gate::Ry { target, angle } => vec![Gate::Ry { target: *target, angle: -angle }],
            Gate::Rz { target, angle } => vec![Gate::Rz { target: *target, angle: -angle }],
            Gate::Cz { .. } => vec![self.clone()],
            Gate::Zx90 { control, target } => vec![
                Gate::Rz { target: *control, angle: PI },
                Gate::Rx { target: *target, angle: PI },
                self.clone(),
            ],
            Gate::Custom { targets, matrix } => vec![Gate::Custom {
                targets: targets.clone(),
                matrix: matrix.adjoint(),
            }],
        }
    }

    pub fn is_entangling(&self) -> bool {
        matches!(self, Gate::Cz { .. } | Gate::Zx90 { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let targets = gate.targets();
        for (k, &t) in targets.iter().enumerate() {
            if t >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: t,
                    n_qubits: self.n_qubits,
                });
            }
            if targets[..k].contains(&t) {
                return Err(Error::DuplicateQubit(t));
            }
        }
        if let Gate::Custom { matrix, targets } = &gate {
            if matrix.nrows() != 1 << targets.len() {
                return Err(Error::DimensionMismatch {
                    expected: 1 << targets.len(),
                    found: matrix.nrows(),
                });
            }
            let dev = unitarity_error(matrix);
            if dev > CHECK_TOL {
                return Err(Error::NotUnitary { deviation: dev });
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = Gate>>(&mut self, gates: I) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    /// Full-register unitary, first gate applied first.
    pub fn unitary(&self) -> ComplexMatrix {
        let mut u = identity(1 << self.n_qubits);
        for g in &self.gates {
            apply_local_left(&mut u, &g.matrix(), &g.targets(), self.n_qubits)
                .expect("gate targets validated on push");
        }
        u
    }

    pub fn entangling_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_entangling()).count()
    }
}

fn inverse_sequence(gates: &[Gate]) -> Vec<Gate> {
    gates.iter().rev().flat_map(Gate::inverse).collect()
}

/// Gates whose conjugation maps `Z_target` to `Z_control Z_target`, i.e. an
/// `X` on `target` conditioned on `control` being `|0>`.
fn parity_gadget(gateset: EntanglingKind, control: usize, target: usize) -> Vec<Gate> {
    match gateset {
        EntanglingKind::Cz => vec![
            Gate::Rx { target, angle: PI },
            Gate::Ry { target, angle: -FRAC_PI_2 },
            Gate::Cz { control, target },
            Gate::Ry { target, angle: FRAC_PI_2 },
        ],
        EntanglingKind::Zx90 => vec![
            Gate::Zx90 { control, target },
            Gate::Rx { target, angle: -FRAC_PI_2 },
        ],
    }
}

/// Single-qubit rotation taking `Z` to `p` under conjugation.
fn local_frame(p: Pauli, target: usize) -> Option<Gate> {
    match p {
        Pauli::I | Pauli::Z => None,
        Pauli::X => Some(Gate::Ry { target, angle: FRAC_PI_2 }),
        Pauli::Y => Some(Gate::Rx { target, angle: -FRAC_PI_2 }),
    }
}

/// Gates for a Clifford `U_A` with `U_A Z_pivot U_A^dagger = A`, where the
/// pivot is the first qubit in the support of `A`. Returns `(pivot, gates)`.
pub fn basis_change(a: &PauliString, gateset: EntanglingKind) -> Result<(usize, Vec<Gate>)> {
    let support = a.support();
    let &pivot = support.first().ok_or(Error::IdentityObservable)?;
    let mut gates = Vec::new();
    if a.is_negative() {
        gates.push(Gate::Rx { target: pivot, angle: PI });
    }
    for &q in &support[1..] {
        gates.extend(parity_gadget(gateset, q, pivot));
    }
    for &q in &support {
        gates.extend(local_frame(a.factors()[q], q));
    }
    Ok((pivot, gates))
}

/// Gates for `exp[-i (phi/2) Z_pivot (x) Y_ancilla]` up to a global phase.
pub fn coupling_gates(gateset: EntanglingKind, pivot: usize, ancilla: usize, phi: f64) -> Vec<Gate> {
    match gateset {
        EntanglingKind::Cz => {
            let flip = parity_gadget(EntanglingKind::Cz, pivot, ancilla);
            let mut g = flip.clone();
            g.push(Gate::Ry { target: ancilla, angle: phi });
            g.extend(flip);
            g
        }
        EntanglingKind::Zx90 => vec![
            Gate::Rz { target: pivot, angle: PI },
            Gate::Rx { target: ancilla, angle: PI },
            Gate::Zx90 { control: pivot, target: ancilla },
            Gate::Rz { target: ancilla, angle: -phi },
            Gate::Zx90 { control: pivot, target: ancilla },
        ],
    }
}

/// A synthesized measurement: the system occupies slots `0..n`, the ancilla
/// is the last slot, starts in `|0>` and is read out in the `z` basis at the end.
#[derive(Clone, Debug)]
pub struct MeasurementCircuit {
    pub circuit: Circuit,
    pub system_qubits: usize,
    pub ancilla: usize,
    pub kind: MeasurementKind,
    pub gateset: EntanglingKind,
}

impl MeasurementCircuit {
    /// System operators `<a| U |0>` on the ancilla, indexed by outcome `a`.
    pub fn induced_kraus(&self) -> [ComplexMatrix; 2] {
        let u = self.circuit.unitary();
        let dim = 1 << self.system_qubits;
        let pick = |a: usize| ComplexMatrix::from_fn(dim, dim, |i, j| u[((i << 1) | a, j << 1)]);
        [pick(0), pick(1)]
    }
}

/// Builds the ancilla circuit measuring `a` with strength `phi`.
///
/// Layout: prepare `|x->` on the ancilla (`Ry(pi/2)|0> = -|x->`), rotate `A`
/// onto the pivot's `Z` with `U_A^dagger`, couple pivot and ancilla, undo the
/// frame with `U_A`, and for the noninformative kind rotate the ancilla with
/// `Rx(pi/2)` so that the final `z` readout realizes the `y` basis.
pub fn synthesize_measurement_circuit(
    a: &PauliString,
    phi: f64,
    kind: MeasurementKind,
    gateset: EntanglingKind,
) -> Result<MeasurementCircuit> {
    if a.is_identity() {
        return Err(Error::IdentityObservable);
    }
    if !(phi > 0.0 && phi <= FRAC_PI_2) {
        return Err(Error::PhiOutOfRange(phi));
    }
    let n = a.n_qubits();
    let ancilla = n;
    let (pivot, frame) = basis_change(a, gateset)?;
    let mut circuit = Circuit::new(n + 1);
    circuit.push(Gate::Ry { target: ancilla, angle: FRAC_PI_2 })?;
    circuit.extend(inverse_sequence(&frame))?;
    circuit.extend(coupling_gates(gateset, pivot, ancilla, phi))?;
    circuit.extend(frame)?;
    if kind == MeasurementKind::Noninformative {
        circuit.push(Gate::Rx { target: ancilla, angle: FRAC_PI_2 })?;
    }
    Ok(MeasurementCircuit {
        circuit,
        system_qubits: n,
        ancilla,
        kind,
        gateset,
    })
}
