//! Ancilla-based generalized measurements of involutory observables.
//!
//! Outcome labels: the ancilla result `a` in `{0, 1}` maps onto the `+`/`-`
//! branches as `(-1)^(1+a)`, so `a = 1` is the `+` branch throughout. The
//! informative pair comes from reading the ancilla in the `z` basis, the
//! noninformative pair from reading it in the `y` basis, both after the
//! coupling `exp[-i (phi/2) A (x) Y]` applied to an ancilla prepared in `|x->`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, expm_hermitian, hermiticity_error, identity, max_abs_diff, ComplexMatrix, ComplexVector,
    DensityMatrix, PureState, C64, CHECK_TOL, ONE,
};
use crate::observables::{pauli, Pauli, PauliString};

/// Overlaps below this magnitude are treated as zero.
pub const OVERLAP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementKind {
    /// Partial collapse onto the eigenbasis of the observable (`M`).
    Informative,
    /// Outcome-tagged unitary kick generated by the observable (`N`).
    Noninformative,
}

pub fn check_phi(phi: f64) -> Result<()> {
    if phi > 0.0 && phi <= FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::PhiOutOfRange(phi))
    }
}

fn check_outcome(outcome: u8) -> Result<()> {
    if outcome <= 1 {
        Ok(())
    } else {
        Err(Error::InvalidOutcome(outcome))
    }
}

/// `(-1)^(1+a)`.
pub fn branch_sign(outcome: u8) -> f64 {
    if outcome == 1 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSpec {
    observable: PauliString,
    phi: f64,
    kind: MeasurementKind,
}

impl MeasurementSpec {
    pub fn new(observable: PauliString, phi: f64, kind: MeasurementKind) -> Result<Self> {
        check_phi(phi)?;
        Ok(Self {
            observable,
            phi,
            kind,
        })
    }

    pub fn observable(&self) -> &PauliString {
        &self.observable
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }
}

/// Kraus operators for the two ancilla outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausPair {
    pub outcome0: ComplexMatrix,
    pub outcome1: ComplexMatrix,
}

impl KrausPair {
    pub fn get(&self, outcome: u8) -> Result<&ComplexMatrix> {
        match outcome {
            0 => Ok(&self.outcome0),
            1 => Ok(&self.outcome1),
            other => Err(Error::InvalidOutcome(other)),
        }
    }

    pub fn both(&self) -> [&ComplexMatrix; 2] {
        [&self.outcome0, &self.outcome1]
    }

    /// `max |K0^dagger K0 + K1^dagger K1 - 1|`.
    pub fn completeness_residual(&self) -> f64 {
        let sum = self.outcome0.adjoint() * &self.outcome0 + self.outcome1.adjoint() * &self.outcome1;
        max_abs_diff(&sum, &identity(sum.nrows()))
    }
}

fn check_involution(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let dev = max_abs_diff(&(a * a), &identity(a.nrows()));
    if dev > CHECK_TOL {
        return Err(Error::NotInvolution { deviation: dev });
    }
    Ok(())
}

/// `M_a = (-1)^(1+a)/sqrt2 [cos(phi/2) 1 + (-1)^(1+a) sin(phi/2) A]`.
pub fn informative_pair(a: &ComplexMatrix, phi: f64) -> Result<KrausPair> {
    check_phi(phi)?;
    check_involution(a)?;
    let (s, co) = (phi / 2.0).sin_cos();
    let id = identity(a.nrows());
    let build = |sign: f64| -> ComplexMatrix {
        (id.map(|z| z * co) + a.map(|z| z * (sign * s))).map(|z| z * (sign / 2f64.sqrt()))
    };
    Ok(KrausPair {
        outcome0: build(-1.0),
        outcome1: build(1.0),
    })
}

/// `N_a = 1/sqrt2 [cos(phi/2) 1 - (-1)^(1+a) i sin(phi/2) A] e^{(-1)^(1+a) i pi/4}`.
pub fn noninformative_pair(a: &ComplexMatrix, phi: f64) -> Result<KrausPair> {
    check_phi(phi)?;
    check_involution(a)?;
    let (s, co) = (phi / 2.0).sin_cos();
    let id = identity(a.nrows());
    let build = |sign: f64| -> ComplexMatrix {
        let phase = C64::from_polar(1.0, sign * std::f64::consts::FRAC_PI_4) / 2f64.sqrt();
        (id.map(|z| z * co) + a.map(|z| z * c(0.0, -sign * s))).map(|z| z * phase)
    };
    Ok(KrausPair {
        outcome0: build(-1.0),
        outcome1: build(1.0),
    })
}

/// Kraus pair for an arbitrary involutory observable matrix.
pub fn pair_for(a: &ComplexMatrix, phi: f64, kind: MeasurementKind) -> Result<KrausPair> {
    match kind {
        MeasurementKind::Informative => informative_pair(a, phi),
        MeasurementKind::Noninformative => noninformative_pair(a, phi),
    }
}

pub fn kraus_pair(spec: &MeasurementSpec) -> KrausPair {
    pair_for(&spec.observable.matrix(), spec.phi, spec.kind)
        .expect("spec angle validated and Pauli strings are involutions")
}

pub fn informative_kraus(spec: &MeasurementSpec) -> Result<KrausPair> {
    if spec.kind != MeasurementKind::Informative {
        return Err(Error::KindMismatch);
    }
    Ok(kraus_pair(spec))
}

pub fn noninformative_kraus(spec: &MeasurementSpec) -> Result<KrausPair> {
    if spec.kind != MeasurementKind::Noninformative {
        return Err(Error::KindMismatch);
    }
    Ok(kraus_pair(spec))
}

/// `alpha_{phi,a} = (-1)^(a+1) / sin(phi)`.
pub fn generalized_eigenvalue(phi: f64, outcome: u8) -> Result<f64> {
    check_phi(phi)?;
    check_outcome(outcome)?;
    Ok(branch_sign(outcome) / phi.sin())
}

/// Detector preparation, coupling observable `D` and readout basis (indexed by outcome).
#[derive(Clone, Debug)]
pub struct DetectorConfig {
    pub initial_state: PureState,
    pub coupling: ComplexMatrix,
    pub readout: [PureState; 2],
}

/// Single-qubit detector states with `|z+> = |1>`, `|y+-> = (|1> +- i|0>)/sqrt2`,
/// `|x+-> = (|1> +- |0>)/sqrt2`.
pub fn detector_state(axis: Pauli, positive: bool) -> PureState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sgn = if positive { 1.0 } else { -1.0 };
    let amps = match axis {
        Pauli::Z | Pauli::I => {
            if positive {
                [c(0.0, 0.0), ONE]
            } else {
                [ONE, c(0.0, 0.0)]
            }
        }
        Pauli::Y => [c(0.0, sgn * h), c(h, 0.0)],
        Pauli::X => [c(sgn * h, 0.0), c(h, 0.0)],
    };
    PureState::new(ComplexVector::from_column_slice(&amps)).expect("unit vector")
}

impl DetectorConfig {
    pub fn new(initial_state: PureState, coupling: ComplexMatrix, readout: [PureState; 2]) -> Result<Self> {
        for s in std::iter::once(&initial_state).chain(readout.iter()) {
            if s.n_qubits() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: s.amplitudes().len(),
                });
            }
        }
        if coupling.shape() != (2, 2) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: coupling.nrows(),
            });
        }
        let dev = hermiticity_error(&coupling);
        if dev > CHECK_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        if readout[0].inner(&readout[1]).norm() > CHECK_TOL {
            return Err(Error::InvalidArgument("readout states are not orthogonal".into()));
        }
        Ok(Self {
            initial_state,
            coupling,
            readout,
        })
    }

    /// `D = Y`, `|psi> = |x->`, readout in `z` (informative) or `y` (noninformative).
    pub fn canonical(kind: MeasurementKind) -> Self {
        let axis = match kind {
            MeasurementKind::Informative => Pauli::Z,
            MeasurementKind::Noninformative => Pauli::Y,
        };
        Self {
            initial_state: detector_state(Pauli::X, false),
            coupling: pauli(Pauli::Y),
            readout: [detector_state(axis, false), detector_state(axis, true)],
        }
    }

    pub fn readout_state(&self, outcome: u8) -> Result<&PureState> {
        check_outcome(outcome)?;
        Ok(&self.readout[outcome as usize])
    }
}

fn bra_op_ket(bra: &PureState, op: &ComplexMatrix, ket: &PureState) -> C64 {
    bra.amplitudes().dotc(&(op * ket.amplitudes()))
}

/// `<a| exp(-i phi lambda D / 2) |psi> / <a|psi>`.
pub fn modular_value(
    lambda: f64,
    phi: f64,
    detector: &DetectorConfig,
    outcome_state: &PureState,
) -> Result<C64> {
    let numerator = bra_op_ket(
        outcome_state,
        &expm_hermitian(&detector.coupling, phi * lambda / 2.0)?,
        &detector.initial_state,
    );
    let overlap = outcome_state.inner(&detector.initial_state);
    if overlap.norm() < OVERLAP_TOL {
        return Err(Error::DivergentModularValue { numerator });
    }
    Ok(numerator / overlap)
}

/// `<a| D^n |psi> / <a|psi>`.
pub fn weak_value(order: u32, detector: &DetectorConfig, outcome_state: &PureState) -> Result<C64> {
    let overlap = outcome_state.inner(&detector.initial_state);
    if overlap.norm() < OVERLAP_TOL {
        return Err(Error::VanishingOverlap);
    }
    let mut power = identity(2);
    for _ in 0..order {
        power = &power * &detector.coupling;
    }
    Ok(bra_op_ket(outcome_state, &power, &detector.initial_state) / overlap)
}

/// Partial sum `sum_{k<terms} (-i phi lambda/2)^k / k! * D_w^(k)` of the
/// weak-value expansion of the modular value.
pub fn modular_value_series(
    lambda: f64,
    phi: f64,
    detector: &DetectorConfig,
    outcome_state: &PureState,
    terms: u32,
) -> Result<C64> {
    let x = c(0.0, -phi * lambda / 2.0);
    let mut coeff = ONE;
    let mut sum = c(0.0, 0.0);
    for k in 0..terms {
        if k > 0 {
            coeff = coeff * x / k as f64;
        }
        sum += coeff * weak_value(k, detector, outcome_state)?;
    }
    Ok(sum)
}

/// Kraus operator `sum_lambda <a| e^{-i phi lambda D/2} |psi> Pi_lambda` for an
/// involutory `A` with eigenprojectors `Pi_{+-} = (1 +- A)/2`.
pub fn detector_kraus(
    a: &ComplexMatrix,
    phi: f64,
    detector: &DetectorConfig,
    outcome: u8,
) -> Result<ComplexMatrix> {
    check_involution(a)?;
    let bra = detector.readout_state(outcome)?;
    let id = identity(a.nrows());
    let mut k = ComplexMatrix::zeros(a.nrows(), a.ncols());
    for lambda in [1.0, -1.0] {
        let amp = bra_op_ket(
            bra,
            &expm_hermitian(&detector.coupling, phi * lambda / 2.0)?,
            &detector.initial_state,
        );
        let proj = (&id + a.map(|z| z * lambda)).map(|z| z * 0.5);
        k += proj.map(|z| z * amp);
    }
    Ok(k)
}

/// Linear form `<a|psi> [cos(phi/2) 1 - i sin(phi/2) D_w A]`, valid when both
/// `D^2 = 1` and `A^2 = 1`.
pub fn qubit_detector_kraus(
    a: &ComplexMatrix,
    phi: f64,
    detector: &DetectorConfig,
    outcome: u8,
) -> Result<ComplexMatrix> {
    check_involution(a)?;
    check_involution(&detector.coupling)?;
    let bra = detector.readout_state(outcome)?;
    let overlap = bra.inner(&detector.initial_state);
    let dw = weak_value(1, detector, bra)?;
    let (s, co) = (phi / 2.0).sin_cos();
    let k = identity(a.nrows()).map(|z| z * co) + a.map(|z| z * (c(0.0, -s) * dw));
    Ok(k.map(|z| z * overlap))
}

/// Least-squares generalized eigenvalues and the residual `|lambda - C alpha|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub alpha: Vec<f64>,
    pub residual: f64,
}

impl Calibration {
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// Solves `lambda = C alpha` with the Moore-Penrose pseudoinverse, where
/// `C[lambda, a]` is the outcome-`a` probability conditioned on the
/// eigenspace of `lambda` (given by its projector in `spectrum`).
pub fn calibrate_generalized_eigenvalues(
    kraus: &KrausPair,
    spectrum: &[(f64, ComplexMatrix)],
) -> Result<Calibration> {
    if spectrum.is_empty() {
        return Err(Error::Empty("spectrum"));
    }
    let effects = kraus.both().map(|k| k.adjoint() * k);
    let mut cmat = DMatrix::<f64>::zeros(spectrum.len(), 2);
    for (row, (_, proj)) in spectrum.iter().enumerate() {
        if proj.shape() != effects[0].shape() {
            return Err(Error::DimensionMismatch {
                expected: effects[0].nrows(),
                found: proj.nrows(),
            });
        }
        let rank = proj.trace().re;
        if rank < 0.5 {
            return Err(Error::InvalidArgument("empty eigenprojector".into()));
        }
        for (col, e) in effects.iter().enumerate() {
            cmat[(row, col)] = (proj * e).trace().re / rank;
        }
    }
    let lambda = DVector::from_iterator(spectrum.len(), spectrum.iter().map(|(l, _)| *l));
    let pinv = cmat
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let alpha = &pinv * &lambda;
    let residual = (&lambda - &cmat * &alpha).norm();
    Ok(Calibration {
        alpha: alpha.iter().copied().collect(),
        residual,
    })
}

/// Calibration against the `-1`/`+1` eigenspaces of an involutory observable.
pub fn calibrate_for_observable(kraus: &KrausPair, a: &ComplexMatrix) -> Result<Calibration> {
    check_involution(a)?;
    let id = identity(a.nrows());
    let spectrum: Vec<(f64, ComplexMatrix)> = [-1.0, 1.0]
        .into_iter()
        .map(|l| (l, (&id + a.map(|z| z * l)).map(|z| z * 0.5)))
        .filter(|(_, p)| p.trace().re > 0.5)
        .collect();
    calibrate_generalized_eigenvalues(kraus, &spectrum)
}

/// Unnormalized post-measurement state `K_a rho K_a^dagger` and its trace.
pub fn state_update(
    state: &DensityMatrix,
    spec: &MeasurementSpec,
    outcome: u8,
    targets: &[usize],
) -> Result<(ComplexMatrix, f64)> {
    check_outcome(outcome)?;
    let full = spec.observable.embedded(targets, state.n_qubits())?;
    let pair = pair_for(&full.matrix(), spec.phi, spec.kind)?;
    let k = pair.get(outcome)?;
    let updated = k * state.matrix() * k.adjoint();
    let p = updated.trace().re;
    Ok((updated, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{anticommutator, commutator, phase_distance};
    use crate::observables::PauliProjector;
    use crate::random::{random_density, random_pauli, random_phi, random_pure};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    fn spec(a: &str, phi: f64, kind: MeasurementKind) -> MeasurementSpec {
        MeasurementSpec::new(a.parse().unwrap(), phi, kind).unwrap()
    }

    #[test]
    fn projective_informative_on_z() {
        let k = informative_kraus(&spec("+Z", FRAC_PI_2, MeasurementKind::Informative)).unwrap();
        assert!(max_abs_diff(&k.outcome1, &PauliProjector::One.matrix()) < 1e-12);
        assert!(max_abs_diff(&k.outcome0, &-PauliProjector::Zero.matrix()) < 1e-12);
    }

    #[test]
    fn weak_informative_is_near_identity() {
        let phi = 1e-4;
        let k = kraus_pair(&spec("+X", phi, MeasurementKind::Informative));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = pauli(Pauli::X);
        let approx1 = (identity(2) + x.map(|z| z * (phi / 2.0))).map(|z| z * h);
        let approx0 = (identity(2) - x.map(|z| z * (phi / 2.0))).map(|z| z * -h);
        assert!(max_abs_diff(&k.outcome1, &approx1) < 1e-8);
        assert!(max_abs_diff(&k.outcome0, &approx0) < 1e-8);
    }

    #[test]
    fn kind_mismatch_and_angle_errors() {
        let s = spec("+Z", 0.3, MeasurementKind::Noninformative);
        assert!(matches!(informative_kraus(&s), Err(Error::KindMismatch)));
        assert!(noninformative_kraus(&s).is_ok());
        for bad in [0.0, -0.1, 1.6, f64::NAN] {
            assert!(matches!(
                MeasurementSpec::new("+Z".parse().unwrap(), bad, MeasurementKind::Informative),
                Err(Error::PhiOutOfRange(_))
            ));
        }
        assert!(matches!(generalized_eigenvalue(0.0, 1), Err(Error::PhiOutOfRange(_))));
        assert!(matches!(generalized_eigenvalue(0.5, 2), Err(Error::InvalidOutcome(2))));
    }

    #[test]
    fn noninformative_projective_is_unitary_kick() {
        let k = kraus_pair(&spec("+Y", FRAC_PI_2, MeasurementKind::Noninformative));
        let y = pauli(Pauli::Y);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = (identity(2) - y.map(|z| z * c(0.0, 1.0))).map(|z| z * h);
        let minus = (identity(2) + y.map(|z| z * c(0.0, 1.0))).map(|z| z * h);
        // each branch is (1/sqrt2) times a unitary
        assert!(phase_distance(&k.outcome1.map(|z| z * 2f64.sqrt()), &plus) < 1e-12);
        assert!(phase_distance(&k.outcome0.map(|z| z * 2f64.sqrt()), &minus) < 1e-12);
    }

    #[test]
    fn generalized_eigenvalue_examples() {
        assert_eq!(generalized_eigenvalue(FRAC_PI_2, 0).unwrap(), -1.0);
        assert_eq!(generalized_eigenvalue(FRAC_PI_2, 1).unwrap(), 1.0);
        assert!((generalized_eigenvalue(FRAC_PI_6, 0).unwrap() + 2.0).abs() < 1e-12);
        assert!((generalized_eigenvalue(FRAC_PI_6, 1).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weak_values_of_canonical_detectors() {
        let inf = DetectorConfig::canonical(MeasurementKind::Informative);
        let non = DetectorConfig::canonical(MeasurementKind::Noninformative);
        for a in 0..2u8 {
            let sign = branch_sign(a);
            let wz = weak_value(1, &inf, inf.readout_state(a).unwrap()).unwrap();
            let wy = weak_value(1, &non, non.readout_state(a).unwrap()).unwrap();
            assert!((wz - c(0.0, sign)).norm() < 1e-12, "z readout {a}: {wz}");
            assert!((wy - c(sign, 0.0)).norm() < 1e-12, "y readout {a}: {wy}");
            assert!((weak_value(0, &inf, inf.readout_state(a).unwrap()).unwrap() - ONE).norm() < 1e-15);
        }
    }

    #[test]
    fn modular_value_examples() {
        let inf = DetectorConfig::canonical(MeasurementKind::Informative);
        let zp = inf.readout_state(1).unwrap();
        assert!((modular_value(1.0, 0.0, &inf, zp).unwrap() - ONE).norm() < 1e-15);
        for lambda in [1.0, -1.0] {
            for a in 0..2u8 {
                let bra = inf.readout_state(a).unwrap();
                let phi = 0.9;
                let direct = bra
                    .amplitudes()
                    .dotc(&(expm_hermitian(&pauli(Pauli::Y), phi * lambda / 2.0).unwrap()
                        * inf.initial_state.amplitudes()))
                    / bra.inner(&inf.initial_state);
                let dw = c(0.0, branch_sign(a));
                let closed = c((phi * lambda / 2.0).cos(), 0.0) - c(0.0, (phi * lambda / 2.0).sin()) * dw;
                let m = modular_value(lambda, phi, &inf, bra).unwrap();
                assert!((m - direct).norm() < 1e-12);
                assert!((m - closed).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn vanishing_overlap_is_reported() {
        let z = pauli(Pauli::Z);
        let det = DetectorConfig::new(
            detector_state(Pauli::Z, true),
            pauli(Pauli::Y),
            [detector_state(Pauli::Z, false), detector_state(Pauli::Z, true)],
        )
        .unwrap();
        let bra = det.readout_state(0).unwrap();
        match modular_value(1.0, 0.5, &det, bra) {
            Err(Error::DivergentModularValue { numerator }) => assert!(numerator.norm() > 0.1),
            other => panic!("expected divergence, got {other:?}"),
        }
        assert!(matches!(weak_value(1, &det, bra), Err(Error::VanishingOverlap)));
        // spectral form stays finite
        assert!(detector_kraus(&z, 0.5, &det, 0).is_ok());
    }

    #[test]
    fn calibration_examples() {
        let z = pauli(Pauli::Z);
        let proj = calibrate_for_observable(&informative_pair(&z, FRAC_PI_2).unwrap(), &z).unwrap();
        assert!((proj.alpha[0] + 1.0).abs() < 1e-10 && (proj.alpha[1] - 1.0).abs() < 1e-10);
        assert!(proj.is_consistent(1e-10));

        let quarter = calibrate_for_observable(&informative_pair(&z, FRAC_PI_4).unwrap(), &z).unwrap();
        assert!((quarter.alpha[0] + 2f64.sqrt()).abs() < 1e-10);
        assert!((quarter.alpha[1] - 2f64.sqrt()).abs() < 1e-10);

        let blind = calibrate_for_observable(&noninformative_pair(&z, 0.7).unwrap(), &z).unwrap();
        assert!(blind.residual > 1.0);
        assert!(!blind.is_consistent(1e-6));
    }

    #[test]
    fn state_update_examples() {
        let one = PureState::from_label("1").unwrap().to_density();
        let s = spec("+Z", FRAC_PI_2, MeasurementKind::Informative);
        let (_, p1) = state_update(&one, &s, 1, &[0]).unwrap();
        let (_, p0) = state_update(&one, &s, 0, &[0]).unwrap();
        assert!((p1 - 1.0).abs() < 1e-15 && p0.abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(2, &mut rng);
        let n = spec("+XY", 0.4, MeasurementKind::Noninformative);
        for a in 0..2 {
            let (_, p) = state_update(&rho, &n, a, &[0, 1]).unwrap();
            assert!((p - 0.5).abs() < 1e-12);
        }
        let three = crate::linalg::DensityMatrix::maximally_mixed(3);
        assert!(state_update(&three, &n, 0, &[0, 5]).is_err());
    }

    #[test]
    fn state_update_three_term_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let rho = random_density(2, &mut rng);
            let a = random_pauli(2, &mut rng);
            let phi = random_phi(&mut rng);
            let am = a.matrix();
            let r = rho.matrix();
            let deco = (&am * r * &am - r).map(|z| z * (phi / 2.0).sin().powi(2));
            for kind in [MeasurementKind::Informative, MeasurementKind::Noninformative] {
                let s = MeasurementSpec::new(a.clone(), phi, kind).unwrap();
                let bracket = match kind {
                    MeasurementKind::Informative => anticommutator(&am, r).map(|z| z / 2.0),
                    MeasurementKind::Noninformative => commutator(&am, r).map(|z| z / c(0.0, 2.0)),
                };
                for out in 0..2u8 {
                    let (upd, _) = state_update(&rho, &s, out, &[0, 1]).unwrap();
                    let expected = (r + bracket.map(|z| z * (branch_sign(out) * phi.sin())) + &deco)
                        .map(|z| z * 0.5);
                    assert!(max_abs_diff(&upd, &expected) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn normalized_update_matches_prefactor_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let rho = random_density(2, &mut rng);
            let a = random_pauli(2, &mut rng);
            let phi = random_phi(&mut rng);
            let am = a.matrix();
            let r = rho.matrix();
            let mean_a = rho.expectation(&am).unwrap().re;
            for kind in [MeasurementKind::Informative, MeasurementKind::Noninformative] {
                let det = DetectorConfig::canonical(kind);
                let s = MeasurementSpec::new(a.clone(), phi, kind).unwrap();
                for out in 0..2u8 {
                    let dw = weak_value(1, &det, det.readout_state(out).unwrap()).unwrap();
                    let prefactor = phi.sin()
                        / (1.0
                            + phi.sin() * mean_a * dw.im
                            + (phi / 2.0).sin().powi(2) * (dw.norm_sqr() - 1.0));
                    let rhs = commutator(&am, r).map(|z| z / c(0.0, 2.0) * dw.re)
                        + (anticommutator(&am, r).map(|z| z / 2.0) - r.map(|z| z * mean_a))
                            .map(|z| z * dw.im)
                        + (&am * r * &am - r)
                            .map(|z| z * ((phi / 2.0).sin().powi(2) * dw.norm_sqr() / phi.sin()));
                    let rhs = rhs.map(|z| z * prefactor);
                    let (upd, p) = state_update(&rho, &s, out, &[0, 1]).unwrap();
                    let lhs = upd.map(|z| z / p) - r;
                    assert!(max_abs_diff(&lhs, &rhs) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn detector_kraus_forms_agree_with_canonical_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a = random_pauli(2, &mut rng).matrix();
            let phi = random_phi(&mut rng);
            for kind in [MeasurementKind::Informative, MeasurementKind::Noninformative] {
                let det = DetectorConfig::canonical(kind);
                let canonical = pair_for(&a, phi, kind).unwrap();
                for out in 0..2u8 {
                    let spectral = detector_kraus(&a, phi, &det, out).unwrap();
                    let linear = qubit_detector_kraus(&a, phi, &det, out).unwrap();
                    assert!(max_abs_diff(&spectral, &linear) < 1e-12);
                    assert!(phase_distance(&spectral, canonical.get(out).unwrap()) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn random_detector_linear_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            // random unit Bloch vector for D, random preparation and readout
            let d = random_pure(1, &mut rng).projector().map(|z| z * 2.0) - identity(2);
            let psi = random_pure(1, &mut rng);
            let r0 = random_pure(1, &mut rng);
            let amps = r0.amplitudes();
            let r1 = PureState::new(ComplexVector::from_column_slice(&[-amps[1].conj(), amps[0].conj()])).unwrap();
            let det = DetectorConfig::new(psi, d, [r0, r1]).unwrap();
            let a = random_pauli(2, &mut rng).matrix();
            let phi = random_phi(&mut rng);
            for out in 0..2u8 {
                let spectral = detector_kraus(&a, phi, &det, out).unwrap();
                let linear = qubit_detector_kraus(&a, phi, &det, out).unwrap();
                assert!(max_abs_diff(&spectral, &linear) < 1e-12);
                let bra = det.readout_state(out).unwrap();
                for lambda in [1.0, -1.0] {
                    let m = modular_value(lambda, phi, &det, bra).unwrap();
                    let dw = weak_value(1, &det, bra).unwrap();
                    let closed = c((phi * lambda / 2.0).cos(), 0.0) - c(0.0, (phi * lambda / 2.0).sin()) * dw;
                    assert!((m - closed).norm() < 1e-12);
                    let series = modular_value_series(lambda, phi, &det, bra, 30).unwrap();
                    assert!((series - m).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn weak_regime_residual_is_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let rho = random_density(2, &mut rng);
        let a = random_pauli(2, &mut rng);
        let residual = |phi: f64| weak_residual(&rho, &a, phi);
        let ratio = residual(1e-3) / residual(5e-4);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    fn weak_residual(rho: &DensityMatrix, a: &PauliString, phi: f64) -> f64 {
        let am = a.matrix();
        let r = rho.matrix();
        let mean_a = rho.expectation(&am).unwrap().re;
        let mut worst: f64 = 0.0;
        for kind in [MeasurementKind::Informative, MeasurementKind::Noninformative] {
            let det = DetectorConfig::canonical(kind);
            let s = MeasurementSpec::new(a.clone(), phi, kind).unwrap();
            for out in 0..2u8 {
                let dw = weak_value(1, &det, det.readout_state(out).unwrap()).unwrap();
                let first = (commutator(&am, r).map(|z| z / c(0.0, 2.0) * dw.re)
                    + (anticommutator(&am, r).map(|z| z / 2.0) - r.map(|z| z * mean_a))
                        .map(|z| z * dw.im))
                .map(|z| z * phi);
                let (upd, p) = state_update(rho, &s, out, &[0, 1]).unwrap();
                worst = worst.max(max_abs_diff(&(upd.map(|z| z / p) - r), &first));
            }
        }
        worst
    }
}
