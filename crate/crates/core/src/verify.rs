//! Randomized identity suites run by `otoc-sim verify`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::synthesize_measurement_circuit;
use crate::error::Result;
use crate::linalg::{
    anticommutator, commutator, expm_hermitian, max_abs_diff, phase_distance, ComplexMatrix, C64,
};
use crate::measurement::{
    generalized_eigenvalue, informative_pair, noninformative_pair, pair_for, MeasurementKind,
};
use crate::observables::EntanglingKind;
use crate::oracle::{oracle_commutator_square, oracle_toc};
use crate::protocols::{
    nested_estimate_with, otoc_sequence, time_reversed_evolution_matrix, toc, EigenvalueFn,
    Evolution, Mode, Part, SequenceStep,
};
use crate::random::{random_density, random_hermitian, random_pauli, random_phi, random_unitary};

/// Residual threshold every suite must stay under.
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub max_residual: f64,
    pub passed: bool,
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<22} {}  cases={:<5} max_residual={:.3e}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.cases,
            self.max_residual
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verify seed={}", self.seed)?;
        for s in &self.suites {
            writeln!(f, "{s}")?;
        }
        write!(f, "overall {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

type Suite = fn(&mut ChaCha8Rng, usize, EigenvalueFn) -> Result<f64>;

const SUITES: [(&str, Suite); 6] = [
    ("povm-identity", povm_identity),
    ("isolation", isolation),
    ("strength-independence", strength_independence),
    ("circuit-synthesis", circuit_synthesis),
    ("hermitian-square", hermitian_square),
    ("time-reversal", time_reversal),
];

/// Runs every suite with `samples` random cases each.
pub fn run_verification(samples: usize, seed: u64) -> VerifyReport {
    run_verification_with(samples, seed, generalized_eigenvalue)
}

/// As [`run_verification`] with a substitute eigenvalue assignment.
pub fn run_verification_with(samples: usize, seed: u64, eigenvalue: EigenvalueFn) -> VerifyReport {
    let suites = SUITES
        .iter()
        .enumerate()
        .map(|(k, (name, suite))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let residual = suite(&mut rng, samples, eigenvalue).unwrap_or(f64::INFINITY);
            SuiteReport {
                name,
                cases: samples,
                max_residual: residual,
                passed: residual < VERIFY_TOL,
            }
        })
        .collect();
    VerifyReport { seed, suites }
}

fn weighted_sum(
    pair: [&ComplexMatrix; 2],
    phi: f64,
    eigenvalue: EigenvalueFn,
    f: impl Fn(&ComplexMatrix) -> ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (w0, w1) = (eigenvalue(phi, 0)?, eigenvalue(phi, 1)?);
    Ok(f(pair[0]) * C64::from(w0) + f(pair[1]) * C64::from(w1))
}

fn povm_identity(rng: &mut ChaCha8Rng, samples: usize, eigenvalue: EigenvalueFn) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let a = random_pauli(rng.gen_range(1..=3), rng).matrix();
        let phi = random_phi(rng);
        let pair = informative_pair(&a, phi)?;
        let sum = weighted_sum(pair.both(), phi, eigenvalue, |m| m.adjoint() * m)?;
        worst = worst.max(max_abs_diff(&sum, &a));
    }
    Ok(worst)
}

fn isolation(rng: &mut ChaCha8Rng, samples: usize, eigenvalue: EigenvalueFn) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let two_i = C64::new(0.0, 2.0);
    for _ in 0..samples {
        let n = rng.gen_range(1..=3);
        let rho = random_density(n, rng).into_matrix();
        let a = random_pauli(n, rng).matrix();
        let b = random_pauli(n, rng).matrix();
        let phi = random_phi(rng);
        let m = informative_pair(&a, phi)?;
        let nn = noninformative_pair(&a, phi)?;

        let s_anti = weighted_sum(m.both(), phi, eigenvalue, |k| k * &rho * k.adjoint())?;
        let s_comm = weighted_sum(nn.both(), phi, eigenvalue, |k| k * &rho * k.adjoint())?;
        let h_anti = weighted_sum(m.both(), phi, eigenvalue, |k| k.adjoint() * &b * k)?;
        let h_comm = weighted_sum(nn.both(), phi, eigenvalue, |k| k.adjoint() * &b * k)?;

        worst = worst
            .max(max_abs_diff(&s_anti, &anticommutator(&a, &rho).map(|z| z / 2.0)))
            .max(max_abs_diff(&s_comm, &commutator(&a, &rho).map(|z| z / two_i)))
            .max(max_abs_diff(&h_anti, &anticommutator(&b, &a).map(|z| z / 2.0)))
            .max(max_abs_diff(&h_comm, &commutator(&b, &a).map(|z| z / two_i)));
    }
    Ok(worst)
}

fn strength_independence(rng: &mut ChaCha8Rng, samples: usize, eigenvalue: EigenvalueFn) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let rho = random_density(2, rng);
        let (a, b) = (random_pauli(2, rng), random_pauli(2, rng));
        let u = random_unitary(2, rng);
        let oracle = oracle_toc(rho.matrix(), &a.matrix(), &b.matrix(), &u)?;
        for part in [Part::Real, Part::Imag] {
            let phis = [random_phi(rng), random_phi(rng)];
            let steps = vec![
                SequenceStep::measure_operator(a.matrix(), phis[0], part.first_kind())?,
                SequenceStep::evolve(u.clone())?,
                SequenceStep::measure_operator(b.matrix(), phis[1], MeasurementKind::Informative)?,
            ];
            let got = nested_estimate_with(&rho, &steps, eigenvalue)?.average;
            let want = match part {
                Part::Real => oracle.re,
                Part::Imag => oracle.im,
            };
            worst = worst.max((got - want).abs());
        }
        // The library entry point must agree with the hand-built sequence.
        let phis = [random_phi(rng), random_phi(rng)];
        let est = toc(&rho, &a, &b, &u, Part::Real, phis, Mode::Exact)?;
        worst = worst.max((est.value.re - oracle.re).abs());
    }
    Ok(worst)
}

fn circuit_synthesis(rng: &mut ChaCha8Rng, samples: usize, _: EigenvalueFn) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let a = loop {
            let p = random_pauli(rng.gen_range(1..=3), rng);
            if !p.is_identity() {
                break p;
            }
        };
        let phi = random_phi(rng);
        let kind = if rng.gen() { MeasurementKind::Informative } else { MeasurementKind::Noninformative };
        let gateset = if rng.gen() { EntanglingKind::Cz } else { EntanglingKind::Zx90 };
        let induced = synthesize_measurement_circuit(&a, phi, kind, gateset)?.induced_kraus();
        let analytic = pair_for(&a.matrix(), phi, kind)?;
        for (k, m) in induced.iter().zip(analytic.both()) {
            worst = worst.max(phase_distance(k, m));
        }
    }
    Ok(worst)
}

fn hermitian_square(rng: &mut ChaCha8Rng, samples: usize, eigenvalue: EigenvalueFn) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let phis = [0.35, 0.7, 1.05, 1.4];
    for _ in 0..samples {
        let rho = random_density(2, rng);
        let (a, b) = (random_pauli(2, rng), random_pauli(2, rng));
        let u = random_unitary(2, rng);
        let (state, steps) = otoc_sequence(&rho, &a, &b, &Evolution::Direct(u.clone()), Part::Real, phis)?;
        let nested = nested_estimate_with(&state, &steps, eigenvalue)?.average;
        let square = oracle_commutator_square(rho.matrix(), &a.matrix(), &b.matrix(), &u)?;
        worst = worst.max((nested - (1.0 - square.re)).abs());
    }
    Ok(worst)
}

fn time_reversal(rng: &mut ChaCha8Rng, samples: usize, _: EigenvalueFn) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let h = random_hermitian(4, rng);
        let t = rng.gen_range(-3.0..3.0);
        let clock = time_reversed_evolution_matrix(&h, t)?;
        worst = worst
            .max(max_abs_diff(&clock.forward(), &expm_hermitian(&h, t)?))
            .max(max_abs_diff(&clock.backward(), &expm_hermitian(&h, -t)?));
    }
    Ok(worst)
}
