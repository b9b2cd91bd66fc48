//! Sequential-measurement engine and the correlator protocols built on it.
//!
//! A sequence interleaves ancilla-coupled measurements with unitary
//! evolutions. Weighting each outcome string by the product of generalized
//! eigenvalues and averaging over the outcome distribution yields nested
//! (anti)commutator expectation values, independently of the measurement
//! strengths. Two evaluation modes exist: exact enumeration of all `2^m`
//! branches, and Monte Carlo sampling of outcome strings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Hamiltonian;
use crate::error::{Error, Result};
use crate::linalg::{
    embed, expm_hermitian, identity, tensor, unitarity_error, ComplexMatrix, DensityMatrix,
    PureState, C64, CHECK_TOL,
};
use crate::measurement::{
    check_phi, generalized_eigenvalue, pair_for, KrausPair, MeasurementKind, MeasurementSpec,
};
use crate::observables::{pauli, Pauli, PauliString};

/// Enumeration limit for exact mode.
pub const MAX_MEASUREMENTS: usize = 16;
/// Tolerance on the total probability of an enumerated distribution.
pub const PROBABILITY_TOL: f64 = 1e-10;

/// Generalized eigenvalue assignment `(phi, outcome) -> alpha`.
pub type EigenvalueFn = fn(f64, u8) -> Result<f64>;

#[derive(Clone, Debug)]
pub struct MeasurementStep {
    observable: ComplexMatrix,
    phi: f64,
    kind: MeasurementKind,
    kraus: KrausPair,
}

impl MeasurementStep {
    pub fn observable(&self) -> &ComplexMatrix {
        &self.observable
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn kraus(&self) -> &KrausPair {
        &self.kraus
    }
}

#[derive(Clone, Debug)]
pub enum SequenceStep {
    Measure(MeasurementStep),
    Evolve(ComplexMatrix),
}

impl SequenceStep {
    /// Measurement of a Pauli observable placed on `targets` of an `n_qubits` register.
    pub fn measure(spec: &MeasurementSpec, targets: &[usize], n_qubits: usize) -> Result<Self> {
        let full = spec.observable().embedded(targets, n_qubits)?;
        Self::measure_operator(full.matrix(), spec.phi(), spec.kind())
    }

    /// Measurement of any full-register operator squaring to the identity.
    pub fn measure_operator(observable: ComplexMatrix, phi: f64, kind: MeasurementKind) -> Result<Self> {
        let kraus = pair_for(&observable, phi, kind)?;
        Ok(SequenceStep::Measure(MeasurementStep {
            observable,
            phi,
            kind,
            kraus,
        }))
    }

    pub fn evolve(u: ComplexMatrix) -> Result<Self> {
        let dev = unitarity_error(&u);
        if dev > CHECK_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        Ok(SequenceStep::Evolve(u))
    }

    fn dim(&self) -> usize {
        match self {
            SequenceStep::Measure(m) => m.observable.nrows(),
            SequenceStep::Evolve(u) => u.nrows(),
        }
    }
}

/// One outcome string with its eigenvalue weight and exact probability.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRecord {
    pub outcomes: Vec<u8>,
    pub weight: f64,
    pub probability: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMode {
    Exact,
    Sampled,
}

/// How a protocol is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Sampled { trials: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Real,
    Imag,
}

impl Part {
    /// The first measurement is noninformative for the imaginary part.
    pub fn first_kind(self) -> MeasurementKind {
        match self {
            Part::Real => MeasurementKind::Informative,
            Part::Imag => MeasurementKind::Noninformative,
        }
    }
}

/// Result of a protocol run. `average` is the raw weighted average of
/// eigenvalue products; `value` is the correlator component derived from it
/// (real or imaginary slot, per the part measured). `stderr` and `rms_bound`
/// refer to `value`; both are zero in exact mode.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorEstimate {
    pub value: C64,
    pub average: f64,
    pub mode: EstimateMode,
    pub trials: Vec<u64>,
    pub rms_bound: f64,
    pub stderr: f64,
}

impl CorrelatorEstimate {
    fn rescaled(mut self, part: Part, scale: f64, offset: f64) -> Self {
        let v = scale * self.average + offset;
        self.value = match part {
            Part::Real => C64::new(v, 0.0),
            Part::Imag => C64::new(0.0, v),
        };
        self.rms_bound *= scale.abs();
        self.stderr *= scale.abs();
        self
    }

    /// The filled component of `value`.
    pub fn component(&self, part: Part) -> f64 {
        match part {
            Part::Real => self.value.re,
            Part::Imag => self.value.im,
        }
    }
}

/// Neumaier-compensated sum, evaluated in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if f64::abs(sum) >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn validate_sequence(initial: &DensityMatrix, steps: &[SequenceStep]) -> Result<usize> {
    let mut measurements = 0;
    for step in steps {
        if step.dim() != initial.dim() {
            return Err(Error::DimensionMismatch {
                expected: initial.dim(),
                found: step.dim(),
            });
        }
        if matches!(step, SequenceStep::Measure(_)) {
            measurements += 1;
        }
    }
    if measurements > MAX_MEASUREMENTS {
        return Err(Error::InvalidArgument(format!(
            "{measurements} measurements exceed the enumeration limit of {MAX_MEASUREMENTS}"
        )));
    }
    Ok(measurements)
}

fn measurement_phis(steps: &[SequenceStep]) -> Vec<f64> {
    steps
        .iter()
        .filter_map(|s| match s {
            SequenceStep::Measure(m) => Some(m.phi),
            SequenceStep::Evolve(_) => None,
        })
        .collect()
}

/// Exact distribution over all `2^m` outcome strings, in lexicographic order
/// with the first measurement as the most significant symbol.
pub fn sequence_distribution(
    initial: &DensityMatrix,
    steps: &[SequenceStep],
) -> Result<Vec<OutcomeRecord>> {
    distribution_with(initial, steps, generalized_eigenvalue)
}

/// [`sequence_distribution`] with a caller-supplied eigenvalue assignment.
pub fn distribution_with(
    initial: &DensityMatrix,
    steps: &[SequenceStep],
    eigenvalue: EigenvalueFn,
) -> Result<Vec<OutcomeRecord>> {
    let m = validate_sequence(initial, steps)?;
    let mut records = Vec::with_capacity(1 << m);
    branch(initial.matrix().clone(), steps, Vec::with_capacity(m), 1.0, eigenvalue, &mut records)?;
    let total = compensated_sum(records.iter().map(|r| r.probability));
    if (total - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::Invariant {
            name: "outcome probabilities sum to one",
            residual: (total - 1.0).abs(),
        });
    }
    Ok(records)
}

fn branch(
    rho: ComplexMatrix,
    steps: &[SequenceStep],
    outcomes: Vec<u8>,
    weight: f64,
    eigenvalue: EigenvalueFn,
    out: &mut Vec<OutcomeRecord>,
) -> Result<()> {
    match steps.split_first() {
        None => {
            out.push(OutcomeRecord {
                outcomes,
                weight,
                probability: rho.trace().re,
            });
            Ok(())
        }
        Some((SequenceStep::Evolve(u), rest)) => {
            branch(u * rho * u.adjoint(), rest, outcomes, weight, eigenvalue, out)
        }
        Some((SequenceStep::Measure(step), rest)) => {
            for a in 0..2u8 {
                let k = step.kraus.get(a)?;
                let next = k * &rho * k.adjoint();
                let mut o = outcomes.clone();
                o.push(a);
                let w = weight * eigenvalue(step.phi, a)?;
                branch(next, rest, o, w, eigenvalue, out)?;
            }
            Ok(())
        }
    }
}

/// `1 / sqrt(prod n_k * prod sin^2 phi_k)`.
pub fn rms_bound(phis: &[f64], trials: &[u64]) -> Result<f64> {
    if phis.is_empty() {
        return Err(Error::Empty("angle list"));
    }
    if phis.len() != trials.len() {
        return Err(Error::DimensionMismatch {
            expected: phis.len(),
            found: trials.len(),
        });
    }
    if let Some(&bad) = trials.iter().find(|&&n| n == 0) {
        return Err(Error::InvalidArgument(format!("trial count {bad} must be at least 1")));
    }
    let mut denom = 1.0;
    for (&phi, &n) in phis.iter().zip(trials) {
        denom *= n as f64 * phi.sin().powi(2);
    }
    Ok(1.0 / denom.sqrt())
}

/// Trial counts for `trials` full-sequence repetitions: the whole sample
/// count sits in the first stage so that `prod n_k` equals the number of
/// eigenvalue products averaged.
fn sequence_trials(m: usize, trials: u64) -> Vec<u64> {
    let mut v = vec![1; m];
    if let Some(first) = v.first_mut() {
        *first = trials;
    }
    v
}

/// Exact weighted average over all outcome strings.
pub fn nested_estimate(initial: &DensityMatrix, steps: &[SequenceStep]) -> Result<CorrelatorEstimate> {
    nested_estimate_with(initial, steps, generalized_eigenvalue)
}

pub fn nested_estimate_with(
    initial: &DensityMatrix,
    steps: &[SequenceStep],
    eigenvalue: EigenvalueFn,
) -> Result<CorrelatorEstimate> {
    if validate_sequence(initial, steps)? == 0 {
        return Err(Error::Empty("measurement sequence"));
    }
    let records = distribution_with(initial, steps, eigenvalue)?;
    let average = compensated_sum(records.iter().map(|r| r.weight * r.probability));
    Ok(CorrelatorEstimate {
        value: C64::new(average, 0.0),
        average,
        mode: EstimateMode::Exact,
        trials: Vec::new(),
        rms_bound: 0.0,
        stderr: 0.0,
    })
}

/// Conditional branch masses: `levels[k][prefix]` is the probability of the
/// first `k` outcomes equalling `prefix`.
struct OutcomeTree {
    levels: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl OutcomeTree {
    fn new(records: &[OutcomeRecord], m: usize) -> Self {
        let mut levels = vec![Vec::new(); m + 1];
        levels[m] = records.iter().map(|r| r.probability.max(0.0)).collect();
        for k in (0..m).rev() {
            levels[k] = levels[k + 1].chunks(2).map(|p| p[0] + p[1]).collect();
        }
        Self {
            levels,
            weights: records.iter().map(|r| r.weight).collect(),
        }
    }

    /// Draws one outcome string by the sequential Born rule and returns its leaf index.
    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let mut prefix = 0usize;
        for k in 0..self.levels.len() - 1 {
            let node = self.levels[k][prefix];
            let one = self.levels[k + 1][2 * prefix + 1];
            let p_one = if node > 0.0 { one / node } else { 0.5 };
            let bit = usize::from(rng.gen::<f64>() < p_one);
            prefix = 2 * prefix + bit;
        }
        prefix
    }
}

/// Per-trial generator: stream `trial` of the ChaCha8 generator keyed by `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Monte Carlo estimate from `trials` independently drawn outcome strings.
/// Each trial uses its own counter-based stream, so the result does not
/// depend on thread count or execution order.
pub fn sample_protocol(
    initial: &DensityMatrix,
    steps: &[SequenceStep],
    trials: u64,
    seed: u64,
) -> Result<CorrelatorEstimate> {
    sample_protocol_with(initial, steps, trials, seed, generalized_eigenvalue)
}

pub fn sample_protocol_with(
    initial: &DensityMatrix,
    steps: &[SequenceStep],
    trials: u64,
    seed: u64,
    eigenvalue: EigenvalueFn,
) -> Result<CorrelatorEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let m = validate_sequence(initial, steps)?;
    if m == 0 {
        return Err(Error::Empty("measurement sequence"));
    }
    let records = distribution_with(initial, steps, eigenvalue)?;
    let tree = OutcomeTree::new(&records, m);
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| tree.weights[tree.sample(&mut trial_rng(seed, t))])
        .collect();
    let n = trials as f64;
    let mean = compensated_sum(samples.iter().copied()) / n;
    let stderr = if trials > 1 {
        let ss = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
        (ss / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    let counts = sequence_trials(m, trials);
    Ok(CorrelatorEstimate {
        value: C64::new(mean, 0.0),
        average: mean,
        mode: EstimateMode::Sampled,
        rms_bound: rms_bound(&measurement_phis(steps), &counts)?,
        trials: counts,
        stderr,
    })
}

/// Evaluates a sequence in the requested mode.
pub fn evaluate(initial: &DensityMatrix, steps: &[SequenceStep], mode: Mode) -> Result<CorrelatorEstimate> {
    match mode {
        Mode::Exact => nested_estimate(initial, steps),
        Mode::Sampled { trials, seed } => sample_protocol(initial, steps, trials, seed),
    }
}

fn check_system(initial: &DensityMatrix, ops: &[&PauliString], u: &ComplexMatrix) -> Result<()> {
    for p in ops {
        if p.n_qubits() != initial.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: initial.n_qubits(),
                found: p.n_qubits(),
            });
        }
    }
    if u.nrows() != initial.dim() {
        return Err(Error::DimensionMismatch {
            expected: initial.dim(),
            found: u.nrows(),
        });
    }
    Ok(())
}

/// Two-point correlator `<B(t) A>`: measure `A` (informative for the real
/// part, noninformative for the imaginary part), evolve, measure `B`.
pub fn toc(
    initial: &DensityMatrix,
    a: &PauliString,
    b: &PauliString,
    evolution: &ComplexMatrix,
    part: Part,
    phis: [f64; 2],
    mode: Mode,
) -> Result<CorrelatorEstimate> {
    check_system(initial, &[a, b], evolution)?;
    phis.iter().try_for_each(|&p| check_phi(p))?;
    let steps = vec![
        SequenceStep::measure_operator(a.matrix(), phis[0], part.first_kind())?,
        SequenceStep::evolve(evolution.clone())?,
        SequenceStep::measure_operator(b.matrix(), phis[1], MeasurementKind::Informative)?,
    ];
    Ok(evaluate(initial, &steps, mode)?.rescaled(part, 1.0, 0.0))
}

/// Forward/backward propagation for the OTOC's reversed leg.
#[derive(Clone, Debug)]
pub enum Evolution {
    /// `U_t`, reversed with its conjugate transpose.
    Direct(ComplexMatrix),
    /// `exp(-i t H (x) Z)` on system plus clock ancilla, reversed by flipping the clock.
    Clock(ClockPropagator),
}

impl Evolution {
    fn system_dim(&self) -> usize {
        match self {
            Evolution::Direct(u) => u.nrows(),
            Evolution::Clock(c) => 1 << c.n_system,
        }
    }
}

/// `exp(-i t H (x) Z)` with the clock ancilla in the last slot.
#[derive(Clone, Debug)]
pub struct ClockPropagator {
    pub joint: ComplexMatrix,
    pub n_system: usize,
    pub duration: f64,
}

impl ClockPropagator {
    /// System block `<c| U |c>` for clock state `|c>`.
    pub fn sector(&self, clock: u8) -> ComplexMatrix {
        let dim = 1 << self.n_system;
        let c = usize::from(clock == 1);
        ComplexMatrix::from_fn(dim, dim, |i, j| self.joint[((i << 1) | c, (j << 1) | c)])
    }

    /// Clock in `|1>`: time runs forward.
    pub fn forward(&self) -> ComplexMatrix {
        self.sector(1)
    }

    /// Clock in `|0>`: time runs backward.
    pub fn backward(&self) -> ComplexMatrix {
        self.sector(0)
    }
}

/// Extends `H` to `H (x) Z` on an added clock qubit and propagates for time `t`.
pub fn time_reversed_evolution(h: &Hamiltonian, t: f64) -> Result<ClockPropagator> {
    time_reversed_evolution_matrix(&h.matrix(), t)
}

pub fn time_reversed_evolution_matrix(h: &ComplexMatrix, t: f64) -> Result<ClockPropagator> {
    let n_system = crate::linalg::qubits_for_dim(h.nrows())
        .ok_or_else(|| Error::InvalidArgument("Hamiltonian dimension is not a power of two".into()))?;
    let extended = tensor(h, &pauli(Pauli::Z));
    Ok(ClockPropagator {
        joint: expm_hermitian(&extended, t)?,
        n_system,
        duration: t,
    })
}

/// Step list for the four-measurement OTOC sequence
/// `M/N(A) -> U -> M(B) -> U^dagger -> M(A) -> U -> M(B)`,
/// together with the initial state it acts on.
pub fn otoc_sequence(
    initial: &DensityMatrix,
    a: &PauliString,
    b: &PauliString,
    evolution: &Evolution,
    part: Part,
    phis: [f64; 4],
) -> Result<(DensityMatrix, Vec<SequenceStep>)> {
    if evolution.system_dim() != initial.dim() {
        return Err(Error::DimensionMismatch {
            expected: initial.dim(),
            found: evolution.system_dim(),
        });
    }
    check_system(initial, &[a, b], &identity(initial.dim()))?;
    phis.iter().try_for_each(|&p| check_phi(p))?;
    let inf = MeasurementKind::Informative;
    match evolution {
        Evolution::Direct(u) => {
            let (am, bm) = (a.matrix(), b.matrix());
            let steps = vec![
                SequenceStep::measure_operator(am.clone(), phis[0], part.first_kind())?,
                SequenceStep::evolve(u.clone())?,
                SequenceStep::measure_operator(bm.clone(), phis[1], inf)?,
                SequenceStep::evolve(u.adjoint())?,
                SequenceStep::measure_operator(am, phis[2], inf)?,
                SequenceStep::evolve(u.clone())?,
                SequenceStep::measure_operator(bm, phis[3], inf)?,
            ];
            Ok((initial.clone(), steps))
        }
        Evolution::Clock(clock) => {
            let id2 = identity(2);
            let am = tensor(&a.matrix(), &id2);
            let bm = tensor(&b.matrix(), &id2);
            let flip = embed(&pauli(Pauli::X), &[clock.n_system], clock.n_system + 1)?;
            let joint = &clock.joint;
            let steps = vec![
                SequenceStep::measure_operator(am.clone(), phis[0], part.first_kind())?,
                SequenceStep::evolve(joint.clone())?,
                SequenceStep::measure_operator(bm.clone(), phis[1], inf)?,
                SequenceStep::evolve(flip.clone())?,
                SequenceStep::evolve(joint.clone())?,
                SequenceStep::evolve(flip)?,
                SequenceStep::measure_operator(am, phis[2], inf)?,
                SequenceStep::evolve(joint.clone())?,
                SequenceStep::measure_operator(bm, phis[3], inf)?,
            ];
            let clock_on = PureState::from_label("1")?.to_density();
            Ok((initial.tensor(&clock_on), steps))
        }
    }
}

/// Four-point OTOC `F(t) = <B(t) A B(t) A>`. The real-part run averages to
/// `(1 + Re F)/2`, the imaginary-part run to `Im F / 2`; `value` holds the
/// corresponding component of `F`.
pub fn otoc(
    initial: &DensityMatrix,
    a: &PauliString,
    b: &PauliString,
    evolution: &Evolution,
    part: Part,
    phis: [f64; 4],
    mode: Mode,
) -> Result<CorrelatorEstimate> {
    let (state, steps) = otoc_sequence(initial, a, b, evolution, part, phis)?;
    let est = evaluate(&state, &steps, mode)?;
    Ok(match part {
        Part::Real => est.rescaled(part, 2.0, -1.0),
        Part::Imag => est.rescaled(part, 2.0, 0.0),
    })
}
