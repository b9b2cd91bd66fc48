//! JSON experiment configuration.
//!
//! Every optional field has a default; [`ExperimentConfig::resolve`] fills
//! them in so the echoed config is self-contained and can be rerun as is.
//!
//! ```json
//! {
//!   "system_size": 4,
//!   "initial_state": "maximally-mixed",
//!   "hamiltonian": { "model": "mixed-field-ising", "j": 1.0, "g": 1.05, "h": 0.5 },
//!   "observable_a": "ZIII",
//!   "observable_b": "IIIZ",
//!   "times": [0.0, 0.5, 1.0],
//!   "protocol": "otoc"
//! }
//! ```

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{build_mixed_field_ising, Hamiltonian, DEFAULT_G, DEFAULT_H, DEFAULT_J};
use crate::error::{Error, Result};
use crate::linalg::{ComplexVector, DensityMatrix, PureState, C64};
use crate::measurement::check_phi;
use crate::observables::PauliString;
use crate::protocols::Part;

/// Largest register the CLI accepts, counting the clock ancilla.
pub const MAX_QUBITS: usize = 10;
pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 2026;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Toc,
    Otoc,
}

impl ProtocolKind {
    pub fn measurement_count(self) -> usize {
        match self {
            ProtocolKind::Toc => 2,
            ProtocolKind::Otoc => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reversal {
    DirectDagger,
    ClockAncilla,
}

/// A basis label such as `"0101"`, the string `"maximally-mixed"`, or a list
/// of `[re, im]` amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Label(String),
    Amplitudes(Vec<[f64; 2]>),
}

impl InitialState {
    pub fn density(&self, n_qubits: usize) -> Result<DensityMatrix> {
        let state = match self {
            InitialState::Label(s) if s == "maximally-mixed" => DensityMatrix::maximally_mixed(n_qubits),
            InitialState::Label(s) => PureState::from_label(s)?.to_density(),
            InitialState::Amplitudes(v) => {
                let amps = ComplexVector::from_iterator(v.len(), v.iter().map(|[re, im]| C64::new(*re, *im)));
                PureState::normalized(amps)?.to_density()
            }
        };
        if state.n_qubits() != n_qubits {
            return Err(Error::DimensionMismatch {
                expected: n_qubits,
                found: state.n_qubits(),
            });
        }
        Ok(state)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HamiltonianConfig {
    MixedFieldIsing {
        #[serde(default = "default_j")]
        j: f64,
        #[serde(default = "default_g")]
        g: f64,
        #[serde(default = "default_h")]
        h: f64,
    },
    /// `(coefficient, pauli string)` pairs.
    Terms { terms: Vec<(f64, PauliString)> },
}

fn default_j() -> f64 {
    DEFAULT_J
}
fn default_g() -> f64 {
    DEFAULT_G
}
fn default_h() -> f64 {
    DEFAULT_H
}

impl Default for HamiltonianConfig {
    fn default() -> Self {
        HamiltonianConfig::MixedFieldIsing {
            j: DEFAULT_J,
            g: DEFAULT_G,
            h: DEFAULT_H,
        }
    }
}

impl HamiltonianConfig {
    pub fn build(&self, n_qubits: usize) -> Result<Hamiltonian> {
        let h = match self {
            HamiltonianConfig::MixedFieldIsing { j, g, h } => build_mixed_field_ising(n_qubits, *j, *g, *h)?,
            HamiltonianConfig::Terms { terms } => Hamiltonian::new(terms.clone())?,
        };
        if h.n_qubits() != n_qubits {
            return Err(Error::DimensionMismatch {
                expected: n_qubits,
                found: h.n_qubits(),
            });
        }
        Ok(h)
    }
}

fn default_initial_state() -> InitialState {
    InitialState::Label("maximally-mixed".into())
}
fn default_trials() -> u64 {
    DEFAULT_TRIALS
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_parts() -> Vec<Part> {
    vec![Part::Real, Part::Imag]
}
fn default_protocol() -> ProtocolKind {
    ProtocolKind::Otoc
}
fn default_mode() -> RunMode {
    RunMode::Exact
}
fn default_reversal() -> Reversal {
    Reversal::DirectDagger
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system_size: usize,
    #[serde(default = "default_initial_state")]
    pub initial_state: InitialState,
    #[serde(default)]
    pub hamiltonian: HamiltonianConfig,
    pub observable_a: PauliString,
    pub observable_b: PauliString,
    pub times: Vec<f64>,
    /// One angle per measurement; empty means projective (`pi/2`) throughout.
    #[serde(default)]
    pub phis: Vec<f64>,
    #[serde(default = "default_mode")]
    pub mode: RunMode,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_parts")]
    pub parts: Vec<Part>,
    #[serde(default = "default_protocol")]
    pub protocol: ProtocolKind,
    #[serde(default = "default_reversal")]
    pub reversal: Reversal,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("field `{field}`: {msg}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fills defaulted fields and validates the result.
    pub fn resolve(mut self) -> Result<Self> {
        if self.phis.is_empty() {
            self.phis = vec![FRAC_PI_2; self.protocol.measurement_count()];
        }
        let mut seen = Vec::new();
        self.parts.retain(|p| {
            let fresh = !seen.contains(p);
            seen.push(*p);
            fresh
        });
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.system_size;
        let total = n + usize::from(self.reversal == Reversal::ClockAncilla && self.protocol == ProtocolKind::Otoc);
        if n == 0 || total > MAX_QUBITS {
            return Err(field_error("system_size", format!("need 1..={MAX_QUBITS} qubits in total, got {total}")));
        }
        for (name, p) in [("observable_a", &self.observable_a), ("observable_b", &self.observable_b)] {
            if p.n_qubits() != n {
                return Err(field_error(name, format!("`{p}` acts on {} qubits, expected {n}", p.n_qubits())));
            }
        }
        if self.times.is_empty() {
            return Err(field_error("times", "at least one time is required"));
        }
        if let Some(t) = self.times.iter().find(|t| !t.is_finite()) {
            return Err(field_error("times", format!("non-finite time {t}")));
        }
        let expected = self.protocol.measurement_count();
        if self.phis.len() != expected {
            return Err(field_error("phis", format!("expected {expected} angles, got {}", self.phis.len())));
        }
        for &phi in &self.phis {
            check_phi(phi).map_err(|e| field_error("phis", e))?;
        }
        if self.trials == 0 {
            return Err(field_error("trials", "must be at least 1"));
        }
        if self.parts.is_empty() {
            return Err(field_error("parts", "select at least one of real, imag"));
        }
        self.initial_state.density(n).map_err(|e| field_error("initial_state", e))?;
        self.hamiltonian.build(n).map_err(|e| field_error("hamiltonian", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "system_size": 2,
        "observable_a": "ZI",
        "observable_b": "IX",
        "times": [0.0, 1.0]
    }"#;

    #[test]
    fn defaults_are_filled() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap().resolve().unwrap();
        assert_eq!(cfg.phis, vec![FRAC_PI_2; 4]);
        assert_eq!(cfg.mode, RunMode::Exact);
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.parts, vec![Part::Real, Part::Imag]);
        assert_eq!(cfg.hamiltonian, HamiltonianConfig::default());
        let echoed = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(echoed, cfg);
        assert_eq!(echoed.clone().resolve().unwrap(), cfg);
    }

    #[test]
    fn alternative_forms_parse() {
        let text = r#"{
            "system_size": 1,
            "initial_state": [[0.0, 0.0], [1.0, 0.0]],
            "hamiltonian": {"model": "terms", "terms": [[0.5, "Z"], [0.25, "-X"]]},
            "observable_a": "Z", "observable_b": "Y",
            "times": [0.3], "phis": [0.2, 0.4], "protocol": "toc",
            "parts": ["imag", "imag"], "mode": "sampled", "reversal": "clock-ancilla"
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap().resolve().unwrap();
        assert_eq!(cfg.parts, vec![Part::Imag]);
        assert_eq!(cfg.reversal, Reversal::ClockAncilla);
        let rho = cfg.initial_state.density(1).unwrap();
        assert!((rho.matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
        assert_eq!(cfg.hamiltonian.build(1).unwrap().terms().len(), 2);
    }

    fn invalid(edit: impl Fn(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        edit(&mut v);
        let result = serde_json::from_value::<ExperimentConfig>(v)
            .map_err(|e| Error::InvalidArgument(e.to_string()))
            .and_then(|c| c.resolve());
        result.unwrap_err().to_string()
    }

    #[test]
    fn validation_names_the_field() {
        assert!(invalid(|v| v["phis"] = serde_json::json!([0.1, 0.2, 0.3, 0.0])).contains("phis"));
        assert!(invalid(|v| v["phis"] = serde_json::json!([0.1])).contains("phis"));
        assert!(invalid(|v| v["observable_b"] = "XXX".into()).contains("observable_b"));
        assert!(invalid(|v| v["times"] = serde_json::json!([])).contains("times"));
        assert!(invalid(|v| v["trials"] = 0.into()).contains("trials"));
        assert!(invalid(|v| v["parts"] = serde_json::json!([])).contains("parts"));
        assert!(invalid(|v| v["initial_state"] = "011".into()).contains("initial_state"));
        assert!(invalid(|v| v["system_size"] = 11.into()).contains("system_size"));
        assert!(invalid(|v| v["bogus"] = 1.into()).contains("bogus"));
        let e = ExperimentConfig::from_json("{\n  \"system_size\": 2,\n  \"times\": [0.0,\n}").unwrap_err();
        assert!(e.to_string().contains("line 4"), "{e}");
    }
}
