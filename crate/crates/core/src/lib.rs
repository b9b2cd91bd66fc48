//! Weak-measurement estimation of time-ordered and out-of-time-order
//! correlators on small qubit registers.
//!
//! Sequences of partial-strength, ancilla-coupled measurements are simulated
//! exactly. Each outcome string is weighted by the product of generalized
//! eigenvalues `alpha = +-1/sin(phi)`, which turns the outcome average into a
//! nested (anti)commutator expectation value that does not depend on the
//! measurement strength.

pub mod circuit;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod measurement;
pub mod observables;
pub mod oracle;
pub mod protocols;
pub mod random;
pub mod verify;

pub use error::{Error, Result};

