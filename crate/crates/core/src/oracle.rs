//! Brute-force reference values built from raw matrix products only.
//!
//! Nothing here touches Kraus operators or outcome enumeration; these
//! functions are the ground truth the measurement protocols are checked
//! against.

use crate::error::{Error, Result};
use crate::linalg::{identity, trace_product, ComplexMatrix, C64};

/// Outer bracket applied at one level of a nested correlator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bracket {
    /// `{X, A}/2`
    Anticommutator,
    /// `[X, A]/(2i)`
    Commutator,
}

fn check_dims(rho: &ComplexMatrix, ops: &[&ComplexMatrix]) -> Result<()> {
    let dim = rho.nrows();
    for op in ops {
        if op.nrows() != dim || op.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: op.nrows(),
            });
        }
    }
    Ok(())
}

/// `Tr(U^dagger B U A rho)`.
pub fn oracle_toc(
    rho: &ComplexMatrix,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    u: &ComplexMatrix,
) -> Result<C64> {
    check_dims(rho, &[a, b, u])?;
    let bt = u.adjoint() * b * u;
    Ok(trace_product(&(bt * a), rho))
}

/// `F = Tr(B(t) A B(t) A rho)` with `B(t) = U^dagger B U`.
pub fn oracle_otoc(
    rho: &ComplexMatrix,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    u: &ComplexMatrix,
) -> Result<C64> {
    check_dims(rho, &[a, b, u])?;
    let bt = u.adjoint() * b * u;
    let product = &bt * a * &bt * a;
    Ok(trace_product(&product, rho))
}

/// `<[B(t),A]^dagger [B(t),A]> / 4`.
pub fn oracle_commutator_square(
    rho: &ComplexMatrix,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    u: &ComplexMatrix,
) -> Result<C64> {
    check_dims(rho, &[a, b, u])?;
    let bt = u.adjoint() * b * u;
    let comm = &bt * a - a * &bt;
    Ok(trace_product(&(comm.adjoint() * comm), rho) / 4.0)
}

/// Expectation of the nested bracket built from `observables` (in measurement
/// order `A_1 .. A_m`) where level `k` uses `brackets[k]`:
/// starting from the identity, `X <- bracket_k(X, A_k)` for `k = m .. 1`.
/// For all anticommutators this is `<{..{{A_m, A_{m-1}}, ..}, A_1}> / 2^(m-1)`;
/// a commutator at level 1 gives the `2^(m-2) (2i)` normalized variant.
pub fn oracle_nested(
    rho: &ComplexMatrix,
    observables: &[ComplexMatrix],
    brackets: &[Bracket],
) -> Result<C64> {
    if observables.is_empty() {
        return Err(Error::Empty("observable list"));
    }
    if brackets.len() != observables.len() {
        return Err(Error::DimensionMismatch {
            expected: observables.len(),
            found: brackets.len(),
        });
    }
    check_dims(rho, &observables.iter().collect::<Vec<_>>())?;
    let mut x = identity(rho.nrows());
    for (a, bracket) in observables.iter().zip(brackets).rev() {
        x = match bracket {
            Bracket::Anticommutator => (&x * a + a * &x).map(|z| z / 2.0),
            Bracket::Commutator => (&x * a - a * &x).map(|z| z / C64::new(0.0, 2.0)),
        };
    }
    Ok(trace_product(&x, rho))
}
