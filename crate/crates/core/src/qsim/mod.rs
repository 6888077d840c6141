//! Small dense statevector engine.
//!
//! Just enough quantum mechanics for the puzzle stack: claw states, standard
//! and Hadamard measurements, EPR pairs and qubit teleportation. States are
//! plain values; [`QuantumMemory`] adds register ownership on top so that two
//! separated parties can share one entangled state without touching each
//! other's qubits.

mod memory;
mod state;

pub use memory::{Holder, QuantumMemory, ScopedView};
pub use state::{Basis, MeasurementRecord, StateVector};

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::bits::Bits;

/// Hard cap on the number of qubits in a single state.
pub const MAX_QUBITS: usize = 24;

/// Absolute tolerance for norms and probabilities.
pub const NORM_TOLERANCE: f64 = 1e-12;

pub const BIT_REGISTER: &str = "bit";
pub const PREIMAGE_REGISTER: &str = "preimage";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("state would need {0} qubits, cap is {MAX_QUBITS}")]
    CapacityExceeded(usize),
    #[error("register {0:?} declared twice")]
    DuplicateRegister(String),
    #[error("no register named {0:?}")]
    UnknownRegister(String),
    #[error("register {0:?} has zero width")]
    EmptyRegister(String),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("qubit {offset} is outside register {register:?}")]
    QubitOutOfRange { register: String, offset: usize },
    #[error("two-qubit gate applied to a single qubit")]
    SameQubit,
    #[error("amplitudes have squared norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("{holder} may not touch register {register:?}")]
    RegisterViolation { register: String, holder: String },
}

/// (|0, x0⟩ + |1, x1⟩)/√2 over registers `("bit", 1), ("preimage", n)`.
pub fn prepare_claw_state(x0: &Bits, x1: &Bits) -> Result<StateVector, QsimError> {
    if x0.len() != x1.len() {
        return Err(QsimError::LengthMismatch {
            expected: x0.len(),
            found: x1.len(),
        });
    }
    let n = x0.len();
    if n + 1 > MAX_QUBITS {
        return Err(QsimError::CapacityExceeded(n + 1));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1usize << (n + 1)];
    let zero = x0.value() as usize;
    let one = (1usize << n) | x1.value() as usize;
    amplitudes[zero] += FRAC_1_SQRT_2;
    amplitudes[one] += FRAC_1_SQRT_2;
    StateVector::from_amplitudes(&[(BIT_REGISTER, 1), (PREIMAGE_REGISTER, n)], amplitudes)
}

/// `count` EPR pairs over registers `("R", count), ("S", count)`, qubit `R_i`
/// entangled with `S_i`.
pub fn make_epr_pairs(count: usize) -> Result<StateVector, QsimError> {
    make_named_epr_pairs(count, "R", "S")
}

pub fn make_named_epr_pairs(count: usize, left: &str, right: &str) -> Result<StateVector, QsimError> {
    if count == 0 {
        return Err(QsimError::EmptyRegister(left.to_string()));
    }
    let mut state = StateVector::new(&[(left, count), (right, count)])?;
    for i in 0..count {
        state.apply_hadamard_at(left, i)?;
        state.apply_cnot((left, i), (right, i))?;
    }
    Ok(state)
}

/// Per-qubit Bell measurement of `source_i` with `epr_local_i`.
///
/// Returns `(k0, k1)` and the state without the two consumed registers. The
/// partner of `epr_local_i` is left holding `X^{k0_i} Z^{k1_i}` applied to the
/// original qubit, so standard-basis results on the remote side are shifted by
/// `k0` and Hadamard-basis results by `k1`.
pub fn teleport<R: Rng + ?Sized>(
    state: &StateVector,
    source: &str,
    epr_local: &str,
    rng: &mut R,
) -> Result<(Bits, Bits, StateVector), QsimError> {
    let width = state.register(source)?.len();
    let local = state.register(epr_local)?.len();
    if width != local {
        return Err(QsimError::LengthMismatch {
            expected: width,
            found: local,
        });
    }
    let mut work = state.clone();
    for i in 0..width {
        work.apply_cnot((source, i), (epr_local, i))?;
        work.apply_hadamard_at(source, i)?;
    }
    let (z_record, work) = work.measure(source, rng)?;
    let (x_record, work) = work.measure(epr_local, rng)?;
    Ok((x_record.outcome, z_record.outcome, work))
}

/// Every branch of [`teleport`] with nonzero weight, as
/// `(k0, k1, probability, residual)`.
pub fn teleport_branches(
    state: &StateVector,
    source: &str,
    epr_local: &str,
) -> Result<Vec<(Bits, Bits, f64, StateVector)>, QsimError> {
    let width = state.register(source)?.len();
    let local = state.register(epr_local)?.len();
    if width != local {
        return Err(QsimError::LengthMismatch {
            expected: width,
            found: local,
        });
    }
    let mut work = state.clone();
    for i in 0..width {
        work.apply_cnot((source, i), (epr_local, i))?;
        work.apply_hadamard_at(source, i)?;
    }
    let mut branches = Vec::new();
    for z in Bits::all(width) {
        let (pz, Some(rest)) = work.project(source, &z)? else {
            continue;
        };
        for x in Bits::all(width) {
            if let (px, Some(residual)) = rest.project(epr_local, &x)? {
                branches.push((x, z, pz * px, residual));
            }
        }
    }
    Ok(branches)
}

#[cfg(test)]
mod tests;
