use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;

use super::{QsimError, MAX_QUBITS, NORM_TOLERANCE};
use crate::bits::Bits;

/// Outcome of measuring one register.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub register: String,
    pub outcome: Bits,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Standard,
    Hadamard,
}

impl Basis {
    pub fn from_bit(b: bool) -> Self {
        if b {
            Basis::Hadamard
        } else {
            Basis::Standard
        }
    }
}

/// Dense pure state over named registers.
///
/// Registers occupy contiguous qubit ranges in declaration order. Qubit `j`
/// is bit `q - 1 - j` of the amplitude index, so reading a register's bits
/// left to right gives its outcome string.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    registers: Vec<(String, Range<usize>)>,
}

impl StateVector {
    /// |0…0⟩ over the declared registers.
    pub fn new(registers: &[(&str, usize)]) -> Result<Self, QsimError> {
        let layout = layout(registers)?;
        let q = total_width(&layout);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1usize << q];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            registers: layout,
        })
    }

    /// Builds a state from explicit amplitudes; the vector must be normalized.
    pub fn from_amplitudes(
        registers: &[(&str, usize)],
        amplitudes: Vec<Complex64>,
    ) -> Result<Self, QsimError> {
        let layout = layout(registers)?;
        let q = total_width(&layout);
        if amplitudes.len() != 1usize << q {
            return Err(QsimError::LengthMismatch {
                expected: 1usize << q,
                found: amplitudes.len(),
            });
        }
        let state = Self {
            amplitudes,
            registers: layout,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(state)
    }

    /// The computational basis state with every register set to the given
    /// outcome (registers not listed stay zero).
    pub fn basis_state(
        registers: &[(&str, usize)],
        values: &[(&str, Bits)],
    ) -> Result<Self, QsimError> {
        let mut state = Self::new(registers)?;
        let mut index = 0usize;
        for (name, value) in values {
            let range = state.register(name)?;
            if value.len() != range.len() {
                return Err(QsimError::LengthMismatch {
                    expected: range.len(),
                    found: value.len(),
                });
            }
            index |= (value.value() as usize) << (state.num_qubits() - range.end);
        }
        state.amplitudes[0] = Complex64::new(0.0, 0.0);
        state.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        total_width(&self.registers)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Amplitude of the basis state whose full bitstring (all registers
    /// concatenated in order) is `index`.
    pub fn amplitude(&self, index: &Bits) -> Complex64 {
        assert_eq!(index.len(), self.num_qubits());
        self.amplitudes[index.value() as usize]
    }

    pub fn register(&self, name: &str) -> Result<Range<usize>, QsimError> {
        self.registers
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| r.clone())
            .ok_or_else(|| QsimError::UnknownRegister(name.to_string()))
    }

    pub fn has_register(&self, name: &str) -> bool {
        self.registers.iter().any(|(n, _)| n == name)
    }

    pub fn register_names(&self) -> impl Iterator<Item = &str> {
        self.registers.iter().map(|(n, _)| n.as_str())
    }

    pub fn registers(&self) -> Vec<(String, usize)> {
        self.registers
            .iter()
            .map(|(n, r)| (n.clone(), r.len()))
            .collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn bit_position(&self, qubit: usize) -> usize {
        self.num_qubits() - 1 - qubit
    }

    fn qubit(&self, register: &str, offset: usize) -> Result<usize, QsimError> {
        let range = self.register(register)?;
        if offset >= range.len() {
            return Err(QsimError::QubitOutOfRange {
                register: register.to_string(),
                offset,
            });
        }
        Ok(range.start + offset)
    }

    fn hadamard_qubit(&mut self, qubit: usize) {
        let stride = 1usize << self.bit_position(qubit);
        for base in (0..self.amplitudes.len()).step_by(stride * 2) {
            for i in base..base + stride {
                let a = self.amplitudes[i];
                let b = self.amplitudes[i + stride];
                self.amplitudes[i] = (a + b) * FRAC_1_SQRT_2;
                self.amplitudes[i + stride] = (a - b) * FRAC_1_SQRT_2;
            }
        }
    }

    /// H on every qubit of the register.
    pub fn apply_hadamard(&mut self, register: &str) -> Result<(), QsimError> {
        for q in self.register(register)? {
            self.hadamard_qubit(q);
        }
        Ok(())
    }

    /// H on a single qubit of a register.
    pub fn apply_hadamard_at(&mut self, register: &str, offset: usize) -> Result<(), QsimError> {
        let q = self.qubit(register, offset)?;
        self.hadamard_qubit(q);
        Ok(())
    }

    /// Pauli X on one qubit of a register.
    pub fn apply_x(&mut self, register: &str, offset: usize) -> Result<(), QsimError> {
        let stride = 1usize << self.bit_position(self.qubit(register, offset)?);
        for i in 0..self.amplitudes.len() {
            if i & stride == 0 {
                self.amplitudes.swap(i, i | stride);
            }
        }
        Ok(())
    }

    /// Pauli Z on one qubit of a register.
    pub fn apply_z(&mut self, register: &str, offset: usize) -> Result<(), QsimError> {
        let stride = 1usize << self.bit_position(self.qubit(register, offset)?);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & stride != 0 {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// X^x Z^z on a whole register, bit `i` of each string acting on qubit `i`.
    pub fn apply_pauli_correction(
        &mut self,
        register: &str,
        x: &Bits,
        z: &Bits,
    ) -> Result<(), QsimError> {
        let width = self.register(register)?.len();
        if x.len() != width || z.len() != width {
            return Err(QsimError::LengthMismatch {
                expected: width,
                found: x.len().max(z.len()),
            });
        }
        for i in 0..width {
            if z.get(i) {
                self.apply_z(register, i)?;
            }
            if x.get(i) {
                self.apply_x(register, i)?;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(
        &mut self,
        control: (&str, usize),
        target: (&str, usize),
    ) -> Result<(), QsimError> {
        let c = 1usize << self.bit_position(self.qubit(control.0, control.1)?);
        let t = 1usize << self.bit_position(self.qubit(target.0, target.1)?);
        if c == t {
            return Err(QsimError::SameQubit);
        }
        for i in 0..self.amplitudes.len() {
            if i & c != 0 && i & t == 0 {
                self.amplitudes.swap(i, i | t);
            }
        }
        Ok(())
    }

    /// |in⟩|out⟩ ↦ |in⟩|out ⊕ f(in)⟩ where `in` is the concatenation of the
    /// input registers. `f` must return a string of the output width.
    pub fn apply_classical_oracle<F>(
        &mut self,
        inputs: &[&str],
        output: &str,
        f: F,
    ) -> Result<(), QsimError>
    where
        F: Fn(Bits) -> Bits,
    {
        let input_ranges = inputs
            .iter()
            .map(|name| self.register(name))
            .collect::<Result<Vec<_>, _>>()?;
        let out_range = self.register(output)?;
        let q = self.num_qubits();
        let mut next = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            let full = Bits::new(q, idx as u64);
            let input = input_ranges
                .iter()
                .fold(Bits::empty(), |acc, r| acc.concat(&full.slice(r.start, r.len())));
            let image = f(input);
            if image.len() != out_range.len() {
                return Err(QsimError::LengthMismatch {
                    expected: out_range.len(),
                    found: image.len(),
                });
            }
            let target = idx ^ ((image.value() as usize) << (q - out_range.end));
            next[target] += *amp;
        }
        self.amplitudes = next;
        Ok(())
    }

    /// `self ⊗ other`, registers of `self` first.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, QsimError> {
        let q = self.num_qubits() + other.num_qubits();
        if q > MAX_QUBITS {
            return Err(QsimError::CapacityExceeded(q));
        }
        for (name, _) in &other.registers {
            if self.has_register(name) {
                return Err(QsimError::DuplicateRegister(name.clone()));
            }
        }
        let mut registers = self.registers.clone();
        let offset = self.num_qubits();
        registers.extend(
            other
                .registers
                .iter()
                .map(|(n, r)| (n.clone(), r.start + offset..r.end + offset)),
        );
        let mut amplitudes = Vec::with_capacity(1usize << q);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(StateVector {
            amplitudes,
            registers,
        })
    }

    pub fn rename_register(&mut self, from: &str, to: &str) -> Result<(), QsimError> {
        if self.has_register(to) {
            return Err(QsimError::DuplicateRegister(to.to_string()));
        }
        let entry = self
            .registers
            .iter_mut()
            .find(|(n, _)| n == from)
            .ok_or_else(|| QsimError::UnknownRegister(from.to_string()))?;
        entry.0 = to.to_string();
        Ok(())
    }

    /// Replaces one register by consecutive sub-registers of the given widths
    /// (which must add up to the original width).
    pub fn split_register(&mut self, name: &str, parts: &[(&str, usize)]) -> Result<(), QsimError> {
        let range = self.register(name)?;
        let total: usize = parts.iter().map(|(_, w)| w).sum();
        if total != range.len() {
            return Err(QsimError::LengthMismatch {
                expected: range.len(),
                found: total,
            });
        }
        for (part, _) in parts {
            if *part != name && self.has_register(part) {
                return Err(QsimError::DuplicateRegister(part.to_string()));
            }
        }
        let pos = self.registers.iter().position(|(n, _)| n == name).unwrap();
        let mut start = range.start;
        let replacement: Vec<_> = parts
            .iter()
            .map(|(n, w)| {
                let r = start..start + w;
                start += w;
                (n.to_string(), r)
            })
            .collect();
        check_unique(replacement.iter().map(|(n, _)| n.as_str()))?;
        self.registers.splice(pos..pos + 1, replacement);
        Ok(())
    }

    fn outcome_of(&self, index: usize, range: &Range<usize>) -> u64 {
        let shift = self.num_qubits() - range.end;
        ((index >> shift) & ((1usize << range.len()) - 1)) as u64
    }

    /// Exact Born probabilities of every outcome of `register` with nonzero
    /// weight. Values sum to one.
    pub fn measurement_distribution(&self, register: &str) -> Result<BTreeMap<Bits, f64>, QsimError> {
        let range = self.register(register)?;
        let mut weights = vec![0.0f64; 1usize << range.len()];
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            weights[self.outcome_of(idx, &range) as usize] += amp.norm_sqr();
        }
        Ok(weights
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > 0.0)
            .map(|(o, w)| (Bits::new(range.len(), o as u64), w))
            .collect())
    }

    /// Exact outcome distribution of `register` measured in `basis`.
    pub fn distribution_in(&self, register: &str, basis: Basis) -> Result<BTreeMap<Bits, f64>, QsimError> {
        match basis {
            Basis::Standard => self.measurement_distribution(register),
            Basis::Hadamard => {
                let mut rotated = self.clone();
                rotated.apply_hadamard(register)?;
                rotated.measurement_distribution(register)
            }
        }
    }

    /// Postselects `register = outcome`. Returns the branch probability and
    /// the renormalized state over the remaining registers, or `None` for the
    /// state when the branch has zero weight.
    pub fn project(
        &self,
        register: &str,
        outcome: &Bits,
    ) -> Result<(f64, Option<StateVector>), QsimError> {
        let range = self.register(register)?;
        if outcome.len() != range.len() {
            return Err(QsimError::LengthMismatch {
                expected: range.len(),
                found: outcome.len(),
            });
        }
        let q = self.num_qubits();
        let width = range.len();
        let low_bits = q - range.end;
        let low_mask = (1usize << low_bits) - 1;
        let mut residual = vec![Complex64::new(0.0, 0.0); 1usize << (q - width)];
        let mut prob = 0.0;
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            if self.outcome_of(idx, &range) != outcome.value() {
                continue;
            }
            prob += amp.norm_sqr();
            let high = (idx >> (low_bits + width)) << low_bits;
            residual[high | (idx & low_mask)] = *amp;
        }
        if prob <= 0.0 {
            return Ok((0.0, None));
        }
        let scale = 1.0 / prob.sqrt();
        for a in &mut residual {
            *a *= scale;
        }
        let registers = self
            .registers
            .iter()
            .filter(|(n, _)| n != register)
            .map(|(n, r)| {
                if r.start >= range.end {
                    (n.clone(), r.start - width..r.end - width)
                } else {
                    (n.clone(), r.clone())
                }
            })
            .collect();
        Ok((
            prob,
            Some(StateVector {
                amplitudes: residual,
                registers,
            }),
        ))
    }

    /// Born-rule measurement of `register` in the standard basis: one uniform
    /// draw, CDF walked in outcome order. Returns the record and the collapsed
    /// state over the remaining registers.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        register: &str,
        rng: &mut R,
    ) -> Result<(MeasurementRecord, StateVector), QsimError> {
        let dist = self.measurement_distribution(register)?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = None;
        for (outcome, p) in &dist {
            acc += p;
            chosen = Some(*outcome);
            if u < acc {
                break;
            }
        }
        let outcome = chosen.expect("distribution of a normalized state is nonempty");
        let (probability, residual) = self.project(register, &outcome)?;
        let residual = residual.expect("sampled outcome has positive weight");
        Ok((
            MeasurementRecord {
                register: register.to_string(),
                outcome,
                probability,
            },
            residual,
        ))
    }

    pub fn measure_in<R: Rng + ?Sized>(
        &self,
        register: &str,
        basis: Basis,
        rng: &mut R,
    ) -> Result<(MeasurementRecord, StateVector), QsimError> {
        match basis {
            Basis::Standard => self.measure(register, rng),
            Basis::Hadamard => {
                let mut rotated = self.clone();
                rotated.apply_hadamard(register)?;
                rotated.measure(register, rng)
            }
        }
    }
}

fn total_width(layout: &[(String, Range<usize>)]) -> usize {
    layout.last().map(|(_, r)| r.end).unwrap_or(0)
}

fn check_unique<'a>(names: impl Iterator<Item = &'a str>) -> Result<(), QsimError> {
    let mut seen = std::collections::BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(QsimError::DuplicateRegister(n.to_string()));
        }
    }
    Ok(())
}

fn layout(registers: &[(&str, usize)]) -> Result<Vec<(String, Range<usize>)>, QsimError> {
    let total: usize = registers.iter().map(|(_, w)| w).sum();
    if total > MAX_QUBITS {
        return Err(QsimError::CapacityExceeded(total));
    }
    check_unique(registers.iter().map(|(n, _)| *n))?;
    let mut start = 0;
    let mut out = Vec::with_capacity(registers.len());
    for (name, width) in registers {
        if *width == 0 {
            return Err(QsimError::EmptyRegister(name.to_string()));
        }
        out.push((name.to_string(), start..start + width));
        start += width;
    }
    Ok(out)
}
