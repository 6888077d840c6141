use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use rand::Rng;

use super::state::{Basis, MeasurementRecord, StateVector};
use super::{teleport, QsimError};
use crate::bits::Bits;

/// Label of a party allowed to act on a register.
pub type Holder = &'static str;

/// A quantum memory kept as a product of independent factors, with every
/// register owned by exactly one holder.
///
/// Factors are only merged when a two-register operation spans them, so
/// unentangled parts never count against the qubit cap together.
#[derive(Debug, Default, Clone)]
pub struct QuantumMemory {
    factors: Vec<StateVector>,
    owners: BTreeMap<String, Holder>,
    teleported: usize,
}

impl QuantumMemory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a state, assigning each of its registers to a holder. Every
    /// register must be assigned exactly once.
    pub fn insert(&mut self, state: StateVector, owners: &[(&str, Holder)]) -> Result<(), QsimError> {
        let names: Vec<String> = state.register_names().map(str::to_string).collect();
        for name in &names {
            if self.owners.contains_key(name) {
                return Err(QsimError::DuplicateRegister(name.clone()));
            }
            if !owners.iter().any(|(n, _)| n == name) {
                return Err(QsimError::UnknownRegister(name.clone()));
            }
        }
        for (n, _) in owners {
            if !names.iter().any(|x| x == n) {
                return Err(QsimError::UnknownRegister(n.to_string()));
            }
        }
        for (n, h) in owners {
            self.owners.insert(n.to_string(), h);
        }
        self.factors.push(state);
        Ok(())
    }

    /// Adds a state whose registers all belong to `holder`.
    pub fn insert_owned(&mut self, state: StateVector, holder: Holder) -> Result<(), QsimError> {
        let names: Vec<String> = state.register_names().map(str::to_string).collect();
        let owners: Vec<(&str, Holder)> = names.iter().map(|n| (n.as_str(), holder)).collect();
        self.insert(state, &owners)
    }

    pub fn owner(&self, register: &str) -> Option<Holder> {
        self.owners.get(register).copied()
    }

    /// Every register with its holder, in name order.
    pub fn assignments(&self) -> impl Iterator<Item = (&str, Holder)> {
        self.owners.iter().map(|(n, h)| (n.as_str(), *h))
    }

    pub fn registers_of(&self, holder: Holder) -> Vec<String> {
        self.owners
            .iter()
            .filter(|(_, h)| **h == holder)
            .map(|(n, _)| n.clone())
            .collect()
    }

    pub fn total_qubits(&self) -> usize {
        self.factors.iter().map(StateVector::num_qubits).sum()
    }

    /// EPR qubits used up by [`teleport`](Self::teleport) so far.
    pub fn epr_consumed(&self) -> usize {
        self.teleported
    }

    /// Qubits held by `b` that sit in a factor together with a register of
    /// `a`. Factor-sharing upper-bounds entanglement between the two.
    pub fn shared_qubits(&self, a: Holder, b: Holder) -> usize {
        let held_by = |f: &StateVector, h: Holder| -> Vec<usize> {
            f.registers()
                .into_iter()
                .filter(|(name, _)| self.owners.get(name) == Some(&h))
                .map(|(_, w)| w)
                .collect()
        };
        self.factors
            .iter()
            .filter(|f| !held_by(f, a).is_empty())
            .map(|f| held_by(f, b).iter().sum::<usize>())
            .sum()
    }

    pub fn largest_factor(&self) -> usize {
        self.factors.iter().map(StateVector::num_qubits).max().unwrap_or(0)
    }

    pub fn into_shared(self) -> Rc<RefCell<QuantumMemory>> {
        Rc::new(RefCell::new(self))
    }

    fn authorize(&self, holder: Holder, register: &str) -> Result<usize, QsimError> {
        match self.owners.get(register) {
            None => Err(QsimError::UnknownRegister(register.to_string())),
            Some(h) if *h != holder => Err(QsimError::RegisterViolation {
                register: register.to_string(),
                holder: holder.to_string(),
            }),
            Some(_) => Ok(self
                .factors
                .iter()
                .position(|f| f.has_register(register))
                .expect("owned register lives in some factor")),
        }
    }

    /// Merges the factors holding two registers; returns the merged index.
    fn merge(&mut self, a: usize, b: usize) -> Result<usize, QsimError> {
        if a == b {
            return Ok(a);
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let merged = self.factors[lo].tensor(&self.factors[hi])?;
        self.factors.remove(hi);
        self.factors[lo] = merged;
        Ok(lo)
    }

    fn replace_after_measure(&mut self, idx: usize, register: &str, residual: StateVector) {
        self.owners.remove(register);
        if residual.num_qubits() == 0 {
            self.factors.remove(idx);
        } else {
            self.factors[idx] = residual;
        }
    }

    pub fn apply_hadamard(&mut self, holder: Holder, register: &str) -> Result<(), QsimError> {
        let idx = self.authorize(holder, register)?;
        self.factors[idx].apply_hadamard(register)
    }

    pub fn apply_x(&mut self, holder: Holder, register: &str, offset: usize) -> Result<(), QsimError> {
        let idx = self.authorize(holder, register)?;
        self.factors[idx].apply_x(register, offset)
    }

    pub fn apply_z(&mut self, holder: Holder, register: &str, offset: usize) -> Result<(), QsimError> {
        let idx = self.authorize(holder, register)?;
        self.factors[idx].apply_z(register, offset)
    }

    /// Measures and discards a register.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        holder: Holder,
        register: &str,
        basis: Basis,
        rng: &mut R,
    ) -> Result<MeasurementRecord, QsimError> {
        let idx = self.authorize(holder, register)?;
        let (record, residual) = self.factors[idx].measure_in(register, basis, rng)?;
        self.replace_after_measure(idx, register, residual);
        Ok(record)
    }

    /// Exact marginal distribution of a register, without disturbing it.
    pub fn distribution(
        &self,
        holder: Holder,
        register: &str,
        basis: Basis,
    ) -> Result<BTreeMap<Bits, f64>, QsimError> {
        let idx = self.authorize(holder, register)?;
        self.factors[idx].distribution_in(register, basis)
    }

    /// Teleports `source` through `epr_local`; both must belong to `holder`.
    /// Returns `(k0, k1)` as in [`teleport`].
    pub fn teleport<R: Rng + ?Sized>(
        &mut self,
        holder: Holder,
        source: &str,
        epr_local: &str,
        rng: &mut R,
    ) -> Result<(Bits, Bits), QsimError> {
        let a = self.authorize(holder, source)?;
        let b = self.authorize(holder, epr_local)?;
        let idx = self.merge(a, b)?;
        let (k0, k1, residual) = teleport(&self.factors[idx], source, epr_local, rng)?;
        self.teleported += k0.len();
        self.owners.remove(source);
        self.replace_after_measure(idx, epr_local, residual);
        Ok((k0, k1))
    }

    /// Splits an owned register into sub-registers owned by the same holder.
    pub fn split_register(
        &mut self,
        holder: Holder,
        register: &str,
        parts: &[(&str, usize)],
    ) -> Result<(), QsimError> {
        let idx = self.authorize(holder, register)?;
        for (p, _) in parts {
            if *p != register && self.owners.contains_key(*p) {
                return Err(QsimError::DuplicateRegister(p.to_string()));
            }
        }
        self.factors[idx].split_register(register, parts)?;
        self.owners.remove(register);
        for (p, _) in parts {
            self.owners.insert(p.to_string(), holder);
        }
        Ok(())
    }
}

/// A holder's handle on a shared [`QuantumMemory`]. Every operation is checked
/// against register ownership and fails with
/// [`QsimError::RegisterViolation`] on a register held by someone else.
#[derive(Debug, Clone)]
pub struct ScopedView {
    memory: Rc<RefCell<QuantumMemory>>,
    holder: Holder,
}

impl ScopedView {
    pub fn new(memory: Rc<RefCell<QuantumMemory>>, holder: Holder) -> Self {
        Self { memory, holder }
    }

    pub fn holder(&self) -> Holder {
        self.holder
    }

    pub fn registers(&self) -> Vec<String> {
        self.memory.borrow().registers_of(self.holder)
    }

    pub fn insert(&self, state: StateVector) -> Result<(), QsimError> {
        self.memory.borrow_mut().insert_owned(state, self.holder)
    }

    pub fn apply_hadamard(&self, register: &str) -> Result<(), QsimError> {
        self.memory.borrow_mut().apply_hadamard(self.holder, register)
    }

    pub fn apply_x(&self, register: &str, offset: usize) -> Result<(), QsimError> {
        self.memory.borrow_mut().apply_x(self.holder, register, offset)
    }

    pub fn apply_z(&self, register: &str, offset: usize) -> Result<(), QsimError> {
        self.memory.borrow_mut().apply_z(self.holder, register, offset)
    }

    pub fn measure<R: Rng + ?Sized>(
        &self,
        register: &str,
        basis: Basis,
        rng: &mut R,
    ) -> Result<MeasurementRecord, QsimError> {
        self.memory
            .borrow_mut()
            .measure(self.holder, register, basis, rng)
    }

    pub fn distribution(&self, register: &str, basis: Basis) -> Result<BTreeMap<Bits, f64>, QsimError> {
        self.memory.borrow().distribution(self.holder, register, basis)
    }

    pub fn teleport<R: Rng + ?Sized>(
        &self,
        source: &str,
        epr_local: &str,
        rng: &mut R,
    ) -> Result<(Bits, Bits), QsimError> {
        self.memory
            .borrow_mut()
            .teleport(self.holder, source, epr_local, rng)
    }

    pub fn split_register(&self, register: &str, parts: &[(&str, usize)]) -> Result<(), QsimError> {
        self.memory
            .borrow_mut()
            .split_register(self.holder, register, parts)
    }
}
