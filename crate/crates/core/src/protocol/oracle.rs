use std::cell::RefCell;
use std::collections::HashMap;

use super::ProtocolError;
use crate::bits::Bits;
use crate::rng::{rng_from_seed, TrialRng};

/// A lazily sampled random function `{0,1}^λ → {0,1}^k`.
///
/// Each new input gets a fresh uniform output from the oracle's own stream;
/// repeated inputs return the stored value.
#[derive(Debug)]
pub struct RandomOracle {
    input_bits: usize,
    output_bits: usize,
    state: RefCell<(TrialRng, HashMap<Bits, Bits>)>,
}

impl RandomOracle {
    pub fn new(input_bits: usize, output_bits: usize, seed: u64) -> Self {
        Self {
            input_bits,
            output_bits,
            state: RefCell::new((rng_from_seed(seed), HashMap::new())),
        }
    }

    pub fn input_bits(&self) -> usize {
        self.input_bits
    }

    pub fn output_bits(&self) -> usize {
        self.output_bits
    }

    pub fn query(&self, x: &Bits) -> Result<Bits, ProtocolError> {
        if x.len() != self.input_bits {
            return Err(ProtocolError::Malformed("oracle input has the wrong width"));
        }
        let mut state = self.state.borrow_mut();
        let (rng, table) = &mut *state;
        Ok(*table
            .entry(*x)
            .or_insert_with(|| Bits::random(self.output_bits, rng)))
    }

    /// Number of distinct inputs queried so far.
    pub fn distinct_queries(&self) -> usize {
        self.state.borrow().1.len()
    }
}
