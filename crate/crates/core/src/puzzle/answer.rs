//! Challenges, answers and obligations, with their canonical byte forms.
//!
//! The protocol compares answers and obligations by byte equality of these
//! encodings, so each value has exactly one encoding and decoders reject
//! anything else.

use super::PuzzleError;
use crate::bits::Bits;

const TAG_PREIMAGE: u8 = 0;
const TAG_EQUATION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Challenge {
    pub bits: Bits,
}

impl Challenge {
    pub fn new(bits: Bits) -> Self {
        Self { bits }
    }

    pub fn single(b: bool) -> Self {
        Self {
            bits: Bits::new(1, b as u64),
        }
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.bits.encode_into(&mut out);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PuzzleError> {
        match Bits::decode(bytes) {
            Some((bits, [])) => Ok(Self { bits }),
            _ => Err(PuzzleError::Malformed),
        }
    }
}

/// One answer to a base puzzle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Answer {
    /// Challenge 0: a claimed preimage `value` of `y` under branch `bit`.
    Preimage { bit: bool, value: Bits },
    /// Challenge 1: a Hadamard-basis outcome `(c, d)`.
    Equation { c: bool, d: Bits },
}

impl Answer {
    /// The challenge bit this answer is shaped for.
    pub fn challenge_bit(&self) -> bool {
        matches!(self, Answer::Equation { .. })
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        let (tag, bit, body) = match self {
            Answer::Preimage { bit, value } => (TAG_PREIMAGE, *bit, value),
            Answer::Equation { c, d } => (TAG_EQUATION, *c, d),
        };
        out.push(tag);
        out.push(bit as u8);
        body.encode_into(out);
    }

    pub fn decode(input: &[u8]) -> Option<(Answer, &[u8])> {
        let (&tag, rest) = input.split_first()?;
        let (&bit, rest) = rest.split_first()?;
        let bit = match bit {
            0 => false,
            1 => true,
            _ => return None,
        };
        let (body, rest) = Bits::decode(rest)?;
        let answer = match tag {
            TAG_PREIMAGE => Answer::Preimage { bit, value: body },
            TAG_EQUATION => Answer::Equation { c: bit, d: body },
            _ => return None,
        };
        Some((answer, rest))
    }
}

fn encode_count(count: usize, out: &mut Vec<u8>) {
    out.extend_from_slice(&(count as u32).to_le_bytes());
}

fn decode_count(input: &[u8]) -> Option<(usize, &[u8])> {
    let (head, rest) = input.split_first_chunk::<4>()?;
    Some((u32::from_le_bytes(*head) as usize, rest))
}

/// Committed image strings, one per puzzle instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Obligation {
    pub ys: Vec<Bits>,
}

impl Obligation {
    pub fn single(y: Bits) -> Self {
        Self { ys: vec![y] }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        encode_count(self.ys.len(), &mut out);
        for y in &self.ys {
            y.encode_into(&mut out);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PuzzleError> {
        let (count, mut rest) = decode_count(bytes).ok_or(PuzzleError::Malformed)?;
        let mut ys = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let (y, tail) = Bits::decode(rest).ok_or(PuzzleError::Malformed)?;
            ys.push(y);
            rest = tail;
        }
        if !rest.is_empty() {
            return Err(PuzzleError::Malformed);
        }
        Ok(Self { ys })
    }
}

/// Per-instance answers of a repeated puzzle.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnswerVector {
    pub answers: Vec<Answer>,
}

impl AnswerVector {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        encode_count(self.answers.len(), &mut out);
        for a in &self.answers {
            a.encode_into(&mut out);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PuzzleError> {
        let (count, mut rest) = decode_count(bytes).ok_or(PuzzleError::Malformed)?;
        let mut answers = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let (a, tail) = Answer::decode(rest).ok_or(PuzzleError::Malformed)?;
            answers.push(a);
            rest = tail;
        }
        if !rest.is_empty() {
            return Err(PuzzleError::Malformed);
        }
        Ok(Self { answers })
    }
}
