//! Wire format of every message exchanged in a protocol run.
//!
//! One tag byte, then the canonical encoding of the body. Verifiers compare
//! obligations and answers by byte equality of these encodings.

use crate::bits::Bits;
use crate::puzzle::{AnswerVector, Challenge, Obligation, PuzzleError, RepeatedPublic};

pub const TAG_KEY: u8 = 0x01;
pub const TAG_CHALLENGE: u8 = 0x02;
pub const TAG_NONCE: u8 = 0x03;
pub const TAG_OBLIGATION: u8 = 0x04;
pub const TAG_ANSWERS: u8 = 0x05;
pub const TAG_PRIVATE: u8 = 0x06;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    /// V0's first message: key ids, plus `x0` in the random-oracle variant.
    Key { public: Vec<u8>, nonce: Option<Bits> },
    Challenge(Challenge),
    /// V1's `x1` in the random-oracle variant.
    Nonce(Bits),
    Obligation(Obligation),
    Answers(AnswerVector),
    /// Adversary-to-adversary traffic.
    Private(Vec<u8>),
}

impl Payload {
    pub fn key(public: &RepeatedPublic, nonce: Option<Bits>) -> Self {
        Payload::Key {
            public: public.to_bytes(),
            nonce,
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            Payload::Key { .. } => TAG_KEY,
            Payload::Challenge(_) => TAG_CHALLENGE,
            Payload::Nonce(_) => TAG_NONCE,
            Payload::Obligation(_) => TAG_OBLIGATION,
            Payload::Answers(_) => TAG_ANSWERS,
            Payload::Private(_) => TAG_PRIVATE,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![self.tag()];
        match self {
            Payload::Key { public, nonce } => {
                out.extend_from_slice(&(public.len() as u32).to_le_bytes());
                out.extend_from_slice(public);
                match nonce {
                    None => out.push(0),
                    Some(x) => {
                        out.push(1);
                        x.encode_into(&mut out);
                    }
                }
            }
            Payload::Challenge(c) => out.extend(c.encode()),
            Payload::Nonce(x) => x.encode_into(&mut out),
            Payload::Obligation(o) => out.extend(o.encode()),
            Payload::Answers(a) => out.extend(a.encode()),
            Payload::Private(bytes) => out.extend_from_slice(bytes),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PuzzleError> {
        let (&tag, body) = bytes.split_first().ok_or(PuzzleError::Malformed)?;
        match tag {
            TAG_KEY => {
                let (len, rest) = body.split_first_chunk::<4>().ok_or(PuzzleError::Malformed)?;
                let len = u32::from_le_bytes(*len) as usize;
                if rest.len() < len + 1 {
                    return Err(PuzzleError::Malformed);
                }
                let (public, rest) = rest.split_at(len);
                let nonce = match rest {
                    [0] => None,
                    [1, tail @ ..] => match Bits::decode(tail) {
                        Some((x, [])) => Some(x),
                        _ => return Err(PuzzleError::Malformed),
                    },
                    _ => return Err(PuzzleError::Malformed),
                };
                Ok(Payload::Key {
                    public: public.to_vec(),
                    nonce,
                })
            }
            TAG_CHALLENGE => Challenge::decode(body).map(Payload::Challenge),
            TAG_NONCE => match Bits::decode(body) {
                Some((x, [])) => Ok(Payload::Nonce(x)),
                _ => Err(PuzzleError::Malformed),
            },
            TAG_OBLIGATION => Obligation::decode(body).map(Payload::Obligation),
            TAG_ANSWERS => AnswerVector::decode(body).map(Payload::Answers),
            TAG_PRIVATE => Ok(Payload::Private(body.to_vec())),
            _ => Err(PuzzleError::Malformed),
        }
    }
}
