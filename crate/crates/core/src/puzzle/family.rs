//! Desk-scale claw-free family.
//!
//! `f_{k,b}(x) = P_seed(x ⊕ b·s)` where `P_seed` is a four-round keyed
//! mixing bijection that alternates between the two halves of `x`. Claws are
//! exactly the pairs `(x, x ⊕ s)`.

use std::fmt;

use rand::Rng;

use super::PuzzleError;
use crate::bits::Bits;
use crate::rng::derive_seed;

pub const MIN_N: usize = 2;
pub const MAX_N: usize = 12;

const ROUNDS: u64 = 4;
const ROUND_TAG: u64 = 0x6d69_7869_6e67_0000;

/// Length of [`PublicHandle::key_id`]: `n` as `u32` LE then `seed` as `u64` LE.
pub const PUBLIC_KEY_BYTES: usize = 12;
/// Length of [`Trapdoor::to_bytes`]: the public bytes then `s` as `u64` LE.
pub const TRAPDOOR_BYTES: usize = 20;

/// Full key material. Only reachable through a [`Trapdoor`].
#[derive(Clone, PartialEq, Eq)]
pub struct PuzzleKey {
    pub n: usize,
    pub seed: u64,
    pub shift: Bits,
}

impl fmt::Debug for PuzzleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PuzzleKey")
            .field("n", &self.n)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

fn round_function(seed: u64, round: u64, input: u64) -> u64 {
    derive_seed(seed, &[ROUND_TAG | round, input])
}

fn halves(n: usize) -> (usize, usize) {
    let left = n.div_ceil(2);
    (left, n - left)
}

fn low_mask(w: usize) -> u64 {
    (1u64 << w) - 1
}

/// The keyed bijection on `{0,1}^n`.
pub fn mix_forward(seed: u64, x: &Bits) -> Bits {
    let n = x.len();
    let (lw, rw) = halves(n);
    let mut left = x.value() >> rw;
    let mut right = x.value() & low_mask(rw);
    for round in 0..ROUNDS {
        if round % 2 == 0 {
            left ^= round_function(seed, round, right) & low_mask(lw);
        } else {
            right ^= round_function(seed, round, left) & low_mask(rw);
        }
    }
    Bits::new(n, (left << rw) | right)
}

pub fn mix_inverse(seed: u64, y: &Bits) -> Bits {
    let n = y.len();
    let (lw, rw) = halves(n);
    let mut left = y.value() >> rw;
    let mut right = y.value() & low_mask(rw);
    for round in (0..ROUNDS).rev() {
        if round % 2 == 0 {
            left ^= round_function(seed, round, right) & low_mask(lw);
        } else {
            right ^= round_function(seed, round, left) & low_mask(rw);
        }
    }
    Bits::new(n, (left << rw) | right)
}

fn check_n(n: usize) -> Result<(), PuzzleError> {
    if (MIN_N..=MAX_N).contains(&n) {
        Ok(())
    } else {
        Err(PuzzleError::InvalidN(n))
    }
}

/// Evaluation capability for one key. Does not reveal the shift.
#[derive(Clone, PartialEq, Eq)]
pub struct PublicHandle {
    n: usize,
    seed: u64,
    shift: Bits,
}

impl fmt::Debug for PublicHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicHandle(n={}, seed={:#018x})", self.n, self.seed)
    }
}

impl PublicHandle {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `f_{k,b}(x)`.
    pub fn eval(&self, b: bool, x: &Bits) -> Result<Bits, PuzzleError> {
        self.check_len(x)?;
        let input = if b { x.xor(&self.shift) } else { *x };
        Ok(mix_forward(self.seed, &input))
    }

    /// Whether `y = f_{k,b}(x)`.
    pub fn chk(&self, b: bool, x: &Bits, y: &Bits) -> Result<bool, PuzzleError> {
        self.check_len(y)?;
        Ok(self.eval(b, x)? == *y)
    }

    /// Fixed-width little-endian encoding of `(n, seed)`.
    pub fn key_id(&self) -> [u8; PUBLIC_KEY_BYTES] {
        let mut out = [0u8; PUBLIC_KEY_BYTES];
        out[..4].copy_from_slice(&(self.n as u32).to_le_bytes());
        out[4..].copy_from_slice(&self.seed.to_le_bytes());
        out
    }

    fn check_len(&self, x: &Bits) -> Result<(), PuzzleError> {
        if x.len() == self.n {
            Ok(())
        } else {
            Err(PuzzleError::LengthMismatch {
                expected: self.n,
                found: x.len(),
            })
        }
    }
}

/// Inversion capability: the whole key.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Trapdoor {
    key: PuzzleKey,
}

impl Trapdoor {
    pub fn from_key(key: PuzzleKey) -> Result<Self, PuzzleError> {
        check_n(key.n)?;
        if key.shift.len() != key.n {
            return Err(PuzzleError::LengthMismatch {
                expected: key.n,
                found: key.shift.len(),
            });
        }
        if key.shift.is_zero() {
            return Err(PuzzleError::ZeroShift);
        }
        Ok(Self { key })
    }

    pub fn key(&self) -> &PuzzleKey {
        &self.key
    }

    pub fn n(&self) -> usize {
        self.key.n
    }

    pub fn public(&self) -> PublicHandle {
        PublicHandle {
            n: self.key.n,
            seed: self.key.seed,
            shift: self.key.shift,
        }
    }

    /// The unique `x` with `f_{k,b}(x) = y`.
    pub fn inv(&self, b: bool, y: &Bits) -> Result<Bits, PuzzleError> {
        if y.len() != self.key.n {
            return Err(PuzzleError::LengthMismatch {
                expected: self.key.n,
                found: y.len(),
            });
        }
        let x = mix_inverse(self.key.seed, y);
        Ok(if b { x.xor(&self.key.shift) } else { x })
    }

    pub fn to_bytes(&self) -> [u8; TRAPDOOR_BYTES] {
        let mut out = [0u8; TRAPDOOR_BYTES];
        out[..PUBLIC_KEY_BYTES].copy_from_slice(&self.public().key_id());
        out[PUBLIC_KEY_BYTES..].copy_from_slice(&self.key.shift.value().to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PuzzleError> {
        let bytes: &[u8; TRAPDOOR_BYTES] = bytes.try_into().map_err(|_| PuzzleError::Malformed)?;
        let n = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        check_n(n)?;
        let seed = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
        let shift = u64::from_le_bytes(bytes[12..].try_into().unwrap());
        if shift >> n != 0 {
            return Err(PuzzleError::Malformed);
        }
        Self::from_key(PuzzleKey {
            n,
            seed,
            shift: Bits::new(n, shift),
        })
    }
}

/// Samples a key with uniform seed and uniform nonzero shift.
pub fn keygen<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(PublicHandle, Trapdoor), PuzzleError> {
    check_n(n)?;
    let seed = rng.gen::<u64>();
    let shift = Bits::random_nonzero(n, rng);
    let trapdoor = Trapdoor::from_key(PuzzleKey { n, seed, shift })?;
    Ok((trapdoor.public(), trapdoor))
}
