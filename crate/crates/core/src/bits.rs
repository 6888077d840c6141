//! Short fixed-length bitstrings.
//!
//! Position `0` is the leftmost character of the string form, which is also
//! the most significant bit of the packed value. Register outcomes, puzzle
//! preimages and challenges all use this type.

use std::fmt;

use rand::Rng;

/// Longest bitstring this crate ever needs (the qubit cap is 24).
pub const MAX_BITS: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bits {
    len: u8,
    value: u64,
}

impl Bits {
    /// Panics if `len > 64`; the high bits of `value` beyond `len` are dropped.
    pub fn new(len: usize, value: u64) -> Self {
        assert!(len <= MAX_BITS, "bitstring length {len} exceeds {MAX_BITS}");
        Self {
            len: len as u8,
            value: value & mask(len),
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(len, 0)
    }

    pub fn empty() -> Self {
        Self::zeros(0)
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self::new(len, rng.gen::<u64>())
    }

    /// Uniform over the nonzero strings. `len` must be positive.
    pub fn random_nonzero<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        assert!(len > 0, "no nonzero string of length 0");
        loop {
            let b = Self::random(len, rng);
            if !b.is_zero() {
                return b;
            }
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let value = bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Self::new(bits.len(), value)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len(), "bit index {i} out of range for length {}", self.len);
        (self.value >> (self.len() - 1 - i)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len(), "bit index {i} out of range for length {}", self.len);
        let m = 1u64 << (self.len() - 1 - i);
        if bit {
            self.value |= m;
        } else {
            self.value &= !m;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// Inner product mod 2. Lengths must agree.
    pub fn dot(&self, other: &Bits) -> bool {
        assert_eq!(self.len, other.len, "dot product of mismatched lengths");
        (self.value & other.value).count_ones() & 1 == 1
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        assert_eq!(self.len, other.len, "xor of mismatched lengths");
        Bits::new(self.len(), self.value ^ other.value)
    }

    /// `self ‖ other`.
    pub fn concat(&self, other: &Bits) -> Bits {
        Bits::new(
            self.len() + other.len(),
            (self.value << other.len()) | other.value,
        )
    }

    /// Bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        assert!(start + len <= self.len(), "slice out of range");
        let shift = self.len() - start - len;
        Bits::new(len, self.value >> shift)
    }

    /// All strings of the given length in increasing numeric order.
    pub fn all(len: usize) -> impl Iterator<Item = Bits> {
        assert!(len < MAX_BITS);
        (0..(1u64 << len)).map(move |v| Bits::new(len, v))
    }

    /// Canonical encoding: `u16` LE bit length, then the bits packed
    /// MSB-first into `ceil(len / 8)` bytes.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.len as u16).to_le_bytes());
        let nbytes = self.len().div_ceil(8);
        let padded = if self.is_empty() {
            0
        } else {
            self.value << (nbytes * 8 - self.len())
        };
        for i in (0..nbytes).rev() {
            out.push((padded >> (i * 8)) as u8);
        }
    }

    /// Inverse of [`Bits::encode_into`]; returns the value and the rest of the
    /// input. Non-canonical padding is rejected.
    pub fn decode(input: &[u8]) -> Option<(Bits, &[u8])> {
        let (len_bytes, rest) = input.split_first_chunk::<2>()?;
        let len = u16::from_le_bytes(*len_bytes) as usize;
        if len > MAX_BITS {
            return None;
        }
        let nbytes = len.div_ceil(8);
        if rest.len() < nbytes {
            return None;
        }
        let (body, rest) = rest.split_at(nbytes);
        let padded = body.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64);
        let pad = nbytes * 8 - len;
        if pad > 0 && padded & ((1u64 << pad) - 1) != 0 {
            return None;
        }
        let value = if len == 0 { 0 } else { padded >> pad };
        Some((Bits::new(len, value), rest))
    }
}

fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl std::str::FromStr for Bits {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() > MAX_BITS {
            return Err(format!("bitstring longer than {MAX_BITS}"));
        }
        let bools = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid bit character {other:?}")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Bits::from_bools(&bools))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn string_form_is_msb_first() {
        let b: Bits = "011".parse().unwrap();
        assert_eq!(b.value(), 3);
        assert!(!b.get(0));
        assert!(b.get(2));
        assert_eq!(b.to_string(), "011");
    }

    #[test]
    fn dot_and_xor() {
        let a: Bits = "1101".parse().unwrap();
        let b: Bits = "1011".parse().unwrap();
        assert!(!a.dot(&b));
        assert_eq!(a.xor(&b).to_string(), "0110");
        assert_eq!(a.concat(&b).slice(4, 4), b);
    }

    #[test]
    fn decode_rejects_dirty_padding() {
        // length 3, byte 0b1110_0001 has a nonzero pad bit
        assert!(Bits::decode(&[3, 0, 0b1110_0001]).is_none());
        assert!(Bits::decode(&[9, 0, 0xff]).is_none());
    }

    proptest! {
        #[test]
        fn encoding_round_trips(len in 0usize..=24, v in any::<u64>(), tail in proptest::collection::vec(any::<u8>(), 0..4)) {
            let b = Bits::new(len, v);
            let mut buf = Vec::new();
            b.encode_into(&mut buf);
            prop_assert_eq!(buf.len(), 2 + len.div_ceil(8));
            buf.extend_from_slice(&tail);
            let (back, rest) = Bits::decode(&buf).unwrap();
            prop_assert_eq!(back, b);
            prop_assert_eq!(rest, &tail[..]);
        }
    }
}
