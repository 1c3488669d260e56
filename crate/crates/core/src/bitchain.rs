//! Fixed-length bit strings with XOR algebra.
//!
//! Every value exchanged by the protocol (challenges, keys, commitments and
//! cross values) is a [`BitChain`]. Chains are stored inline, so they are
//! `Copy` and cheap to pass between stations and trial workers.
//!
//! Textual forms put bit index 0 (the most significant bit) first:
//! `01011010` in binary, `5a/8` in hexadecimal with an explicit length.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const WORDS: usize = 4;

/// Longest supported chain, in bits.
pub const MAX_BITS: usize = WORDS * 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitChainError {
    #[error("bit chain length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("cannot draw {count} distinct chains of length {len}")]
    Unsatisfiable { count: usize, len: usize },
    #[error("invalid bit chain length {0} (must be 1..={MAX_BITS})")]
    InvalidLength(usize),
    #[error("value does not fit in {len} bits")]
    Overflow { len: usize },
    #[error("cannot parse bit chain from {0:?}")]
    Parse(String),
}

/// An immutable string of `len` bits.
///
/// Derived equality is structural and is what hash sets use. Protocol code
/// compares chains through [`BitChain::checked_eq`], which refuses to
/// compare chains of different lengths.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitChain {
    len: u16,
    // little-endian words of the numeric value; unused high bits are zero
    words: [u64; WORDS],
}

fn check_len(len: usize) -> Result<(), BitChainError> {
    if len == 0 || len > MAX_BITS {
        return Err(BitChainError::InvalidLength(len));
    }
    Ok(())
}

fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

fn top_mask(len: usize) -> u64 {
    match len % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

impl BitChain {
    /// The all-zero chain of length `len`.
    pub fn zero(len: usize) -> Result<Self, BitChainError> {
        check_len(len)?;
        Ok(BitChain {
            len: len as u16,
            words: [0; WORDS],
        })
    }

    /// Builds a chain whose numeric value is `value`.
    pub fn from_u64(value: u64, len: usize) -> Result<Self, BitChainError> {
        let mut chain = Self::zero(len)?;
        if len < 64 && value >> len != 0 {
            return Err(BitChainError::Overflow { len });
        }
        chain.words[0] = value;
        Ok(chain)
    }

    /// Builds a chain from bits given most significant first.
    pub fn from_bits(bits: &[bool]) -> Result<Self, BitChainError> {
        let mut chain = Self::zero(bits.len())?;
        for (i, &bit) in bits.iter().enumerate() {
            if bit {
                let pos = bits.len() - 1 - i;
                chain.words[pos / 64] |= 1 << (pos % 64);
            }
        }
        Ok(chain)
    }

    /// Uniformly random chain of length `len`.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self, BitChainError> {
        let mut chain = Self::zero(len)?;
        let n = word_count(len);
        for word in chain.words.iter_mut().take(n) {
            *word = rng.next_u64();
        }
        chain.words[n - 1] &= top_mask(len);
        Ok(chain)
    }

    /// Every chain of length `len`, in increasing numeric order.
    pub fn enumerate(len: usize) -> Result<impl Iterator<Item = BitChain>, BitChainError> {
        check_len(len)?;
        if len >= 64 {
            return Err(BitChainError::Overflow { len });
        }
        Ok((0..1u64 << len).map(move |v| BitChain {
            len: len as u16,
            words: [v, 0, 0, 0],
        }))
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    // A chain always holds at least one bit.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bit at textual index `i` (0 is the most significant bit).
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len(), "bit index {i} out of range");
        let pos = self.len() - 1 - i;
        self.words[pos / 64] >> (pos % 64) & 1 == 1
    }

    /// Numeric value, when it fits in a `u64`.
    pub fn to_u64(&self) -> Option<u64> {
        if self.words[1..].iter().all(|&w| w == 0) {
            Some(self.words[0])
        } else {
            None
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor(&self, other: &BitChain) -> Result<BitChain, BitChainError> {
        self.ensure_same_len(other)?;
        let mut out = *self;
        for (w, o) in out.words.iter_mut().zip(other.words.iter()) {
            *w ^= o;
        }
        Ok(out)
    }

    /// Bitwise equality; chains of different lengths are an error.
    pub fn checked_eq(&self, other: &BitChain) -> Result<bool, BitChainError> {
        self.ensure_same_len(other)?;
        Ok(self.words == other.words)
    }

    pub fn ensure_same_len(&self, other: &BitChain) -> Result<(), BitChainError> {
        if self.len != other.len {
            return Err(BitChainError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Hexadecimal form with explicit bit length, e.g. `5a/8`.
    pub fn to_hex(&self) -> String {
        let digits = self.len().div_ceil(4);
        let mut out = String::with_capacity(digits + 4);
        for d in (0..digits).rev() {
            let pos = d * 4;
            let nibble = (self.words[pos / 64] >> (pos % 64)) & 0xf;
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out.push('/');
        out.push_str(&self.len().to_string());
        out
    }

    fn parse_hex(digits: &str, len: usize) -> Result<Self, BitChainError> {
        let mut chain = Self::zero(len)?;
        let bad = || BitChainError::Parse(format!("{digits}/{len}"));
        if digits.is_empty() {
            return Err(bad());
        }
        for (d, c) in digits.chars().rev().enumerate() {
            let nibble = c.to_digit(16).ok_or_else(bad)? as u64;
            if nibble == 0 {
                continue;
            }
            let pos = d * 4;
            if pos >= MAX_BITS {
                return Err(BitChainError::Overflow { len });
            }
            chain.words[pos / 64] |= nibble << (pos % 64);
        }
        let n = word_count(len);
        let fits = chain.words[n - 1] & !top_mask(len) == 0 && chain.words[n..].iter().all(|&w| w == 0);
        if !fits {
            return Err(BitChainError::Overflow { len });
        }
        Ok(chain)
    }
}

/// `count` pairwise-distinct uniformly random chains of length `len`.
///
/// Sampling is by rejection, so the returned tuple is uniform over ordered
/// tuples of distinct chains.
pub fn random_distinct<R: Rng + ?Sized>(
    count: usize,
    len: usize,
    rng: &mut R,
) -> Result<Vec<BitChain>, BitChainError> {
    check_len(len)?;
    if len < 64 && count as u128 > 1u128 << len {
        return Err(BitChainError::Unsatisfiable { count, len });
    }
    let mut out: Vec<BitChain> = Vec::with_capacity(count);
    let mut seen = HashSet::new();
    while out.len() < count {
        let candidate = BitChain::random(len, rng)?;
        let fresh = if count <= 8 {
            !out.contains(&candidate)
        } else {
            seen.insert(candidate)
        };
        if fresh {
            out.push(candidate);
        }
    }
    Ok(out)
}

impl fmt::Display for BitChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitChain({})", self.to_hex())
    }
}

impl FromStr for BitChain {
    type Err = BitChainError;

    /// Accepts either `01011010` or `5a/8`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((digits, len)) = s.split_once('/') {
            let len: usize = len
                .parse()
                .map_err(|_| BitChainError::Parse(s.to_string()))?;
            return Self::parse_hex(digits, len);
        }
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(BitChainError::Parse(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_bits(&bits)
    }
}

impl Serialize for BitChain {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for BitChain {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
