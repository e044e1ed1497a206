//! Fixed-length bit vectors used for inputs, messages and transcripts.

use std::fmt;

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An immutable vector of bits. Serializes as a string of `0`/`1`
/// characters, most significant bit first when read as an integer.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    /// The `width` low bits of `value`, most significant first.
    /// `from_index(6, 4)` is `0110`.
    pub fn from_index(value: usize, width: usize) -> Self {
        let bits = (0..width).map(|i| value >> (width - 1 - i) & 1 == 1).collect();
        BitString(bits)
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!(
                    "bit strings contain only 0 and 1, found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        BitString((0..len).map(|_| rng.gen::<bool>()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    /// Value as an integer, most significant bit first.
    pub fn to_index(&self) -> usize {
        assert!(self.0.len() <= usize::BITS as usize, "bit string too long for an index");
        self.0.iter().fold(0, |acc, &b| acc << 1 | b as usize)
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        assert_eq!(self.len(), other.len(), "xor requires equal lengths");
        BitString(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }

    /// Inner product modulo 2.
    pub fn dot(&self, other: &BitString) -> bool {
        assert_eq!(self.len(), other.len(), "dot requires equal lengths");
        self.0.iter().zip(&other.0).filter(|(a, b)| **a && **b).count() % 2 == 1
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut bits = self.0.clone();
        bits.extend_from_slice(&other.0);
        BitString(bits)
    }

    pub fn split_at(&self, mid: usize) -> (BitString, BitString) {
        let (a, b) = self.0.split_at(mid);
        (BitString(a.to_vec()), BitString(b.to_vec()))
    }

    /// Extend with zeros on the right up to `len`.
    pub fn pad_to(&self, len: usize) -> BitString {
        assert!(len >= self.len());
        let mut bits = self.0.clone();
        bits.resize(len, false);
        BitString(bits)
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", b as u8)?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BitString::parse(&s).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn index_roundtrip_msb_first() {
        let b = BitString::from_index(6, 4);
        assert_eq!(b.to_string(), "0110");
        assert_eq!(b.to_index(), 6);
    }

    #[test]
    fn parse_rejects_non_bits() {
        assert!(BitString::parse("01a").is_err());
    }

    #[test]
    fn dot_is_parity_of_and() {
        let a = BitString::parse("1101").unwrap();
        let b = BitString::parse("1011").unwrap();
        // overlap at positions 0 and 3
        assert!(!a.dot(&b));
        let c = BitString::parse("0100").unwrap();
        assert!(a.dot(&c));
    }

    #[test]
    fn serde_uses_zero_one_strings() {
        let b = BitString::parse("0101").unwrap();
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, "\"0101\"");
        let back: BitString = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
    }

    proptest! {
        #[test]
        fn roundtrip_any_index(value in 0usize..1 << 12, extra in 0usize..4) {
            let width = 12 + extra;
            let b = BitString::from_index(value, width);
            prop_assert_eq!(b.len(), width);
            prop_assert_eq!(b.to_index(), value);
        }

        #[test]
        fn xor_is_involutive(a in proptest::collection::vec(any::<bool>(), 0..32),
                             b in proptest::collection::vec(any::<bool>(), 0..32)) {
            let n = a.len().min(b.len());
            let x = BitString::new(a[..n].to_vec());
            let y = BitString::new(b[..n].to_vec());
            prop_assert_eq!(x.xor(&y).xor(&y), x);
        }
    }
}
