//! Fixed-length boolean attribute vectors.
//!
//! A [`Product`] packs up to 64 attribute bits into a `u64`. Attribute 0 is the
//! most significant bit, so integer order on the packed value coincides with
//! lexicographic order on the bit string ("0011" < "0100").

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A candidate product: one boolean value per attribute.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Product {
    bits: u64,
    len: u8,
}

impl Product {
    /// Largest attribute count a packed product can hold.
    pub const MAX_LEN: usize = 64;

    pub fn zeros(len: usize) -> Self {
        assert!(
            (1..=Self::MAX_LEN).contains(&len),
            "product length {len} out of range"
        );
        Self {
            bits: 0,
            len: len as u8,
        }
    }

    /// Builds a product from its packed representation; bits above `len` must be clear.
    pub fn from_bits(bits: u64, len: usize) -> Self {
        let p = Self::zeros(len);
        assert_eq!(bits & !p.mask(), 0, "bits {bits:#x} exceed length {len}");
        Self { bits, ..p }
    }

    pub fn from_bools(values: &[bool]) -> Self {
        let mut bits = 0u64;
        for &v in values {
            bits = (bits << 1) | v as u64;
        }
        Self::from_bits(bits, values.len())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    fn mask(&self) -> u64 {
        if self.len == 64 {
            u64::MAX
        } else {
            (1u64 << self.len) - 1
        }
    }

    #[inline]
    fn shift(&self, attr: usize) -> usize {
        debug_assert!(attr < self.len());
        self.len() - 1 - attr
    }

    /// Value of attribute `attr` (0-based).
    #[inline]
    pub fn get(&self, attr: usize) -> bool {
        (self.bits >> self.shift(attr)) & 1 == 1
    }

    #[inline]
    pub fn with(&self, attr: usize, value: bool) -> Self {
        let bit = 1u64 << self.shift(attr);
        let bits = if value {
            self.bits | bit
        } else {
            self.bits & !bit
        };
        Self {
            bits,
            len: self.len,
        }
    }

    #[inline]
    pub fn flipped(&self, attr: usize) -> Self {
        Self {
            bits: self.bits ^ (1u64 << self.shift(attr)),
            len: self.len,
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }

    /// Position of attribute `attr` inside the packed `u64`.
    #[inline]
    pub fn attr_mask(len: usize, attr: usize) -> u64 {
        1u64 << (len - 1 - attr)
    }

    /// All `2^len` products in integer (lexicographic) order. Only sensible for small `len`.
    pub fn all(len: usize) -> impl Iterator<Item = Product> {
        assert!(len < 64);
        (0..1u64 << len).map(move |b| Product::from_bits(b, len))
    }
}

impl Ord for Product {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.bits.cmp(&other.bits))
    }
}

impl PartialOrd for Product {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Product({self})")
    }
}

impl FromStr for Product {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s.len() > Self::MAX_LEN {
            return Err(Error::InvalidParameter(format!(
                "bit string must have 1..={} characters, got {}",
                Self::MAX_LEN,
                s.len()
            )));
        }
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            let v = match c {
                '0' => 0,
                '1' => 1,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "bit string has {other:?} at position {i}; expected 0 or 1"
                    )))
                }
            };
            bits = (bits << 1) | v;
        }
        Ok(Product::from_bits(bits, s.len()))
    }
}

impl Serialize for Product {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Product {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
