//! Bit strings over `{0,1}^w` and dense bit tables indexed by them.
//!
//! A string `x = x_1 x_2 ... x_w` is stored as an integer whose bit `j - 1`
//! holds variable `x_j`. The textual form lists `x_1` first, so `"1001"` has
//! value `0b1001` read right-to-left: bits 0 and 3 set.

use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Largest width a dense table (truth table, explicit set) may have.
pub const MAX_TABLE_WIDTH: u32 = 26;

/// Largest width of a single bit string.
pub const MAX_STRING_WIDTH: u32 = 64;

#[inline]
pub fn low_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Drops bit `pos` (0-based) from `x`, shifting the higher bits down by one.
#[inline]
pub fn remove_bit(x: u64, pos: u32) -> u64 {
    let low = x & low_mask(pos);
    let high = if pos >= 63 {
        0
    } else {
        (x >> (pos + 1)) << pos
    };
    low | high
}

/// Inverse of [`remove_bit`]: opens a gap at `pos` and writes `bit` there.
#[inline]
pub fn insert_bit(y: u64, pos: u32, bit: bool) -> u64 {
    let low = y & low_mask(pos);
    let high = if pos >= 63 {
        0
    } else {
        (y >> pos) << (pos + 1)
    };
    low | high | ((bit as u64) << pos)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BitString {
    value: u64,
    width: u32,
}

impl BitString {
    pub fn new(value: u64, width: u32) -> Result<Self> {
        if width == 0 || width > MAX_STRING_WIDTH {
            return Err(Error::WidthOutOfRange {
                width,
                min: 1,
                max: MAX_STRING_WIDTH,
            });
        }
        if value & !low_mask(width) != 0 {
            return Err(Error::ValueOutOfRange { value, width });
        }
        Ok(Self { value, width })
    }

    pub fn zeros(width: u32) -> Result<Self> {
        Self::new(0, width)
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    /// Variable `x_j`, 1-based.
    pub fn bit(&self, j: u32) -> Result<bool> {
        self.check_var(j)?;
        Ok(self.value >> (j - 1) & 1 == 1)
    }

    /// `x ⊕ e_j`, 1-based.
    pub fn flip(&self, j: u32) -> Result<Self> {
        self.check_var(j)?;
        Ok(Self {
            value: self.value ^ (1u64 << (j - 1)),
            width: self.width,
        })
    }

    fn check_var(&self, j: u32) -> Result<()> {
        if j == 0 || j > self.width {
            return Err(Error::IndexOutOfRange {
                what: "variable",
                index: j as u64,
                max: self.width as u64,
            });
        }
        Ok(())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.width {
            f.write_str(if self.value >> j & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let width = s.len() as u32;
        let mut value = 0u64;
        for (j, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' if j < 64 => value |= 1u64 << j,
                _ => return Err(Error::Encoding(format!("bad bit string {s:?}"))),
            }
        }
        Self::new(value, width)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A dense table of `2^width` bits indexed by `x ∈ {0,1}^width`.
///
/// Serialized as `{"width": w, "bits": <base64>}` where byte `k`, bit `b`
/// (least significant first) holds entry `8k + b`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitTable {
    width: u32,
    words: Vec<u64>,
}

impl BitTable {
    pub fn new(width: u32) -> Result<Self> {
        if width > MAX_TABLE_WIDTH {
            return Err(Error::WidthOutOfRange {
                width,
                min: 0,
                max: MAX_TABLE_WIDTH,
            });
        }
        let words = (1usize << width).div_ceil(64);
        Ok(Self {
            width,
            words: vec![0; words],
        })
    }

    /// Builds the table word by word; `f` sees every index `x < 2^width`.
    pub fn from_fn<F>(width: u32, f: F) -> Result<Self>
    where
        F: Fn(u64) -> bool + Sync + Send,
    {
        let mut table = Self::new(width)?;
        let len = table.len() as u64;
        crate::par::fill_indexed(&mut table.words, |w| {
            let base = (w as u64) * 64;
            let top = (len - base).min(64);
            let mut word = 0u64;
            for b in 0..top {
                if f(base + b) {
                    word |= 1 << b;
                }
            }
            word
        });
        Ok(table)
    }

    pub fn from_words(width: u32, words: Vec<u64>) -> Result<Self> {
        let mut table = Self::new(width)?;
        if words.len() != table.words.len() {
            return Err(Error::DimensionMismatch {
                left: table.words.len(),
                right: words.len(),
            });
        }
        table.words = words;
        table.clear_padding();
        Ok(table)
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn len(&self) -> usize {
        1usize << self.width
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Unchecked in release builds beyond the slice bound check.
    #[inline]
    pub fn get(&self, x: u64) -> bool {
        debug_assert!(x < self.len() as u64);
        self.words[(x >> 6) as usize] >> (x & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: u64, value: bool) {
        let word = &mut self.words[(x >> 6) as usize];
        if value {
            *word |= 1 << (x & 63);
        } else {
            *word &= !(1 << (x & 63));
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn complement(&self) -> Self {
        let mut out = Self {
            width: self.width,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.clear_padding();
        out
    }

    /// Indices of set entries in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as u64;
                rest &= rest - 1;
                Some((w as u64) * 64 + b)
            })
        })
    }

    fn clear_padding(&mut self) {
        if self.width < 6 {
            self.words[0] &= low_mask(1 << self.width);
        }
    }

    pub fn to_base64(&self) -> String {
        let nbytes = self.len().div_ceil(8);
        let bytes: Vec<u8> = self
            .words
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(nbytes)
            .collect();
        STANDARD.encode(bytes)
    }

    pub fn from_base64(width: u32, encoded: &str) -> Result<Self> {
        let mut table = Self::new(width)?;
        let bytes = STANDARD
            .decode(encoded.trim())
            .map_err(|e| Error::Encoding(format!("base64: {e}")))?;
        let nbytes = table.len().div_ceil(8);
        if bytes.len() != nbytes {
            return Err(Error::Encoding(format!(
                "expected {nbytes} bytes for width {width}, got {}",
                bytes.len()
            )));
        }
        for (w, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            table.words[w] = u64::from_le_bytes(buf);
        }
        if width < 3 && table.words[0] & !low_mask(1 << width) != 0 {
            return Err(Error::Encoding("padding bits set".into()));
        }
        Ok(table)
    }
}

impl fmt::Debug for BitTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BitTable")
            .field("width", &self.width)
            .field("ones", &self.count_ones())
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct BitTableRepr {
    width: u32,
    bits: String,
}

impl Serialize for BitTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        BitTableRepr {
            width: self.width,
            bits: self.to_base64(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BitTable {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = BitTableRepr::deserialize(deserializer)?;
        BitTable::from_base64(repr.width, &repr.bits).map_err(serde::de::Error::custom)
    }
}
