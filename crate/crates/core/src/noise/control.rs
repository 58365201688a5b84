//! Control-set and phase-set descriptions.
//!
//! The full families are doubly exponential, so sets are described rather
//! than enumerated: explicit bit tables up to [`MAX_TABLE_WIDTH`] bits,
//! counter-hash predicates for any size, and block predicates that respect the
//! code's block layout (the shape the structured evaluator can factorize).

use serde::{Deserialize, Serialize};

use crate::bits::{low_mask, remove_bit, BitString, BitTable, MAX_TABLE_WIDTH};
use crate::rng;
use crate::{Error, Result};

/// A set `S ⊆ {0,1}^{n-1}` of control strings for a bit flip on qubit `i`.
///
/// Membership is tested on `x̂_i`, the string `x` with bit `i` removed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ControlSet {
    /// `S = {0,1}^{n-1}`: the uncontrolled flip `X^i`.
    All,
    Empty,
    /// `S = {j}`.
    Singleton {
        j: BitString,
    },
    Explicit {
        #[serde(flatten)]
        members: BitTable,
    },
    /// `ŷ ∈ S` iff `hash(seed, ŷ) < density`.
    Seeded {
        density: f64,
        seed: u64,
    },
    /// `ŷ ∈ S` iff block `(pair, side)` of `x` lies in `members`. The block
    /// must not contain the target qubit.
    Block {
        pair: u32,
        side: u32,
        block_len: u32,
        #[serde(flatten)]
        members: BitTable,
    },
}

impl ControlSet {
    pub fn singleton(j: BitString) -> Self {
        ControlSet::Singleton { j }
    }

    pub fn seeded(density: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::InvalidDensity(density));
        }
        Ok(ControlSet::Seeded { density, seed })
    }

    /// Bit offset of a [`ControlSet::Block`] predicate inside `x`.
    pub fn block_offset(pair: u32, side: u32, block_len: u32) -> u32 {
        (2 * (pair - 1) + side) * block_len
    }

    /// Checks the description against an `n`-qubit flip of qubit `target`.
    pub fn validate(&self, n: u32, target: u32) -> Result<()> {
        match self {
            ControlSet::All | ControlSet::Empty => Ok(()),
            ControlSet::Singleton { j } => {
                if j.width() != n - 1 {
                    return Err(Error::WidthMismatch {
                        expected: n - 1,
                        got: j.width(),
                    });
                }
                Ok(())
            }
            ControlSet::Explicit { members } => {
                if n - 1 > MAX_TABLE_WIDTH || members.width() != n - 1 {
                    return Err(Error::WidthMismatch {
                        expected: n - 1,
                        got: members.width(),
                    });
                }
                Ok(())
            }
            ControlSet::Seeded { density, .. } => {
                if !(0.0..=1.0).contains(density) {
                    return Err(Error::InvalidDensity(*density));
                }
                Ok(())
            }
            ControlSet::Block {
                pair,
                side,
                block_len,
                members,
            } => {
                if *pair == 0 || *side > 1 || *block_len == 0 {
                    return Err(Error::UnsupportedControls(format!(
                        "block ({pair}, {side}) of length {block_len}"
                    )));
                }
                if members.width() != *block_len {
                    return Err(Error::WidthMismatch {
                        expected: *block_len,
                        got: members.width(),
                    });
                }
                let offset = Self::block_offset(*pair, *side, *block_len);
                if offset + block_len > n {
                    return Err(Error::UnsupportedControls(format!(
                        "block ({pair}, {side}) extends past qubit {n}"
                    )));
                }
                let t = target - 1;
                if (offset..offset + block_len).contains(&t) {
                    return Err(Error::UnsupportedControls(
                        "predicate block contains the target qubit".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Whether the flip of qubit `target` (1-based) fires on basis state `x`.
    #[inline]
    pub fn fires_on(&self, x: u64, target: u32) -> bool {
        match self {
            ControlSet::All => true,
            ControlSet::Empty => false,
            ControlSet::Block {
                pair,
                side,
                block_len,
                members,
            } => {
                let offset = Self::block_offset(*pair, *side, *block_len);
                members.get((x >> offset) & low_mask(*block_len))
            }
            _ => self.contains_hat(remove_bit(x, target - 1)),
        }
    }

    /// Membership of an `(n-1)`-bit control string. Not meaningful for
    /// [`ControlSet::Block`], whose predicate lives on `x` itself.
    #[inline]
    pub fn contains_hat(&self, y: u64) -> bool {
        match self {
            ControlSet::All => true,
            ControlSet::Empty => false,
            ControlSet::Singleton { j } => j.value() == y,
            ControlSet::Explicit { members } => members.get(y),
            ControlSet::Seeded { density, seed } => rng::bernoulli(*seed, y, *density),
            ControlSet::Block { .. } => {
                panic!("block predicates are evaluated on x, not on the control string")
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ControlSet::All => "all",
            ControlSet::Empty => "empty",
            ControlSet::Singleton { .. } => "singleton",
            ControlSet::Explicit { .. } => "explicit",
            ControlSet::Seeded { .. } => "seeded",
            ControlSet::Block { .. } => "block",
        }
    }
}

/// A set `S ⊆ {0,1}^n` of basis states receiving a phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhaseSet {
    All,
    Empty,
    Explicit {
        #[serde(flatten)]
        members: BitTable,
    },
    Seeded {
        density: f64,
        seed: u64,
    },
}

impl PhaseSet {
    #[inline]
    pub fn contains(&self, x: u64) -> bool {
        match self {
            PhaseSet::All => true,
            PhaseSet::Empty => false,
            PhaseSet::Explicit { members } => members.get(x),
            PhaseSet::Seeded { density, seed } => rng::bernoulli(*seed, x, *density),
        }
    }

    pub fn validate(&self, n: u32) -> Result<()> {
        match self {
            PhaseSet::Explicit { members } if members.width() != n => Err(Error::WidthMismatch {
                expected: n,
                got: members.width(),
            }),
            PhaseSet::Seeded { density, .. } if !(0.0..=1.0).contains(density) => {
                Err(Error::InvalidDensity(*density))
            }
            _ => Ok(()),
        }
    }
}
