//! ±1/2-valued Boolean functions stored as sign bits.
//!
//! A [`BoolFn`] on `{0,1}^w` keeps one bit per input: set means `+1/2`,
//! clear means `-1/2`. Influence is computed exactly from the table with
//! word-level XOR and popcount.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::{BitString, BitTable, MAX_TABLE_WIDTH};
use crate::{Error, Result};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BoolFn {
    signs: BitTable,
}

impl BoolFn {
    pub fn from_table(signs: BitTable) -> Result<Self> {
        if signs.width() == 0 {
            return Err(Error::WidthOutOfRange {
                width: 0,
                min: 1,
                max: MAX_TABLE_WIDTH,
            });
        }
        Ok(Self { signs })
    }

    /// `positive(x)` decides whether `f(x) = +1/2`.
    pub fn from_fn<F>(width: u32, positive: F) -> Result<Self>
    where
        F: Fn(u64) -> bool + Sync + Send,
    {
        check_width(width)?;
        Self::from_table(BitTable::from_fn(width, positive)?)
    }

    pub fn constant(width: u32, positive: bool) -> Result<Self> {
        Self::from_fn(width, move |_| positive)
    }

    /// `f(x) = +1/2` iff `x_var = 1`.
    pub fn dictator(width: u32, var: u32) -> Result<Self> {
        if var == 0 || var > width {
            return Err(Error::IndexOutOfRange {
                what: "variable",
                index: var as u64,
                max: width as u64,
            });
        }
        Self::from_fn(width, move |x| x >> (var - 1) & 1 == 1)
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.signs.width()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn signs(&self) -> &BitTable {
        &self.signs
    }

    #[inline]
    pub fn is_positive(&self, x: u64) -> bool {
        self.signs.get(x)
    }

    /// `f(x)` for a raw index `x < 2^width`.
    #[inline]
    pub fn value(&self, x: u64) -> f64 {
        if self.signs.get(x) {
            0.5
        } else {
            -0.5
        }
    }

    pub fn eval(&self, x: BitString) -> Result<f64> {
        if x.width() != self.width() {
            return Err(Error::WidthMismatch {
                expected: self.width(),
                got: x.width(),
            });
        }
        Ok(self.value(x.value()))
    }

    pub fn positives(&self) -> u64 {
        self.signs.count_ones()
    }

    /// `Σ_x f(x)`.
    pub fn signed_sum(&self) -> f64 {
        let p = self.positives() as f64;
        let total = self.len() as f64;
        (2.0 * p - total) / 2.0
    }

    pub fn is_balanced(&self) -> bool {
        self.positives() * 2 == self.len() as u64
    }

    pub fn ensure_balanced(&self) -> Result<()> {
        if self.is_balanced() {
            Ok(())
        } else {
            Err(Error::Unbalanced {
                positives: self.positives(),
                total: self.len() as u64,
            })
        }
    }

    pub fn balance(&self) -> BoolFn {
        self.balance_with_flips().0
    }

    /// Flips the `d` lowest-index inputs that carry the majority sign, where
    /// `d` is the excess of that sign over `2^(w-1)`. Returns the balanced
    /// function and `d`.
    pub fn balance_with_flips(&self) -> (BoolFn, u64) {
        let half = (self.len() / 2) as u64;
        let positives = self.positives();
        let (majority_positive, excess) = if positives >= half {
            (true, positives - half)
        } else {
            (false, half - positives)
        };
        let mut signs = self.signs.clone();
        let majority = if majority_positive {
            self.signs.clone()
        } else {
            self.signs.complement()
        };
        for x in majority.ones().take(excess as usize) {
            signs.set(x, !majority_positive);
        }
        (BoolFn { signs }, excess)
    }

    /// Number of inputs `x` with `f(x) ≠ f(x ⊕ e_j)`, for 0-based `j`.
    pub fn pivotal_count(&self, j: u32) -> u64 {
        assert!(j < self.width(), "variable {j} out of range");
        let words = self.signs.words();
        if j < 6 {
            let shift = 1u32 << j;
            let keep = STAY_MASKS[j as usize];
            crate::par::chunked_sum(words.len(), 0u64, |range| {
                words[range]
                    .iter()
                    .map(|&w| {
                        let partner = ((w >> shift) & keep) | ((w << shift) & !keep);
                        (w ^ partner).count_ones() as u64
                    })
                    .sum()
            })
        } else {
            let stride = 1usize << (j - 6);
            crate::par::chunked_sum(words.len(), 0u64, |range| {
                range
                    .map(|a| (words[a] ^ words[a ^ stride]).count_ones() as u64)
                    .sum()
            })
        }
    }

    pub fn influence_profile(&self) -> InfluenceProfile {
        let pivotal: Vec<u64> = (0..self.width()).map(|j| self.pivotal_count(j)).collect();
        InfluenceProfile::from_pivotal(self.width(), pivotal)
    }

    /// `Σ_a f(a) f(a ⊕ e_j)` for 0-based `j`, computed by direct enumeration.
    pub fn autocorrelation(&self, j: u32) -> f64 {
        assert!(j < self.width(), "variable {j} out of range");
        let flip = 1u64 << j;
        let len = self.len();
        crate::par::chunked_sum(len, 0.0, |range| {
            range
                .map(|a| self.value(a as u64) * self.value(a as u64 ^ flip))
                .sum()
        })
    }
}

fn check_width(width: u32) -> Result<()> {
    if width == 0 || width > MAX_TABLE_WIDTH {
        return Err(Error::WidthOutOfRange {
            width,
            min: 1,
            max: MAX_TABLE_WIDTH,
        });
    }
    Ok(())
}

/// Bit positions `x` (within a 64-bit word) whose bit `j` is clear.
const STAY_MASKS: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0F0F_0F0F_0F0F_0F0F,
    0x00FF_00FF_00FF_00FF,
    0x0000_FFFF_0000_FFFF,
    0x0000_0000_FFFF_FFFF,
];

/// Exact influences `I_j = Pr_x[f(x) ≠ f(x ⊕ e_j)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceProfile {
    pub width: u32,
    /// `#{x : f(x) ≠ f(x ⊕ e_j)}` per variable.
    pub pivotal: Vec<u64>,
    pub per_variable: Vec<f64>,
    pub max_influence: f64,
    /// 1-based variable attaining the maximum (lowest index on ties).
    pub argmax: u32,
}

impl InfluenceProfile {
    pub fn from_pivotal(width: u32, pivotal: Vec<u64>) -> Self {
        let denom = (1u64 << width) as f64;
        let per_variable: Vec<f64> = pivotal.iter().map(|&c| c as f64 / denom).collect();
        let (argmax, max_influence) = per_variable.iter().enumerate().fold(
            (0, 0.0),
            |best, (j, &v)| if v > best.1 { (j, v) } else { best },
        );
        Self {
            width,
            pivotal,
            per_variable,
            max_influence,
            argmax: argmax as u32 + 1,
        }
    }
}

/// Tribe width used when none is given: the `w` for which
/// `w · 2^w · ln 2 ≈ n'`, i.e. `round(log2(n' / (ln 2 · log2 n')))`,
/// clipped to `[1, n']`.
pub fn default_tribe_width(n_prime: u32) -> u32 {
    if n_prime <= 1 {
        return 1;
    }
    let n = n_prime as f64;
    let w = (n / (std::f64::consts::LN_2 * n.log2())).log2().round();
    (w.max(1.0) as u32).min(n_prime)
}

/// OR of ANDs over `floor(n'/w)` disjoint tribes of `w` consecutive
/// variables; leftover variables are irrelevant. `+1/2` where the OR holds.
pub fn tribes(n_prime: u32, w: Option<u32>) -> Result<BoolFn> {
    check_width(n_prime)?;
    let w = w.unwrap_or_else(|| default_tribe_width(n_prime));
    if w == 0 || w > n_prime {
        return Err(Error::WidthOutOfRange {
            width: w,
            min: 1,
            max: n_prime,
        });
    }
    let tribe = (1u64 << w) - 1;
    let masks: Vec<u64> = (0..n_prime / w).map(|t| tribe << (t * w)).collect();
    BoolFn::from_fn(n_prime, move |x| masks.iter().any(|&m| m & !x == 0))
}

#[derive(Serialize, Deserialize)]
struct BoolFnRepr {
    width: u32,
    signs: String,
}

impl Serialize for BoolFn {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        BoolFnRepr {
            width: self.width(),
            signs: self.signs.to_base64(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BoolFn {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = BoolFnRepr::deserialize(deserializer)?;
        let table =
            BitTable::from_base64(repr.width, &repr.signs).map_err(serde::de::Error::custom)?;
        BoolFn::from_table(table).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn tribes_4_2_has_seven_positives() {
        let f = tribes(4, Some(2)).unwrap();
        assert_eq!(f.positives(), 7);
        assert_eq!(f.eval(bs("1100")).unwrap(), 0.5);
        assert_eq!(f.eval(bs("0011")).unwrap(), 0.5);
        assert_eq!(f.eval(bs("0000")).unwrap(), -0.5);
        assert_eq!(f.eval(bs("1010")).unwrap(), -0.5);
        assert!(f.eval(bs("110")).is_err());
    }

    #[test]
    fn tribes_1_1_is_balanced_dictator() {
        let f = tribes(1, Some(1)).unwrap();
        assert!(f.is_balanced());
        assert_eq!(f.eval(bs("1")).unwrap(), 0.5);
        assert_eq!(f.eval(bs("0")).unwrap(), -0.5);
        assert_eq!(f.influence_profile().per_variable, vec![1.0]);
    }

    #[test]
    fn tribes_leftover_variable_is_irrelevant() {
        let f5 = tribes(5, Some(2)).unwrap();
        let f4 = tribes(4, Some(2)).unwrap();
        for x in 0..32u64 {
            assert_eq!(f5.value(x), f4.value(x & 0xF));
        }
        let prof = f5.influence_profile();
        assert_eq!(prof.per_variable[4], 0.0);
    }

    #[test]
    fn tribes_argument_errors() {
        assert!(tribes(0, None).is_err());
        assert!(tribes(4, Some(0)).is_err());
        assert!(tribes(4, Some(5)).is_err());
        assert!(tribes(27, None).is_err());
    }

    #[test]
    fn default_widths() {
        assert_eq!(default_tribe_width(1), 1);
        assert_eq!(default_tribe_width(2), 2);
        assert_eq!(default_tribe_width(4), 2);
        assert_eq!(default_tribe_width(16), 3);
        // w * 2^w * ln2 = 4 * 16 * 0.69 ≈ 44
        assert_eq!(default_tribe_width(44), 4);
    }

    #[test]
    fn balance_tribes_4_2_flips_zero_string() {
        let f = tribes(4, Some(2)).unwrap();
        let (g, d) = f.balance_with_flips();
        assert_eq!(d, 1);
        assert!(g.is_balanced());
        assert_eq!(g.eval(bs("0000")).unwrap(), 0.5);
        for x in 1..16 {
            assert_eq!(g.value(x), f.value(x));
        }
    }

    #[test]
    fn balance_leaves_balanced_functions_alone() {
        let f = BoolFn::dictator(3, 2).unwrap();
        let (g, d) = f.balance_with_flips();
        assert_eq!(d, 0);
        assert_eq!(g, f);
    }

    #[test]
    fn balance_majority_positive() {
        let f = BoolFn::constant(3, true).unwrap();
        let (g, d) = f.balance_with_flips();
        assert_eq!(d, 4);
        assert!(g.is_balanced());
        // the four lowest inputs now carry -1/2
        assert!((0..4).all(|x| g.value(x) == -0.5));
        assert!((4..8).all(|x| g.value(x) == 0.5));
    }

    #[test]
    fn influence_tribes_4_2() {
        let prof = tribes(4, Some(2)).unwrap().influence_profile();
        assert_eq!(prof.per_variable, vec![0.375; 4]);
        assert_eq!(prof.pivotal, vec![6; 4]);
        assert_eq!(prof.max_influence, 0.375);
        assert_eq!(prof.argmax, 1);
    }

    #[test]
    fn influence_dictator_and_constant() {
        let d = BoolFn::dictator(2, 1).unwrap().influence_profile();
        assert_eq!(d.per_variable, vec![1.0, 0.0]);
        let c = BoolFn::constant(5, true).unwrap().influence_profile();
        assert!(c.per_variable.iter().all(|&v| v == 0.0));
        assert_eq!(c.max_influence, 0.0);
    }

    #[test]
    fn influence_on_wide_tables_uses_word_strides() {
        // parity of x_1 and x_9 on 10 variables
        let f = BoolFn::from_fn(10, |x| (x ^ (x >> 8)) & 1 == 1).unwrap();
        let prof = f.influence_profile();
        for (j, v) in prof.per_variable.iter().enumerate() {
            let expected = if j == 0 || j == 8 { 1.0 } else { 0.0 };
            assert_eq!(*v, expected, "variable {}", j + 1);
        }
    }

    #[test]
    fn autocorrelation_relates_to_influence() {
        let f = tribes(7, Some(2)).unwrap();
        let prof = f.influence_profile();
        for j in 0..7 {
            let expected = (f.len() as f64 - 2.0 * prof.pivotal[j as usize] as f64) / 4.0;
            assert_eq!(f.autocorrelation(j), expected);
        }
    }

    #[test]
    fn json_shape() {
        let f = tribes(4, Some(2)).unwrap();
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["width"], 4);
        assert!(v["signs"].is_string());
        let back: BoolFn = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
    }

    fn arb_fn() -> impl Strategy<Value = BoolFn> {
        (1u32..=9, any::<u64>()).prop_map(|(w, seed)| {
            BoolFn::from_fn(w, move |x| crate::rng::mix(seed, x) & 1 == 1).unwrap()
        })
    }

    proptest! {
        #[test]
        fn influences_are_dyadic(f in arb_fn()) {
            let prof = f.influence_profile();
            let denom = f.len() as f64;
            for (&c, &v) in prof.pivotal.iter().zip(&prof.per_variable) {
                prop_assert_eq!(v * denom, c as f64);
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(c % 2, 0);
            }
            let max = prof.per_variable.iter().cloned().fold(0.0, f64::max);
            prop_assert_eq!(prof.max_influence, max);
        }

        #[test]
        fn balance_is_exact_and_moves_influence_little(f in arb_fn()) {
            let (g, d) = f.balance_with_flips();
            prop_assert!(g.is_balanced());
            prop_assert_eq!(g.signed_sum(), 0.0);
            let diff = (0..f.len() as u64).filter(|&x| f.value(x) != g.value(x)).count() as u64;
            prop_assert_eq!(diff, d);
            let before = f.influence_profile();
            let after = g.influence_profile();
            let slack = 2.0 * d as f64 / f.len() as f64;
            for j in 0..f.width() as usize {
                prop_assert!((after.per_variable[j] - before.per_variable[j]).abs() <= slack + 1e-15);
            }
        }

        #[test]
        fn values_are_plus_minus_half(f in arb_fn(), x in any::<u64>()) {
            let x = x % f.len() as u64;
            let v = f.value(x);
            prop_assert!(v == 0.5 || v == -0.5);
        }
    }
}
