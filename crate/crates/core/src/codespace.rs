//! The block-product code `W = Span{f_z : z ∈ {0,1}^B}`.
//!
//! The `n` qubits are split into `2B` blocks of length `n' = n / 2B`, laid out
//! as `x_{1,0}, x_{1,1}, x_{2,0}, x_{2,1}, ..., x_{B,0}, x_{B,1}` starting from
//! bit 0 of `x`. The basis function `f_z` multiplies `f` evaluated on block
//! `x_{k,z_k}` for every pair `k`, so `|f_z(x)| = 2^{-B}` everywhere.
//!
//! Codewords are kept implicitly as coefficient tables [`CodewordCoeffs`] and
//! only materialized into a [`StateVector`] when `n` is under the dense cap.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::{low_mask, BitString};
use crate::boolfn::BoolFn;
use crate::rng::{self, Stage};
use crate::{par, Error, Result};

/// Default largest `n` for which `2^n` amplitudes are materialized.
pub const DEFAULT_DENSE_CAP: u32 = 24;

/// Hard ceiling on the dense cap (a 2^30-entry complex vector is 16 GiB).
pub const MAX_DENSE_CAP: u32 = 30;

pub fn check_dense(n: u32, cap: u32) -> Result<()> {
    if n > cap.min(MAX_DENSE_CAP) {
        return Err(Error::DenseCapExceeded {
            n,
            cap: cap.min(MAX_DENSE_CAP),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeParams {
    n: u32,
    #[serde(rename = "B")]
    b: u32,
    n_prime: u32,
}

/// Where a qubit sits inside the block layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPosition {
    /// Block pair `k ∈ [1, B]`.
    pub pair: u32,
    /// Side `b ∈ {0, 1}` within the pair.
    pub side: u32,
    /// Variable `j ∈ [1, n']` within the block.
    pub var: u32,
}

impl CodeParams {
    pub fn new(n: u32, b: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("n = {n} must be at least 2")));
        }
        if b == 0 {
            return Err(Error::InvalidParams("B must be at least 1".into()));
        }
        if n > 64 {
            return Err(Error::InvalidParams(format!("n = {n} exceeds 64 qubits")));
        }
        if !n.is_multiple_of(2 * b) {
            return Err(Error::Divisibility { n, b });
        }
        Ok(Self {
            n,
            b,
            n_prime: n / (2 * b),
        })
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn b(&self) -> u32 {
        self.b
    }

    #[inline]
    pub fn n_prime(&self) -> u32 {
        self.n_prime
    }

    /// Code dimension `2^B`.
    pub fn dim(&self) -> usize {
        1usize << self.b
    }

    /// `‖f_z‖² = 2^{n-2B}` for a ±1/2-valued `f`.
    pub fn basis_norm_sqr(&self) -> f64 {
        (2.0f64).powi(self.n as i32 - 2 * self.b as i32)
    }

    /// Bit offset of block `(pair, side)`; `pair` is 1-based.
    #[inline]
    pub fn block_offset(&self, pair: u32, side: u32) -> u32 {
        (2 * (pair - 1) + side) * self.n_prime
    }

    #[inline]
    pub(crate) fn block_bits(&self, x: u64, pair: u32, side: u32) -> u64 {
        (x >> self.block_offset(pair, side)) & low_mask(self.n_prime)
    }

    /// Block coordinates of qubit `i ∈ [1, n]`.
    pub fn locate(&self, qubit: u32) -> Result<BlockPosition> {
        if qubit == 0 || qubit > self.n {
            return Err(Error::IndexOutOfRange {
                what: "qubit",
                index: qubit as u64,
                max: self.n as u64,
            });
        }
        let block = (qubit - 1) / self.n_prime;
        Ok(BlockPosition {
            pair: block / 2 + 1,
            side: block % 2,
            var: (qubit - 1) % self.n_prime + 1,
        })
    }

    fn check_function(&self, f: &BoolFn) -> Result<()> {
        if f.width() != self.n_prime {
            return Err(Error::WidthMismatch {
                expected: self.n_prime,
                got: f.width(),
            });
        }
        Ok(())
    }
}

/// `x_{pair, side}`: the restriction of `x` to one block.
pub fn block_project(params: &CodeParams, x: BitString, pair: u32, side: u32) -> Result<BitString> {
    if x.width() != params.n() {
        return Err(Error::WidthMismatch {
            expected: params.n(),
            got: x.width(),
        });
    }
    if pair == 0 || pair > params.b() {
        return Err(Error::IndexOutOfRange {
            what: "block pair",
            index: pair as u64,
            max: params.b() as u64,
        });
    }
    if side > 1 {
        return Err(Error::IndexOutOfRange {
            what: "block side",
            index: side as u64,
            max: 1,
        });
    }
    BitString::new(params.block_bits(x.value(), pair, side), params.n_prime())
}

/// `f_z(x) = f(x_{1,z_1}) · ... · f(x_{B,z_B})`.
pub fn eval_fz(f: &BoolFn, params: &CodeParams, z: BitString, x: BitString) -> Result<f64> {
    params.check_function(f)?;
    if z.width() != params.b() {
        return Err(Error::WidthMismatch {
            expected: params.b(),
            got: z.width(),
        });
    }
    if x.width() != params.n() {
        return Err(Error::WidthMismatch {
            expected: params.n(),
            got: x.width(),
        });
    }
    Ok(fz_value(f, params, z.value(), x.value()))
}

#[inline]
pub(crate) fn fz_value(f: &BoolFn, params: &CodeParams, z: u64, x: u64) -> f64 {
    let mut negative = false;
    for k in 0..params.b() {
        let side = (z >> k & 1) as u32;
        negative ^= !f.is_positive(params.block_bits(x, k + 1, side));
    }
    let magnitude = (0.5f64).powi(params.b() as i32);
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// Dense amplitude vector over `{0,1}^n`, identified with `Σ_x φ(x)|x⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: u32,
    amp: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n: u32, amp: Vec<Complex64>) -> Result<Self> {
        check_dense(n, MAX_DENSE_CAP)?;
        if amp.len() != 1usize << n {
            return Err(Error::DimensionMismatch {
                left: 1usize << n,
                right: amp.len(),
            });
        }
        Ok(Self { n, amp })
    }

    pub fn zeros(n: u32) -> Result<Self> {
        check_dense(n, MAX_DENSE_CAP)?;
        Ok(Self {
            n,
            amp: vec![Complex64::new(0.0, 0.0); 1usize << n],
        })
    }

    /// `|x⟩`.
    pub fn basis(n: u32, x: u64) -> Result<Self> {
        let mut v = Self::zeros(n)?;
        if x >= v.len() as u64 {
            return Err(Error::ValueOutOfRange { value: x, width: n });
        }
        v.amp[x as usize] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// `2^{-n/2} Σ_x |x⟩`.
    pub fn uniform(n: u32) -> Result<Self> {
        check_dense(n, MAX_DENSE_CAP)?;
        let a = (0.5f64).powf(n as f64 / 2.0);
        Ok(Self {
            n,
            amp: vec![Complex64::new(a, 0.0); 1usize << n],
        })
    }

    pub fn from_fn<F>(n: u32, f: F) -> Result<Self>
    where
        F: Fn(u64) -> Complex64 + Sync + Send,
    {
        let mut v = Self::zeros(n)?;
        par::fill_indexed(&mut v.amp, |x| f(x as u64));
        Ok(v)
    }

    /// Unit vector with i.i.d. complex Gaussian amplitudes.
    pub fn random_unit<R: rand::Rng + ?Sized>(n: u32, rng: &mut R) -> Result<Self> {
        check_dense(n, MAX_DENSE_CAP)?;
        let amp: Vec<Complex64> = (0..1usize << n).map(|_| complex_normal(rng)).collect();
        Ok(Self { n, amp }.normalized())
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.amp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amp.is_empty()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amp
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amp
    }

    pub(crate) fn check_same(&self, other: &StateVector) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// `self* other`, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(inner_unchecked(&self.amp, &other.amp))
    }

    pub fn norm_sqr(&self) -> f64 {
        let a = &self.amp;
        par::chunked_sum(a.len(), 0.0, |r| a[r].iter().map(|c| c.norm_sqr()).sum())
    }

    pub fn normalized(mut self) -> Self {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            self.amp.iter_mut().for_each(|c| *c *= inv);
        }
        self
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            amp: self.amp.iter().map(|&c| c * s).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &StateVector, b: Complex64) -> Result<Self> {
        self.check_same(other)?;
        let amp = self
            .amp
            .iter()
            .zip(&other.amp)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Ok(Self { n: self.n, amp })
    }

    /// Complex influence `I_i(φ) = E_x |φ(x) - φ(x ⊕ e_i)|²` of qubit `i ∈ [1, n]`.
    pub fn influence(&self, i: u32) -> Result<f64> {
        if i == 0 || i > self.n {
            return Err(Error::IndexOutOfRange {
                what: "qubit",
                index: i as u64,
                max: self.n as u64,
            });
        }
        let pos = i - 1;
        let half = self.len() / 2;
        let a = &self.amp;
        // each unordered pair appears twice in the expectation
        let pairs = par::chunked_sum(half, 0.0, |r| {
            r.map(|y| {
                let x0 = crate::bits::insert_bit(y as u64, pos, false) as usize;
                (a[x0] - a[x0 | 1 << pos]).norm_sqr()
            })
            .sum()
        });
        Ok(2.0 * pairs / self.len() as f64)
    }

    /// `I(φ) = max_i I_i(φ)` and the 1-based qubit attaining it.
    pub fn max_influence(&self) -> (f64, u32) {
        (1..=self.n).fold((0.0, 1), |best, i| {
            let v = self.influence(i).expect("qubit in range");
            if v > best.0 {
                (v, i)
            } else {
                best
            }
        })
    }
}

pub(crate) fn inner_unchecked(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    par::chunked_sum(a.len(), Complex64::new(0.0, 0.0), |r| {
        a[r.clone()]
            .iter()
            .zip(&b[r])
            .map(|(x, y)| x.conj() * y)
            .sum()
    })
}

/// Complex standard normal: real and imaginary parts each `N(0, 1/2)`.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Coefficients `α_z` of a codeword `φ = Σ_z α_z f_z ∈ W`.
///
/// JSON form: `{"n": .., "B": .., "alpha": [[re, im], ...]}` in `z` order.
#[derive(Clone, Debug, PartialEq)]
pub struct CodewordCoeffs {
    params: CodeParams,
    alpha: Vec<Complex64>,
}

impl CodewordCoeffs {
    pub fn new(params: CodeParams, alpha: Vec<Complex64>) -> Result<Self> {
        if alpha.len() != params.dim() {
            return Err(Error::DimensionMismatch {
                left: params.dim(),
                right: alpha.len(),
            });
        }
        Ok(Self { params, alpha })
    }

    /// Indicator of a single `z`.
    pub fn basis(params: CodeParams, z: u64) -> Result<Self> {
        if z >= params.dim() as u64 {
            return Err(Error::ValueOutOfRange {
                value: z,
                width: params.b(),
            });
        }
        let mut alpha = vec![Complex64::new(0.0, 0.0); params.dim()];
        alpha[z as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { params, alpha })
    }

    pub fn from_fn(params: CodeParams, f: impl Fn(u64) -> Complex64) -> Self {
        let alpha = (0..params.dim() as u64).map(f).collect();
        Self { params, alpha }
    }

    #[inline]
    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    #[inline]
    pub fn alpha(&self) -> &[Complex64] {
        &self.alpha
    }

    /// `Σ_z |α_z|²`.
    pub fn coeff_norm_sqr(&self) -> f64 {
        self.alpha.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `‖φ‖² = 2^{n-2B} Σ_z |α_z|²`; exact when `f` is balanced.
    pub fn norm_sqr(&self) -> f64 {
        self.params.basis_norm_sqr() * self.coeff_norm_sqr()
    }

    /// Rescales so that `‖φ‖ = 1` under the closed-form norm.
    pub fn normalized(mut self) -> Self {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            self.alpha.iter_mut().for_each(|a| *a *= inv);
        }
        self
    }

    /// `self* other` via orthogonality of the basis (balanced `f`).
    pub fn inner(&self, other: &CodewordCoeffs) -> Result<Complex64> {
        if self.params != other.params {
            return Err(Error::Config("codewords from different codes".into()));
        }
        let s: Complex64 = self
            .alpha
            .iter()
            .zip(&other.alpha)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.params.basis_norm_sqr())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &CodewordCoeffs, b: Complex64) -> Result<Self> {
        if self.params != other.params {
            return Err(Error::Config("codewords from different codes".into()));
        }
        let alpha = self
            .alpha
            .iter()
            .zip(&other.alpha)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Ok(Self {
            params: self.params,
            alpha,
        })
    }

    /// `φ(x)` without materializing the vector.
    pub fn eval(&self, f: &BoolFn, x: BitString) -> Result<Complex64> {
        self.params.check_function(f)?;
        if x.width() != self.params.n() {
            return Err(Error::WidthMismatch {
                expected: self.params.n(),
                got: x.width(),
            });
        }
        let mut scratch = self.alpha.clone();
        Ok(self.fold_at(f, x.value(), &mut scratch))
    }

    /// Contracts `α` against the per-pair block values at `x`, one pair at a
    /// time from the highest `z` bit down. `scratch` must hold `2^B` entries.
    fn fold_at(&self, f: &BoolFn, x: u64, scratch: &mut [Complex64]) -> Complex64 {
        scratch.copy_from_slice(&self.alpha);
        let mut len = scratch.len();
        for k in (0..self.params.b()).rev() {
            let v0 = f.value(self.params.block_bits(x, k + 1, 0));
            let v1 = f.value(self.params.block_bits(x, k + 1, 1));
            len /= 2;
            for j in 0..len {
                scratch[j] = scratch[j] * v0 + scratch[j + len] * v1;
            }
        }
        scratch[0]
    }
}

#[derive(Serialize, Deserialize)]
struct CodewordRepr {
    n: u32,
    #[serde(rename = "B")]
    b: u32,
    alpha: Vec<[f64; 2]>,
}

impl Serialize for CodewordCoeffs {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CodewordRepr {
            n: self.params.n(),
            b: self.params.b(),
            alpha: self.alpha.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CodewordCoeffs {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = CodewordRepr::deserialize(deserializer)?;
        let params = CodeParams::new(repr.n, repr.b).map_err(serde::de::Error::custom)?;
        let alpha = repr
            .alpha
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        CodewordCoeffs::new(params, alpha).map_err(serde::de::Error::custom)
    }
}

/// Unit-norm codeword with i.i.d. complex normal coefficients.
pub fn sample_codeword(params: &CodeParams, seed: u64) -> CodewordCoeffs {
    let mut rng = rng::stream(seed, Stage::Codewords);
    let alpha = (0..params.dim())
        .map(|_| complex_normal(&mut rng))
        .collect();
    CodewordCoeffs {
        params: *params,
        alpha,
    }
    .normalized()
}

pub fn materialize_basis(
    f: &BoolFn,
    params: &CodeParams,
    z: BitString,
    cap: u32,
) -> Result<StateVector> {
    params.check_function(f)?;
    if z.width() != params.b() {
        return Err(Error::WidthMismatch {
            expected: params.b(),
            got: z.width(),
        });
    }
    check_dense(params.n(), cap)?;
    let z = z.value();
    StateVector::from_fn(params.n(), |x| {
        Complex64::new(fz_value(f, params, z, x), 0.0)
    })
}

pub fn materialize_codeword(f: &BoolFn, coeffs: &CodewordCoeffs, cap: u32) -> Result<StateVector> {
    let params = coeffs.params();
    params.check_function(f)?;
    check_dense(params.n(), cap)?;
    let mut v = StateVector::zeros(params.n())?;
    par::fill_chunks(&mut v.amp, |base, chunk| {
        let mut scratch = coeffs.alpha.clone();
        for (k, slot) in chunk.iter_mut().enumerate() {
            *slot = coeffs.fold_at(f, (base + k) as u64, &mut scratch);
        }
    });
    Ok(v)
}

/// Square complex matrix of pairwise inner products `f_z* f_{z'}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gram {
    pub dim: usize,
    pub entries: Vec<Complex64>,
}

impl Gram {
    pub fn get(&self, z: usize, z2: usize) -> Complex64 {
        self.entries[z * self.dim + z2]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|z| self.get(z, z).re).collect()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst = 0.0f64;
        for z in 0..self.dim {
            for z2 in 0..self.dim {
                if z != z2 {
                    worst = worst.max(self.get(z, z2).norm());
                }
            }
        }
        worst
    }

    /// Largest entrywise deviation from `scale · I`.
    pub fn deviation_from_scaled_identity(&self, scale: f64) -> f64 {
        let mut worst = 0.0f64;
        for z in 0..self.dim {
            for z2 in 0..self.dim {
                let target = if z == z2 { scale } else { 0.0 };
                worst = worst.max((self.get(z, z2) - target).norm());
            }
        }
        worst
    }
}

/// Gram matrix from materialized basis vectors.
pub fn gram(f: &BoolFn, params: &CodeParams, cap: u32) -> Result<Gram> {
    params.check_function(f)?;
    check_dense(params.n(), cap)?;
    let basis: Vec<StateVector> = (0..params.dim() as u64)
        .map(|z| materialize_basis(f, params, BitString::new(z, params.b())?, cap))
        .collect::<Result<_>>()?;
    let dim = params.dim();
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for z in 0..dim {
        for z2 in z..dim {
            let v = basis[z].inner(&basis[z2])?;
            entries[z * dim + z2] = v;
            entries[z2 * dim + z] = v.conj();
        }
    }
    Ok(Gram { dim, entries })
}

/// Gram matrix from the block factorization; no dense cap.
///
/// `f_z* f_{z'}` is a product over pairs: `2^{n'}·Σf²` when `z_k = z'_k`
/// and `(Σf)²` otherwise, with `Σf² = 2^{n'}/4`.
pub fn gram_structured(f: &BoolFn, params: &CodeParams) -> Result<Gram> {
    params.check_function(f)?;
    let block = f.len() as f64;
    let same = block * block / 4.0;
    let sum = f.signed_sum();
    let differ = sum * sum;
    let dim = params.dim();
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for z in 0..dim {
        for z2 in 0..dim {
            let agree = params.b() - (z ^ z2).count_ones();
            let disagree = (z ^ z2).count_ones();
            let v = same.powi(agree as i32) * differ.powi(disagree as i32);
            entries[z * dim + z2] = Complex64::new(v, 0.0);
        }
    }
    Ok(Gram { dim, entries })
}
