//! Brute-force reference implementations for tests.
//!
//! Nothing here reuses the main path's bit tricks or reductions: basis
//! states are unpacked into explicit `Vec<bool>` strings, operators become
//! dense matrices, and sums run left to right on one thread. Small sizes
//! only.

use num_complex::Complex64;

use crate::boolfn::{BoolFn, InfluenceProfile};
use crate::noise::{ControlSet, ErrorOperator};
use crate::rng;
use crate::{Error, Result};

/// Largest `n` accepted by [`operator_matrix`].
pub const MAX_MATRIX_QUBITS: u32 = 10;
/// Largest `n` accepted by [`exhaustive_bitflip_scan`].
pub const MAX_SCAN_QUBITS: u32 = 5;
/// Largest width accepted by the influence oracles.
pub const MAX_INFLUENCE_WIDTH: u32 = 12;

/// `x_1 … x_n`, `bits[0] = x_1`.
fn unpack(x: usize, n: u32) -> Vec<bool> {
    let mut bits = Vec::with_capacity(n as usize);
    let mut rest = x;
    for _ in 0..n {
        bits.push(rest % 2 == 1);
        rest /= 2;
    }
    bits
}

fn pack(bits: &[bool]) -> usize {
    bits.iter().rev().fold(0, |acc, &b| acc * 2 + b as usize)
}

/// `Σ_x a(x)* b(x)`. Panics on a length mismatch.
pub fn naive_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    let mut acc = Complex64::new(0.0, 0.0);
    for x in 0..a.len() {
        acc += Complex64::new(a[x].re, -a[x].im) * b[x];
    }
    acc
}

/// Explicit `2^n × 2^n` matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    pub n: u32,
    pub matrix: Vec<Vec<Complex64>>,
}

impl DenseOperator {
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.matrix
            .iter()
            .map(|row| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, a) in row.iter().zip(v) {
                    acc += m * a;
                }
                acc
            })
            .collect()
    }

    /// Largest entry of `|M† M - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.matrix.len();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.matrix[k][i].conj() * self.matrix[k][j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}

/// Whether the flip of qubit `target` fires on `bits`.
fn controls_fire(controls: &ControlSet, bits: &[bool], target: u32) -> bool {
    let mut hat = bits.to_vec();
    hat.remove(target as usize - 1);
    match controls {
        ControlSet::All => true,
        ControlSet::Empty => false,
        ControlSet::Singleton { j } => {
            (0..hat.len()).all(|p| j.bit(p as u32 + 1).expect("width checked") == hat[p])
        }
        ControlSet::Explicit { members } => members.get(pack(&hat) as u64),
        ControlSet::Seeded { density, seed } => rng::bernoulli(*seed, pack(&hat) as u64, *density),
        ControlSet::Block {
            pair,
            side,
            block_len,
            members,
        } => {
            let start = ((2 * (pair - 1) + side) * block_len) as usize;
            members.get(pack(&bits[start..start + *block_len as usize]) as u64)
        }
    }
}

/// Dense matrix of an error operator on `n ≤ 10` qubits.
#[allow(clippy::needless_range_loop)]
pub fn operator_matrix(e: &ErrorOperator, n: u32) -> Result<DenseOperator> {
    if n == 0 || n > MAX_MATRIX_QUBITS {
        return Err(Error::WidthOutOfRange {
            width: n,
            min: 1,
            max: MAX_MATRIX_QUBITS,
        });
    }
    e.validate(n)?;
    let d = 1usize << n;
    let mut matrix = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for col in 0..d {
        let bits = unpack(col, n);
        match e {
            ErrorOperator::Bitflip(flip) => {
                let mut out = bits.clone();
                if controls_fire(flip.controls(), &bits, flip.target()) {
                    let t = flip.target() as usize - 1;
                    out[t] = !out[t];
                }
                matrix[pack(&out)][col] = Complex64::new(1.0, 0.0);
            }
            ErrorOperator::Phase(p) => {
                let angle = if p.set().contains(col as u64) {
                    p.theta()
                } else {
                    0.0
                };
                matrix[col][col] = Complex64::new(angle.cos(), angle.sin());
            }
            ErrorOperator::Partitioned(p) => {
                let angle = p.angles()[p.assignment()[col] as usize];
                matrix[col][col] = Complex64::new(angle.cos(), angle.sin());
            }
        }
    }
    Ok(DenseOperator { n, matrix })
}

/// Result of scanning every `E_{i,S}` on a small state.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    /// `max |φ* E_{i,S} φ - φ* φ|`.
    pub max_drop: f64,
    /// 1-based qubit of the maximizer.
    pub qubit: u32,
    /// Maximizing `S` as a bit mask over control strings.
    pub mask: u64,
    /// Whether the maximizer is `S = All`.
    pub is_all: bool,
}

/// Exact maximum of `|φ* E_{i,S} φ - φ* φ|` over all `i` and all
/// `2^{2^{n-1}}` sets `S`. Among equal maxima `S = All` is preferred.
pub fn exhaustive_bitflip_scan(phi: &[Complex64], n: u32) -> Result<ScanResult> {
    if !(2..=MAX_SCAN_QUBITS).contains(&n) {
        return Err(Error::WidthOutOfRange {
            width: n,
            min: 2,
            max: MAX_SCAN_QUBITS,
        });
    }
    if phi.len() != 1 << n {
        return Err(Error::DimensionMismatch {
            left: 1 << n,
            right: phi.len(),
        });
    }
    let norm = naive_inner(phi, phi);
    let controls = 1usize << (n - 1);
    let all = (1u64 << controls) - 1;
    let mut best = ScanResult {
        max_drop: -1.0,
        qubit: 0,
        mask: 0,
        is_all: false,
    };
    for i in 1..=n {
        let partner: Vec<usize> = (0..phi.len())
            .map(|x| {
                let mut bits = unpack(x, n);
                bits[i as usize - 1] ^= true;
                pack(&bits)
            })
            .collect();
        let hat: Vec<usize> = (0..phi.len())
            .map(|x| {
                let mut bits = unpack(x, n);
                bits.remove(i as usize - 1);
                pack(&bits)
            })
            .collect();
        for mask in 0..=all {
            let mut form = Complex64::new(0.0, 0.0);
            for x in 0..phi.len() {
                let image = if mask >> hat[x] & 1 == 1 {
                    partner[x]
                } else {
                    x
                };
                // (E φ)(image) = φ(x)
                form += phi[image].conj() * phi[x];
            }
            let drop = (form - norm).norm();
            let tie = (drop - best.max_drop).abs() <= 1e-12 * drop.max(1.0);
            if (drop > best.max_drop && !tie) || (tie && mask == all && !best.is_all) {
                best = ScanResult {
                    max_drop: drop,
                    qubit: i,
                    mask,
                    is_all: mask == all,
                };
            }
        }
    }
    Ok(best)
}

/// Influence profile of a Boolean function by a double loop over `(x, j)`.
pub fn naive_influence(f: &BoolFn) -> Result<InfluenceProfile> {
    let w = f.width();
    if w > MAX_INFLUENCE_WIDTH {
        return Err(Error::WidthOutOfRange {
            width: w,
            min: 1,
            max: MAX_INFLUENCE_WIDTH,
        });
    }
    let mut pivotal = vec![0u64; w as usize];
    for x in 0..1usize << w {
        let bits = unpack(x, w);
        for j in 0..w as usize {
            let mut other = bits.clone();
            other[j] = !other[j];
            if f.value(pack(&bits) as u64) != f.value(pack(&other) as u64) {
                pivotal[j] += 1;
            }
        }
    }
    Ok(InfluenceProfile::from_pivotal(w, pivotal))
}

/// `I_i(φ) = 2^{-n} Σ_x |φ(x) - φ(x ⊕ e_i)|²` for every qubit.
pub fn naive_vector_influence(phi: &[Complex64], n: u32) -> Result<Vec<f64>> {
    if n > MAX_INFLUENCE_WIDTH {
        return Err(Error::WidthOutOfRange {
            width: n,
            min: 1,
            max: MAX_INFLUENCE_WIDTH,
        });
    }
    if phi.len() != 1 << n {
        return Err(Error::DimensionMismatch {
            left: 1 << n,
            right: phi.len(),
        });
    }
    Ok((0..n as usize)
        .map(|i| {
            let mut acc = 0.0;
            for x in 0..phi.len() {
                let mut bits = unpack(x, n);
                bits[i] = !bits[i];
                acc += (phi[x] - phi[pack(&bits)]).norm_sqr();
            }
            acc / phi.len() as f64
        })
        .collect())
}
