//! Forms `ψ* E φ` for codewords of W without touching `2^n` amplitudes.
//!
//! Every basis vector is a product over the `2B` blocks of either `f` or the
//! constant `1`. When `E` is a sum of block product operators the form
//! factorizes: each block contributes a 2×2 table indexed by (bra uses `f`,
//! ket uses `f`), and one pair's two blocks combine into a 2×2 factor on
//! `(z_k, z'_k)`. The sum over `z, z'` then costs `O(B·2^B)` per term.
//!
//! Supported controls: `All`, `Empty`, `Block` (two terms,
//! `X_j ⊗ P + I ⊗ (I-P)`) and `Singleton` (identity term plus a two-point
//! correction evaluated pointwise).

use num_complex::Complex64;

use crate::bits::{insert_bit, BitString};
use crate::boolfn::BoolFn;
use crate::codespace::CodewordCoeffs;
use crate::noise::{ControlSet, ControlledBitFlip};
use crate::{Error, Result};

type Factor = [[f64; 2]; 2];

/// `⟨u, v⟩` over one block for `u, v ∈ {1, f}`.
fn identity_factor(f: &BoolFn) -> Factor {
    let len = f.len() as f64;
    let sum = f.signed_sum();
    [[len, sum], [sum, len / 4.0]]
}

/// `⟨u, v ∘ X_j⟩`, 0-based `j`.
fn flip_factor(f: &BoolFn, j: u32) -> Factor {
    let len = f.len() as f64;
    let sum = f.signed_sum();
    let tau = (len - 2.0 * f.pivotal_count(j) as f64) / 4.0;
    [[len, sum], [sum, tau]]
}

/// `⟨u, 1_P · v⟩`.
fn projector_factor(f: &BoolFn, members: &crate::bits::BitTable) -> Factor {
    let size = members.count_ones() as f64;
    let sum: f64 = members.ones().map(|a| f.value(a)).sum();
    [[size, sum], [sum, size / 4.0]]
}

fn minus(a: Factor, b: Factor) -> Factor {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

/// `β† (⊗_k F_k) α` where `F_k` comes from the factors of blocks `(k, 0)`
/// and `(k, 1)`.
fn contract(blocks: &[Factor], bra: &[Complex64], ket: &[Complex64]) -> Complex64 {
    let mut v = ket.to_vec();
    for k in 0..blocks.len() / 2 {
        let (m0, m1) = (blocks[2 * k], blocks[2 * k + 1]);
        // z_k = 0 selects f on side 0, z_k = 1 on side 1
        let pair = |r: usize, c: usize| m0[(r == 0) as usize][(c == 0) as usize] * m1[r][c];
        let (f00, f01, f10, f11) = (pair(0, 0), pair(0, 1), pair(1, 0), pair(1, 1));
        let bit = 1usize << k;
        for idx in (0..v.len()).filter(|idx| idx & bit == 0) {
            let (a0, a1) = (v[idx], v[idx | bit]);
            v[idx] = a0 * f00 + a1 * f01;
            v[idx | bit] = a0 * f10 + a1 * f11;
        }
    }
    bra.iter().zip(&v).map(|(b, x)| b.conj() * x).sum()
}

/// `bra* E ket` for codewords `bra = Σ β_z f_z`, `ket = Σ α_z f_z`.
///
/// Exact for any `f`, balanced or not. Controls other than `All`, `Empty`,
/// `Block` and `Singleton` are rejected with [`Error::UnsupportedControls`].
pub fn structured_bitflip_form(
    f: &BoolFn,
    bra: &CodewordCoeffs,
    e: &ControlledBitFlip,
    ket: &CodewordCoeffs,
) -> Result<Complex64> {
    let params = *ket.params();
    if *bra.params() != params {
        return Err(Error::Config("codewords from different codes".into()));
    }
    if f.width() != params.n_prime() {
        return Err(Error::WidthMismatch {
            expected: params.n_prime(),
            got: f.width(),
        });
    }
    e.validate(params.n())?;
    let nblocks = 2 * params.b() as usize;
    let ident = identity_factor(f);
    let at = params.locate(e.target())?;
    let target_block = (2 * (at.pair - 1) + at.side) as usize;
    let (beta, alpha) = (bra.alpha(), ket.alpha());

    let with_flip = |mut blocks: Vec<Factor>| {
        blocks[target_block] = flip_factor(f, at.var - 1);
        blocks
    };
    match e.controls() {
        ControlSet::Empty => Ok(contract(&vec![ident; nblocks], beta, alpha)),
        ControlSet::All => Ok(contract(&with_flip(vec![ident; nblocks]), beta, alpha)),
        ControlSet::Block {
            pair,
            side,
            block_len,
            members,
        } => {
            if *block_len != params.n_prime() {
                return Err(Error::UnsupportedControls(format!(
                    "block length {block_len} does not match the code's block length {}",
                    params.n_prime()
                )));
            }
            let control_block = (2 * (pair - 1) + side) as usize;
            let proj = projector_factor(f, members);
            let mut fired = vec![ident; nblocks];
            fired[control_block] = proj;
            let mut idle = vec![ident; nblocks];
            idle[control_block] = minus(ident, proj);
            Ok(contract(&with_flip(fired), beta, alpha) + contract(&idle, beta, alpha))
        }
        ControlSet::Singleton { j } => {
            let base = contract(&vec![ident; nblocks], beta, alpha);
            let pos = e.target() - 1;
            let q = insert_bit(j.value(), pos, false);
            let point = |c: &CodewordCoeffs, x: u64| {
                c.eval(f, BitString::new(x, params.n()).expect("fits"))
            };
            let q1 = q | 1 << pos;
            let dg = point(ket, q)? - point(ket, q1)?;
            let dh = point(bra, q)? - point(bra, q1)?;
            Ok(base - dg * dh.conj())
        }
        other => Err(Error::UnsupportedControls(format!(
            "{} controls have no block factorization",
            other.kind()
        ))),
    }
}

/// `φ* E φ`.
pub fn structured_diag_form(
    f: &BoolFn,
    coeffs: &CodewordCoeffs,
    e: &ControlledBitFlip,
) -> Result<Complex64> {
    structured_bitflip_form(f, coeffs, e, coeffs)
}
