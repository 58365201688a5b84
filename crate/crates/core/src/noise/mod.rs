//! Correlated error operators and their quadratic forms.
//!
//! * [`ControlledBitFlip`] `E_{i,S}` flips qubit `i` on basis states whose
//!   other qubits spell a string in `S`.
//! * [`ControlledPhase`] `E_{S,θ}` multiplies the amplitude of every `x ∈ S`
//!   by `e^{iθ}`.
//! * [`PhasePartition`] `E_{S̄,Θ}` assigns each `x` one angle of a list.
//!
//! Verification only ever needs forms `ψ* E φ`, so those are the primary
//! API; `apply_*` materializes `Eφ` and serves as the fallback and as the
//! reference path in tests.

mod control;
mod structured;

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use control::{ControlSet, PhaseSet};
pub use structured::{structured_bitflip_form, structured_diag_form};

use crate::bits::{insert_bit, BitString, MAX_TABLE_WIDTH};
use crate::codespace::{check_dense, StateVector, DEFAULT_DENSE_CAP};
use crate::{par, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Wraps an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Circular distance between two angles, in `[0, π]`.
#[inline]
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlledBitFlip {
    /// Target qubit, 1-based.
    #[serde(rename = "i")]
    target: u32,
    controls: ControlSet,
}

impl ControlledBitFlip {
    pub fn new(target: u32, controls: ControlSet) -> Result<Self> {
        if target == 0 {
            return Err(Error::IndexOutOfRange {
                what: "qubit",
                index: 0,
                max: 64,
            });
        }
        Ok(Self { target, controls })
    }

    /// The uncontrolled flip `X^i`.
    pub fn full(target: u32) -> Result<Self> {
        Self::new(target, ControlSet::All)
    }

    pub fn target(&self) -> u32 {
        self.target
    }

    pub fn controls(&self) -> &ControlSet {
        &self.controls
    }

    pub fn validate(&self, n: u32) -> Result<()> {
        if self.target == 0 || self.target > n {
            return Err(Error::IndexOutOfRange {
                what: "qubit",
                index: self.target as u64,
                max: n as u64,
            });
        }
        self.controls.validate(n, self.target)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlledPhase {
    theta: f64,
    set: PhaseSet,
}

impl ControlledPhase {
    pub fn new(set: PhaseSet, theta: f64) -> Result<Self> {
        if !(0.0..TAU).contains(&theta) {
            return Err(Error::InvalidAngle(theta));
        }
        Ok(Self { theta, set })
    }

    pub fn identity() -> Self {
        Self {
            theta: 0.0,
            set: PhaseSet::Empty,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn set(&self) -> &PhaseSet {
        &self.set
    }

    /// Phase angle applied at `x` (`θ` or `0`).
    #[inline]
    pub fn angle_at(&self, x: u64) -> f64 {
        if self.set.contains(x) {
            self.theta
        } else {
            0.0
        }
    }

    pub fn validate(&self, n: u32) -> Result<()> {
        if !(0.0..TAU).contains(&self.theta) {
            return Err(Error::InvalidAngle(self.theta));
        }
        self.set.validate(n)
    }
}

/// A partition of `{0,1}^n` with one phase angle per part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePartition {
    n: u32,
    /// Grid level the angles were drawn from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    angles: Vec<f64>,
    assignment: Vec<u16>,
}

impl PhasePartition {
    /// `angles` must be strictly increasing in `[0, 2π)`; `assignment[x]`
    /// names the part of `x`.
    pub fn new(n: u32, angles: Vec<f64>, assignment: Vec<u16>) -> Result<Self> {
        check_dense(n, MAX_TABLE_WIDTH)?;
        if assignment.len() != 1usize << n {
            return Err(Error::DimensionMismatch {
                left: 1usize << n,
                right: assignment.len(),
            });
        }
        if angles.is_empty() || angles.len() > u16::MAX as usize {
            return Err(Error::Config(format!("{} angles", angles.len())));
        }
        if let Some(&bad) = angles.iter().find(|a| !(0.0..TAU).contains(*a)) {
            return Err(Error::InvalidAngle(bad));
        }
        if angles.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "partition angles must be strictly increasing".into(),
            ));
        }
        if assignment.iter().any(|&j| j as usize >= angles.len()) {
            return Err(Error::Config("assignment names a missing part".into()));
        }
        Ok(Self {
            n,
            k: None,
            angles,
            assignment,
        })
    }

    /// Every `x` in one part with angle `theta`.
    pub fn constant(n: u32, theta: f64) -> Result<Self> {
        check_dense(n, MAX_TABLE_WIDTH)?;
        Self::new(n, vec![wrap_angle(theta)], vec![0; 1usize << n])
    }

    pub fn with_level(mut self, k: u32) -> Self {
        self.k = Some(k);
        self
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn level(&self) -> Option<u32> {
        self.k
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn assignment(&self) -> &[u16] {
        &self.assignment
    }

    #[inline]
    pub fn angle_at(&self, x: u64) -> f64 {
        self.angles[self.assignment[x as usize] as usize]
    }

    /// Number of parts that contain at least one `x`.
    pub fn used_parts(&self) -> usize {
        let mut used = vec![false; self.angles.len()];
        for &j in &self.assignment {
            used[j as usize] = true;
        }
        used.into_iter().filter(|&u| u).count()
    }
}

/// Any of the three operator families.
///
/// JSON: `{"type": "bitflip", "i": .., "controls": {..}}`,
/// `{"type": "phase", "theta": .., "set": {..}}` or
/// `{"type": "partitioned", "n": .., "angles": [..], "assignment": [..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ErrorOperator {
    Bitflip(ControlledBitFlip),
    Phase(ControlledPhase),
    Partitioned(PhasePartition),
}

impl ErrorOperator {
    pub fn identity() -> Self {
        ErrorOperator::Phase(ControlledPhase::identity())
    }

    pub fn validate(&self, n: u32) -> Result<()> {
        match self {
            ErrorOperator::Bitflip(e) => e.validate(n),
            ErrorOperator::Phase(e) => e.validate(n),
            ErrorOperator::Partitioned(p) if p.n != n => Err(Error::DimensionMismatch {
                left: 1usize << n,
                right: p.assignment.len(),
            }),
            ErrorOperator::Partitioned(_) => Ok(()),
        }
    }

    pub fn apply(&self, ket: &StateVector) -> Result<StateVector> {
        match self {
            ErrorOperator::Bitflip(e) => apply_bitflip(e, ket),
            ErrorOperator::Phase(e) => apply_phase(e, ket),
            ErrorOperator::Partitioned(p) => apply_partitioned_phase(p, ket),
        }
    }

    /// `bra* E ket`.
    pub fn form(&self, bra: &StateVector, ket: &StateVector) -> Result<Complex64> {
        match self {
            ErrorOperator::Bitflip(e) => bitflip_form(bra, e, ket),
            ErrorOperator::Phase(e) => phase_form(bra, e, ket),
            ErrorOperator::Partitioned(p) => partitioned_form(bra, p, ket),
        }
    }
}

fn check_bitflip(e: &ControlledBitFlip, ket: &StateVector) -> Result<()> {
    e.validate(ket.n())
}

pub fn apply_bitflip(e: &ControlledBitFlip, ket: &StateVector) -> Result<StateVector> {
    check_bitflip(e, ket)?;
    let pos = e.target - 1;
    let mut out = ket.clone();
    let amp = out.amplitudes_mut();
    for y in 0..(amp.len() / 2) as u64 {
        let x0 = insert_bit(y, pos, false);
        if e.controls.fires_on(x0, e.target) {
            amp.swap(x0 as usize, (x0 | 1 << pos) as usize);
        }
    }
    Ok(out)
}

fn apply_diagonal(ket: &StateVector, angle_at: impl Fn(u64) -> f64 + Sync + Send) -> StateVector {
    let src = ket.amplitudes();
    StateVector::from_fn(ket.n(), |x| {
        let a = angle_at(x);
        if a == 0.0 {
            src[x as usize]
        } else {
            src[x as usize] * Complex64::from_polar(1.0, a)
        }
    })
    .expect("same size as input")
}

pub fn apply_phase(e: &ControlledPhase, ket: &StateVector) -> Result<StateVector> {
    e.validate(ket.n())?;
    Ok(apply_diagonal(ket, |x| e.angle_at(x)))
}

pub fn apply_partitioned_phase(p: &PhasePartition, ket: &StateVector) -> Result<StateVector> {
    if p.n != ket.n() {
        return Err(Error::DimensionMismatch {
            left: p.assignment.len(),
            right: ket.len(),
        });
    }
    Ok(apply_diagonal(ket, |x| p.angle_at(x)))
}

/// `bra* E_{i,S} ket` through the pair-difference expansion
///
/// `h* E g = h* g + Σ_{x : x̂_i ∈ S} [h(x)* g(x ⊕ e_i) - h(x)* g(x)]`,
///
/// without materializing `E ket`.
///
/// For a singleton `S = {q̂_i}` with `q' = q ⊕ e_i` this reduces to
/// `h* g - (g(q) - g(q'))·(h(q) - h(q'))*`; the conjugate sits on the bra's
/// difference.
pub fn bitflip_form(
    bra: &StateVector,
    e: &ControlledBitFlip,
    ket: &StateVector,
) -> Result<Complex64> {
    bra.check_same(ket)?;
    check_bitflip(e, ket)?;
    let pos = e.target - 1;
    let (h, g) = (bra.amplitudes(), ket.amplitudes());
    if let ControlSet::Singleton { .. } | ControlSet::Empty = e.controls {
        return Ok(crate::codespace::inner_unchecked(h, g) + bitflip_correction_unchecked(h, e, g));
    }
    let half = h.len() / 2;
    Ok(par::chunked_sum(half, ZERO, |range| {
        let mut acc = ZERO;
        for y in range {
            let x0 = insert_bit(y as u64, pos, false);
            let (i0, i1) = (x0 as usize, (x0 | 1 << pos) as usize);
            let (h0, h1, g0, g1) = (h[i0].conj(), h[i1].conj(), g[i0], g[i1]);
            acc += if fires(&e.controls, y as u64, x0, e.target) {
                h0 * g1 + h1 * g0
            } else {
                h0 * g0 + h1 * g1
            };
        }
        acc
    }))
}

#[inline]
fn fires(controls: &ControlSet, y: u64, x0: u64, target: u32) -> bool {
    match controls {
        ControlSet::Block { .. } => controls.fires_on(x0, target),
        _ => controls.contains_hat(y),
    }
}

/// `bra* E ket - bra* ket`. O(1) for singletons.
pub(crate) fn bitflip_correction_unchecked(
    h: &[Complex64],
    e: &ControlledBitFlip,
    g: &[Complex64],
) -> Complex64 {
    let pos = e.target - 1;
    let pair_term = |x0: u64| {
        let (i0, i1) = (x0 as usize, (x0 | 1 << pos) as usize);
        // h(q)*(g(q') - g(q)) + h(q')*(g(q) - g(q'))
        -(g[i0] - g[i1]) * (h[i0] - h[i1]).conj()
    };
    match &e.controls {
        ControlSet::Empty => ZERO,
        ControlSet::Singleton { j } => pair_term(insert_bit(j.value(), pos, false)),
        controls => par::chunked_sum(h.len() / 2, ZERO, |range| {
            range
                .filter_map(|y| {
                    let x0 = insert_bit(y as u64, pos, false);
                    fires(controls, y as u64, x0, e.target).then(|| pair_term(x0))
                })
                .sum()
        }),
    }
}

/// `bra* E_{S,θ} ket`.
pub fn phase_form(bra: &StateVector, e: &ControlledPhase, ket: &StateVector) -> Result<Complex64> {
    bra.check_same(ket)?;
    e.validate(ket.n())?;
    Ok(diagonal_form(bra.amplitudes(), ket.amplitudes(), |x| {
        e.angle_at(x)
    }))
}

/// `bra* E_{S̄,Θ} ket`.
pub fn partitioned_form(
    bra: &StateVector,
    p: &PhasePartition,
    ket: &StateVector,
) -> Result<Complex64> {
    bra.check_same(ket)?;
    if p.n != ket.n() {
        return Err(Error::DimensionMismatch {
            left: p.assignment.len(),
            right: ket.len(),
        });
    }
    Ok(diagonal_form(bra.amplitudes(), ket.amplitudes(), |x| {
        p.angle_at(x)
    }))
}

fn diagonal_form(
    h: &[Complex64],
    g: &[Complex64],
    angle_at: impl Fn(u64) -> f64 + Sync + Send,
) -> Complex64 {
    par::chunked_sum(h.len(), ZERO, |range| {
        range
            .map(|x| {
                let t = h[x].conj() * g[x];
                let a = angle_at(x as u64);
                if a == 0.0 {
                    t
                } else {
                    t * Complex64::from_polar(1.0, a)
                }
            })
            .sum()
    })
}

/// All `n · 2^{n-1}` singleton flips `E_{i,{j}}`, qubit-major, `j` ascending.
pub fn enumerate_singletons(n: u32) -> Result<impl Iterator<Item = ControlledBitFlip>> {
    if n < 2 || n - 1 > MAX_TABLE_WIDTH {
        return Err(Error::WidthOutOfRange {
            width: n,
            min: 2,
            max: MAX_TABLE_WIDTH + 1,
        });
    }
    Ok((1..=n).flat_map(move |i| {
        (0..1u64 << (n - 1)).map(move |j| ControlledBitFlip {
            target: i,
            controls: ControlSet::Singleton {
                j: BitString::new(j, n - 1).expect("fits"),
            },
        })
    }))
}

/// The partition form of `X* Y`: phase `θ_Y(x) - θ_X(x)` wrapped to `[0, 2π)`.
pub fn compose_phases(x: &ControlledPhase, y: &ControlledPhase, n: u32) -> Result<PhasePartition> {
    x.validate(n)?;
    y.validate(n)?;
    check_dense(n, DEFAULT_DENSE_CAP.max(MAX_TABLE_WIDTH))?;
    // membership pattern (in S_X, in S_Y) -> phase difference
    let combos = [
        0.0,
        wrap_angle(y.theta),
        wrap_angle(-x.theta),
        wrap_angle(y.theta - x.theta),
    ];
    let mut angles: Vec<f64> = Vec::with_capacity(4);
    for &a in &combos {
        if !angles.iter().any(|&b| circular_distance(a, b) <= 1e-12) {
            angles.push(a);
        }
    }
    angles.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let part_of = combos.map(|a| {
        angles
            .iter()
            .position(|&b| circular_distance(a, b) <= 1e-12)
            .expect("present") as u16
    });
    let mut assignment = vec![0u16; 1usize << n];
    par::fill_indexed(&mut assignment, |s| {
        let s = s as u64;
        let combo = (x.set.contains(s) as usize) << 1 | y.set.contains(s) as usize;
        // combo bits: 0 = neither, 1 = Y only, 2 = X only, 3 = both
        part_of[[0, 1, 2, 3][combo]]
    });
    PhasePartition::new(n, angles, assignment)
}
