//! Constructive versions of the negative results.
//!
//! * [`exact_impossibility_witness`]: a singleton flip that no exact code of
//!   dimension two can correct.
//! * [`boost_overlap`]: rotate an orthonormal pair until `Σ_x |φ(x)||ψ(x)|`
//!   is at least one half.
//! * [`build_phase_partition`]: a partitioned phase operator aligning the
//!   phases of `φ` and `ψ` pointwise, and [`realize_as_xy`] writing such an
//!   operator as `X* Y` with `X, Y` single controlled phases.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::{BitString, BitTable, MAX_TABLE_WIDTH};
use crate::codespace::{check_dense, StateVector};
use crate::noise::{
    bitflip_correction_unchecked, circular_distance, compose_phases, partitioned_form, wrap_angle,
    ControlSet, ControlledBitFlip, ControlledPhase, PhasePartition, PhaseSet,
};
use crate::{par, Error, Result};

/// Largest grid level accepted by [`build_phase_partition`].
pub const MAX_GRID_LEVEL: u32 = 12;

/// Number of bins in [`PhaseAttack::residual_histogram`], covering `[0, π]`.
pub const HISTOGRAM_BINS: usize = 16;

/// Fails unless `‖φ‖, ‖ψ‖ = 1` and `φ* ψ = 0` within `tol`.
pub fn check_orthonormal(phi: &StateVector, psi: &StateVector, tol: f64) -> Result<()> {
    let deviation = (phi.norm_sqr().sqrt() - 1.0)
        .abs()
        .max((psi.norm_sqr().sqrt() - 1.0).abs())
        .max(phi.inner(psi)?.norm());
    if deviation > tol {
        return Err(Error::NotOrthonormal { deviation, tol });
    }
    Ok(())
}

/// `φ(x) = r_x e^{iθ_x}`; zero amplitudes carry angle 0.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarDecomposition {
    pub magnitudes: Vec<f64>,
    pub angles: Vec<f64>,
}

impl PolarDecomposition {
    pub fn of(phi: &StateVector) -> Self {
        let (magnitudes, angles) = phi
            .amplitudes()
            .iter()
            .map(|a| {
                let r = a.norm();
                (r, if r == 0.0 { 0.0 } else { wrap_angle(a.arg()) })
            })
            .unzip();
        Self { magnitudes, angles }
    }

    pub fn reconstruct(&self) -> Vec<Complex64> {
        self.magnitudes
            .iter()
            .zip(&self.angles)
            .map(|(&r, &t)| Complex64::from_polar(r, t))
            .collect()
    }
}

/// `Σ_x |φ(x)|·|ψ(x)|`.
pub fn abs_overlap(phi: &StateVector, psi: &StateVector) -> Result<f64> {
    phi.check_same(psi)?;
    let (a, b) = (phi.amplitudes(), psi.amplitudes());
    Ok(par::chunked_sum(a.len(), 0.0, |r| {
        r.map(|x| a[x].norm() * b[x].norm()).sum()
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoostedPair {
    pub phi: StateVector,
    pub psi: StateVector,
    /// `Σ_x |φ̂(x)||ψ̂(x)|` of the returned pair.
    pub overlap: f64,
    /// Overlap of the input pair.
    pub overlap_before: f64,
    /// Whether the rotated pair `((φ+ψ)/√2, (φ-ψ)/√2)` was chosen.
    pub rotated: bool,
}

/// Returns whichever of `(φ, ψ)` and `((φ+ψ)/√2, (φ-ψ)/√2)` has the larger
/// absolute overlap. One of them always reaches 1/2: with `|a| ≥ |b|`,
/// `|a||b| + |a² - b²|/2 ≥ (|a|² + |b|²)/2` pointwise, so the two overlaps
/// add up to at least one.
pub fn boost_overlap(phi: &StateVector, psi: &StateVector, tol: f64) -> Result<BoostedPair> {
    check_orthonormal(phi, psi, tol)?;
    let before = abs_overlap(phi, psi)?;
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let plus = phi.combine(s, psi, s)?;
    let minus = phi.combine(s, psi, -s)?;
    let after = abs_overlap(&plus, &minus)?;
    Ok(if after > before {
        BoostedPair {
            phi: plus,
            psi: minus,
            overlap: after,
            overlap_before: before,
            rotated: true,
        }
    } else {
        BoostedPair {
            phi: phi.clone(),
            psi: psi.clone(),
            overlap: before,
            overlap_before: before,
            rotated: false,
        }
    })
}

/// Angle grid for phase attacks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    /// `Θ_k = {πj/2^k : j < 2^k}`, angles in `[0, π)` only.
    Paper,
    /// `{πj/2^k : j < 2^{k+1}}` over the full circle.
    #[default]
    Full,
}

impl std::str::FromStr for GridMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(GridMode::Paper),
            "full" => Ok(GridMode::Full),
            other => Err(Error::Config(format!("unknown grid mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for GridMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GridMode::Paper => "paper",
            GridMode::Full => "full",
        })
    }
}

fn check_level(k: u32) -> Result<()> {
    if k == 0 || k > MAX_GRID_LEVEL {
        return Err(Error::GridLevel(k));
    }
    Ok(())
}

/// The angle list of a grid, increasing.
pub fn grid_angles(k: u32, grid: GridMode) -> Result<Vec<f64>> {
    check_level(k)?;
    let spacing = PI / (1u64 << k) as f64;
    let count = match grid {
        GridMode::Paper => 1usize << k,
        GridMode::Full => 1usize << (k + 1),
    };
    Ok((0..count).map(|j| j as f64 * spacing).collect())
}

/// Worst-case residual the grid guarantees, or `None` for the half-circle grid.
pub fn guaranteed_residual(k: u32, grid: GridMode) -> Option<f64> {
    match grid {
        GridMode::Full => Some(PI / (1u64 << (k + 1)) as f64),
        GridMode::Paper => None,
    }
}

/// Index of the grid angle nearest to `target` in circular distance.
fn nearest(target: f64, k: u32, grid: GridMode) -> u16 {
    let full = 1u64 << (k + 1);
    let spacing = PI / (1u64 << k) as f64;
    let j = ((target / spacing).round() as u64) % full;
    match grid {
        GridMode::Full => j as u16,
        GridMode::Paper => {
            let half = full / 2;
            if j < half {
                j as u16
            } else {
                // outside [0, π): the nearest half-circle angle is an endpoint
                let last = (half - 1) as f64 * spacing;
                if circular_distance(target, last) < circular_distance(target, 0.0) {
                    (half - 1) as u16
                } else {
                    0
                }
            }
        }
    }
}

/// A partitioned phase operator built to align `φ` and `ψ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseAttack {
    pub k: u32,
    pub grid: GridMode,
    pub partition: PhasePartition,
    /// Largest `|θ'_x + θ_j - θ_x|` (circular) over `x` with `r_x r'_x > 0`.
    pub max_residual: f64,
    /// Residual counts in [`HISTOGRAM_BINS`] equal bins over `[0, π]`.
    pub residual_histogram: Vec<u64>,
}

/// Assigns each `x` the grid angle nearest to `θ_x - θ'_x`, so that every
/// term of `φ* E ψ = Σ_x r_x r'_x e^{i(θ'_x + θ_j - θ_x)}` points nearly the
/// same way. Entries with `r_x r'_x = 0` go to part 0.
pub fn build_phase_partition(
    phi: &StateVector,
    psi: &StateVector,
    k: u32,
    grid: GridMode,
    dense_cap: u32,
) -> Result<PhaseAttack> {
    check_level(k)?;
    phi.check_same(psi)?;
    check_dense(phi.n(), dense_cap.min(MAX_TABLE_WIDTH))?;
    let angles = grid_angles(k, grid)?;
    let (a, b) = (phi.amplitudes(), psi.amplitudes());
    let mut assignment = vec![0u16; a.len()];
    par::fill_indexed(&mut assignment, |x| {
        if a[x].norm() == 0.0 || b[x].norm() == 0.0 {
            0
        } else {
            nearest(wrap_angle(a[x].arg() - b[x].arg()), k, grid)
        }
    });
    let bin_width = PI / HISTOGRAM_BINS as f64;
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    let mut max_residual = 0.0f64;
    for x in 0..a.len() {
        if a[x].norm() == 0.0 || b[x].norm() == 0.0 {
            continue;
        }
        let res = circular_distance(b[x].arg() + angles[assignment[x] as usize], a[x].arg());
        max_residual = max_residual.max(res);
        histogram[((res / bin_width) as usize).min(HISTOGRAM_BINS - 1)] += 1;
    }
    let partition = PhasePartition::new(phi.n(), angles, assignment)?.with_level(k);
    Ok(PhaseAttack {
        k,
        grid,
        partition,
        max_residual,
        residual_histogram: histogram,
    })
}

/// `|φ* E ψ|`.
pub fn attack_value(
    phi: &StateVector,
    partition: &PhasePartition,
    psi: &StateVector,
) -> Result<f64> {
    Ok(partitioned_form(phi, partition, psi)?.norm())
}

/// `X* Y` together with a global phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XyRealization {
    pub x: ControlledPhase,
    pub y: ControlledPhase,
    /// `e^{i·global} X* Y` acts as the partition.
    pub global: f64,
}

const PHASEFLIP_ANGLES: [f64; 3] = [0.0, FRAC_PI_4, FRAC_PI_2];
const MATCH_TOL: f64 = 1e-12;

/// Writes a partitioned phase as `e^{ig} X* Y` with `X = E_{S_X, θ_X}`,
/// `Y = E_{S_Y, θ_Y}` and `θ_X, θ_Y ∈ {0, π/4, π/2}`.
///
/// On one `x` the product contributes one of `0, θ_Y, -θ_X, θ_Y - θ_X`, so
/// at most four parts can be used. Returns `Ok(None)` when no choice of
/// angles and global phase matches every used part.
pub fn realize_as_xy(p: &PhasePartition) -> Result<Option<XyRealization>> {
    let mut used = vec![false; p.angles().len()];
    for &j in p.assignment() {
        used[j as usize] = true;
    }
    let parts: Vec<usize> = (0..used.len()).filter(|&j| used[j]).collect();
    if parts.len() > 4 {
        return Err(Error::PartCountOverflow(parts.len()));
    }
    let targets: Vec<f64> = parts.iter().map(|&j| p.angles()[j]).collect();
    for &tx in &PHASEFLIP_ANGLES {
        for &ty in &PHASEFLIP_ANGLES {
            // (in S_X, in S_Y) for each difference
            let combos = [
                ((false, false), 0.0),
                ((false, true), ty),
                ((true, false), -tx),
                ((true, true), ty - tx),
            ];
            for &(_, d0) in &combos {
                let global = wrap_angle(targets[0] - d0);
                let choice: Option<Vec<(bool, bool)>> = targets
                    .iter()
                    .map(|&t| {
                        combos
                            .iter()
                            .find(|(_, d)| circular_distance(global + d, t) <= MATCH_TOL)
                            .map(|&(m, _)| m)
                    })
                    .collect();
                let Some(choice) = choice else { continue };
                let mut membership = vec![(false, false); p.angles().len()];
                for (&j, &m) in parts.iter().zip(&choice) {
                    membership[j] = m;
                }
                let n = p.n();
                let sx =
                    BitTable::from_fn(n, |x| membership[p.assignment()[x as usize] as usize].0)?;
                let sy =
                    BitTable::from_fn(n, |x| membership[p.assignment()[x as usize] as usize].1)?;
                return Ok(Some(XyRealization {
                    x: ControlledPhase::new(PhaseSet::Explicit { members: sx }, tx)?,
                    y: ControlledPhase::new(PhaseSet::Explicit { members: sy }, ty)?,
                    global,
                }));
            }
        }
    }
    Ok(None)
}

/// Largest entrywise deviation of `e^{ig} X* Y` from the partition.
pub fn realization_error(p: &PhasePartition, r: &XyRealization) -> Result<f64> {
    let composed = compose_phases(&r.x, &r.y, p.n())?;
    Ok((0..1u64 << p.n())
        .map(|x| {
            let a = Complex64::from_polar(1.0, r.global + composed.angle_at(x));
            (a - Complex64::from_polar(1.0, p.angle_at(x))).norm()
        })
        .fold(0.0, f64::max))
}

/// A concrete `X, Y ∈ phaseflip` pair for an orthonormal `(φ, ψ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseflipAttack {
    /// Rotation `ψ → e^{iβ}ψ` applied before gridding.
    pub beta: f64,
    pub attack: PhaseAttack,
    pub realization: XyRealization,
    /// `|φ* X* Y ψ|`.
    pub value: f64,
}

/// Half-circle `k = 2` partitions always use at most the four angles
/// `0, π/4, π/2, 3π/4`, which are realizable as `X* Y`. Because those span
/// only half the circle, the target angles are first rotated by `β` (a
/// global phase on `ψ`, invisible to `|φ* E ψ|`); the best of `rotations`
/// equally spaced `β` is kept.
pub fn phaseflip_attack(
    phi: &StateVector,
    psi: &StateVector,
    rotations: usize,
    dense_cap: u32,
) -> Result<PhaseflipAttack> {
    phi.check_same(psi)?;
    let rotations = rotations.max(1);
    let mut best: Option<(f64, f64, PhaseAttack)> = None;
    for m in 0..rotations {
        let beta = TAU * m as f64 / rotations as f64;
        let turned = psi.scaled(Complex64::from_polar(1.0, beta));
        let attack = build_phase_partition(phi, &turned, 2, GridMode::Paper, dense_cap)?;
        let value = attack_value(phi, &attack.partition, psi)?;
        if best.as_ref().is_none_or(|(v, _, _)| value > *v) {
            best = Some((value, beta, attack));
        }
    }
    let (_, beta, attack) = best.expect("at least one rotation");
    let realization = realize_as_xy(&attack.partition)?
        .ok_or_else(|| Error::Config("half-circle partition was not realizable".into()))?;
    let xphi = crate::noise::apply_phase(&realization.x, phi)?;
    let ypsi = crate::noise::apply_phase(&realization.y, psi)?;
    let value = xphi.inner(&ypsi)?.norm();
    Ok(PhaseflipAttack {
        beta,
        attack,
        realization,
        value,
    })
}

/// A singleton flip on which no exact-correction constant `c(E)` exists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpossibilityWitness {
    pub error: ControlledBitFlip,
    pub q: BitString,
    pub q_prime: BitString,
    pub phi_e_phi: Complex64,
    pub psi_e_psi: Complex64,
    pub psi_e_phi: Complex64,
    /// `max(|ψ* E φ|, |φ* E φ - ψ* E ψ|)`.
    pub residual: f64,
}

/// `max(|ψ* E φ|, |φ* E φ - ψ* E ψ|)`: zero iff one constant serves both
/// conditions for an orthonormal pair.
pub fn exactness_residual(phi_e_phi: Complex64, psi_e_psi: Complex64, psi_e_phi: Complex64) -> f64 {
    psi_e_phi.norm().max((phi_e_phi - psi_e_psi).norm())
}

/// Scans singletons `E_{i,{q̂_i}}` (qubit ascending, control string
/// ascending) and returns the first whose exactness residual exceeds `tol`.
///
/// `None` only when every singleton is consistent, which for an orthonormal
/// pair cannot happen: it would force both states to be constant.
pub fn exact_impossibility_witness(
    phi: &StateVector,
    psi: &StateVector,
    tol: f64,
) -> Result<Option<ImpossibilityWitness>> {
    check_orthonormal(phi, psi, tol.max(1e-9))?;
    let n = phi.n();
    if n < 2 || n - 1 > MAX_TABLE_WIDTH {
        return Err(Error::WidthOutOfRange {
            width: n,
            min: 2,
            max: MAX_TABLE_WIDTH + 1,
        });
    }
    let (a, b) = (phi.amplitudes(), psi.amplitudes());
    let pp = phi.inner(phi)?;
    let ss = psi.inner(psi)?;
    let sp = psi.inner(phi)?;
    for i in 1..=n {
        let scan = |j: u64| {
            let e = ControlledBitFlip::new(
                i,
                ControlSet::singleton(BitString::new(j, n - 1).expect("fits")),
            )
            .expect("valid target");
            let phi_e_phi = pp + bitflip_correction_unchecked(a, &e, a);
            let psi_e_psi = ss + bitflip_correction_unchecked(b, &e, b);
            let psi_e_phi = sp + bitflip_correction_unchecked(b, &e, a);
            let residual = exactness_residual(phi_e_phi, psi_e_psi, psi_e_phi);
            (residual > tol).then_some((e, phi_e_phi, psi_e_psi, psi_e_phi, residual))
        };
        if let Some((e, phi_e_phi, psi_e_psi, psi_e_phi, residual)) =
            (0..1u64 << (n - 1)).find_map(scan)
        {
            let ControlSet::Singleton { j } = e.controls() else {
                unreachable!()
            };
            let q = crate::bits::insert_bit(j.value(), i - 1, false);
            return Ok(Some(ImpossibilityWitness {
                q: BitString::new(q, n)?,
                q_prime: BitString::new(q | 1 << (i - 1), n)?,
                error: e,
                phi_e_phi,
                psi_e_psi,
                psi_e_phi,
                residual,
            }));
        }
    }
    Ok(None)
}
