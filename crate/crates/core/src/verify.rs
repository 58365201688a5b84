//! Checkers for immunity, separation, exactness and the influence bounds.
//!
//! Each checker samples codewords or pairs from the run seed, evaluates the
//! relevant forms, and returns a [`VerificationReport`] whose witness can be
//! re-evaluated to reproduce the measured statistic.
//!
//! Immunity is measured as `ε = max (1 - |φ* E φ|)` over unit codewords. The
//! full flips `X^i` are the analytic worst case (the diagonal drop is a sum of
//! nonnegative terms over `S`), so they are always evaluated; random control
//! sets and, for `n ≤ 5`, every control set are checked as well.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::{boost_overlap, check_orthonormal, exactness_residual, phaseflip_attack};
use crate::bits::{BitString, BitTable};
use crate::boolfn::BoolFn;
use crate::codespace::{
    check_dense, complex_normal, materialize_codeword, sample_codeword, CodeParams, CodewordCoeffs,
    StateVector, DEFAULT_DENSE_CAP, MAX_DENSE_CAP,
};
use crate::noise::{
    bitflip_form, structured_bitflip_form, structured_diag_form, ControlSet, ControlledBitFlip,
    ControlledPhase, ErrorOperator, PhaseSet,
};
use crate::rng::{self, Stage};
use crate::{par, Error, Result};

/// Largest `n` for which immunity also scans every control set.
pub const EXHAUSTIVE_MAX_N: u32 = 5;

/// Default separation claim `α`.
pub const DEFAULT_ALPHA: f64 = 0.1;

/// Rotations tried by the phaseflip attack inside [`check_separation`].
pub const ATTACK_ROTATIONS: usize = 64;

/// How forms over codewords are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalPath {
    /// Dense when `n` is within the dense cap, structured otherwise.
    #[default]
    Auto,
    Dense,
    Structured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationConfig {
    pub seed: u64,
    /// Random codewords (or pairs) in addition to the fixed corner cases.
    pub codewords: usize,
    /// Random error draws per codeword (or pair).
    pub error_draws: usize,
    pub tol: f64,
    pub dense_cap: u32,
    pub epsilon_claim: Option<f64>,
    pub alpha_claim: Option<f64>,
    pub path: EvalPath,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            codewords: 100,
            error_draws: 200,
            tol: 1e-9,
            dense_cap: DEFAULT_DENSE_CAP,
            epsilon_claim: None,
            alpha_claim: None,
            path: EvalPath::Auto,
        }
    }
}

impl VerificationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.codewords == 0 || self.error_draws == 0 {
            return Err(Error::Config("sample counts must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config(format!(
                "tolerance {} must be positive",
                self.tol
            )));
        }
        if self.dense_cap > MAX_DENSE_CAP {
            return Err(Error::DenseCapExceeded {
                n: self.dense_cap,
                cap: MAX_DENSE_CAP,
            });
        }
        Ok(())
    }

    fn dense(&self, n: u32) -> Result<bool> {
        match self.path {
            EvalPath::Auto => Ok(n <= self.dense_cap),
            EvalPath::Dense => check_dense(n, self.dense_cap).map(|_| true),
            EvalPath::Structured => Ok(false),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Immunity,
    Separation,
    LemmaW,
}

/// The worst case found by a checker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// `1 - |φ* E φ| / ‖φ‖²`.
    Immunity {
        codeword: CodewordCoeffs,
        error: ControlledBitFlip,
        value: f64,
    },
    /// `|φ* X* Y ψ|` on pair `pair` (after boosting when `boosted`).
    Separation {
        pair: usize,
        boosted: bool,
        x: ErrorOperator,
        y: ErrorOperator,
        value: f64,
    },
    /// `2^{n-1} I_i(φ) / ‖φ‖²`.
    LemmaW {
        codeword: CodewordCoeffs,
        qubit: u32,
        value: f64,
    },
}

impl Witness {
    pub fn value(&self) -> f64 {
        match self {
            Witness::Immunity { value, .. }
            | Witness::Separation { value, .. }
            | Witness::LemmaW { value, .. } => *value,
        }
    }

    /// Recomputes the statistic from scratch. `f` is needed for codeword
    /// witnesses, `pairs` for separation witnesses.
    pub fn reevaluate(
        &self,
        f: Option<&BoolFn>,
        pairs: &[(StateVector, StateVector)],
        dense_cap: u32,
    ) -> Result<f64> {
        let need_f =
            || f.ok_or_else(|| Error::Config("witness needs the building-block function".into()));
        match self {
            Witness::Immunity {
                codeword, error, ..
            } => {
                let f = need_f()?;
                if codeword.params().n() <= dense_cap {
                    let phi = materialize_codeword(f, codeword, dense_cap)?;
                    Ok(1.0 - bitflip_form(&phi, error, &phi)?.norm() / phi.norm_sqr())
                } else {
                    let norm = structured_diag_form(f, codeword, &empty_flip())?.re;
                    Ok(1.0 - structured_diag_form(f, codeword, error)?.norm() / norm)
                }
            }
            Witness::Separation {
                pair,
                boosted,
                x,
                y,
                ..
            } => {
                let (phi, psi) = pairs.get(*pair).ok_or(Error::IndexOutOfRange {
                    what: "pair",
                    index: *pair as u64,
                    max: pairs.len() as u64,
                })?;
                let (phi, psi) = if *boosted {
                    let b = boost_overlap(phi, psi, 1e-6)?;
                    (b.phi, b.psi)
                } else {
                    (phi.clone(), psi.clone())
                };
                Ok(x.apply(&phi)?.inner(&y.apply(&psi)?)?.norm())
            }
            Witness::LemmaW {
                codeword, qubit, ..
            } => {
                let f = need_f()?;
                lemma_w_value(
                    f,
                    codeword,
                    *qubit,
                    codeword.params().n() <= dense_cap,
                    dense_cap,
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kind: ReportKind,
    pub n: u32,
    #[serde(rename = "B")]
    pub b: Option<u32>,
    /// Measured max influence of the building block.
    pub s: Option<f64>,
    pub epsilon_measured: Option<f64>,
    pub epsilon_bound: Option<f64>,
    pub alpha_measured: Option<f64>,
    pub alpha_claim: Option<f64>,
    pub pass: bool,
    pub witness: Option<Witness>,
    pub seed: u64,
    /// Number of `(state, operator)` evaluations behind the statistic.
    pub evaluations: u64,
    pub path: EvalPath,
    pub runtime_ms: u64,
}

impl VerificationReport {
    /// The checked statistic (`ε` or `α`).
    pub fn measured(&self) -> f64 {
        self.epsilon_measured
            .or(self.alpha_measured)
            .unwrap_or(f64::NAN)
    }
}

/// One row of the ε-versus-n trend table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub n: u32,
    #[serde(rename = "B")]
    pub b: u32,
    pub s: f64,
    pub epsilon_measured: f64,
    pub two_s: f64,
}

impl TrendRow {
    pub const CSV_HEADER: &'static str = "n,B,s,epsilon_measured,2s";

    pub fn from_report(r: &VerificationReport) -> Option<Self> {
        let s = r.s?;
        Some(Self {
            n: r.n,
            b: r.b?,
            s,
            epsilon_measured: r.epsilon_measured?,
            two_s: 2.0 * s,
        })
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:e},{:e},{:e}",
            self.n, self.b, self.s, self.epsilon_measured, self.two_s
        )
    }
}

fn empty_flip() -> ControlledBitFlip {
    ControlledBitFlip::new(1, ControlSet::Empty).expect("qubit 1")
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// Fixed codewords that random sampling tends to miss: two basis words,
/// uniform coefficients, parity signs and random signs. All unit norm.
pub fn corner_codewords(params: &CodeParams, seed: u64) -> Vec<CodewordCoeffs> {
    let one = Complex64::new(1.0, 0.0);
    let mut signs = rng::stream(seed, Stage::Codewords);
    let random_signs: Vec<Complex64> = (0..params.dim())
        .map(|_| if signs.random::<bool>() { one } else { -one })
        .collect();
    let mut out = vec![
        CodewordCoeffs::basis(*params, 0).expect("z = 0"),
        CodewordCoeffs::basis(*params, params.dim() as u64 - 1).expect("last z"),
        CodewordCoeffs::from_fn(*params, |_| one),
        CodewordCoeffs::from_fn(
            *params,
            |z| if z.count_ones() % 2 == 0 { one } else { -one },
        ),
        CodewordCoeffs::from_fn(*params, |z| random_signs[z as usize]),
    ];
    if params.dim() == 2 {
        out.remove(1);
    }
    out.into_iter().map(CodewordCoeffs::normalized).collect()
}

/// Corner cases followed by `count` random unit codewords.
pub fn codeword_samples(params: &CodeParams, seed: u64, count: usize) -> Vec<CodewordCoeffs> {
    let mut out = corner_codewords(params, seed);
    out.extend((0..count as u64).map(|i| sample_codeword(params, rng::mix(seed, i))));
    out
}

/// A random control set for a flip of `target`. Seeded predicates are only
/// drawn for the dense path; the structured path needs block-shaped sets.
fn random_controls<R: Rng>(params: &CodeParams, target: u32, dense: bool, r: &mut R) -> ControlSet {
    let n = params.n();
    let kinds = if dense { 3 } else { 2 };
    match r.random_range(0..kinds) {
        0 => {
            let at = params.locate(target).expect("target in range");
            let blocks: Vec<(u32, u32)> = (1..=params.b())
                .flat_map(|p| [(p, 0), (p, 1)])
                .filter(|&b| b != (at.pair, at.side))
                .collect();
            let (pair, side) = blocks[r.random_range(0..blocks.len())];
            let density: f64 = r.random();
            let salt: u64 = r.random();
            let members = BitTable::from_fn(params.n_prime(), |a| rng::bernoulli(salt, a, density))
                .expect("n' fits");
            ControlSet::Block {
                pair,
                side,
                block_len: params.n_prime(),
                members,
            }
        }
        1 => {
            let mask = if n - 1 == 64 {
                u64::MAX
            } else {
                (1u64 << (n - 1)) - 1
            };
            ControlSet::singleton(BitString::new(r.random::<u64>() & mask, n - 1).expect("masked"))
        }
        _ => ControlSet::seeded(r.random(), r.random()).expect("density in [0, 1)"),
    }
}

/// Improvements smaller than this do not replace the current worst case, so
/// rounding-level ties keep the first (privileged) candidate.
const TIE: f64 = 1e-13;

struct Worst<W> {
    value: f64,
    witness: Option<W>,
    evaluations: u64,
}

impl<W> Worst<W> {
    fn new() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            witness: None,
            evaluations: 0,
        }
    }

    fn offer(&mut self, value: f64, witness: impl FnOnce() -> W) {
        self.evaluations += 1;
        if value > self.value + TIE {
            self.value = value;
            self.witness = Some(witness());
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.evaluations += other.evaluations;
        if other.value > self.value + TIE {
            self.value = other.value;
            self.witness = other.witness;
        }
        self
    }
}

/// Every control set over `n - 1 ≤ 4` bits as an explicit table.
fn all_control_sets(n: u32) -> impl Iterator<Item = ControlSet> {
    let strings = 1u64 << (n - 1);
    (0..1u64 << strings).map(move |mask| ControlSet::Explicit {
        members: BitTable::from_fn(n - 1, |y| mask >> y & 1 == 1).expect("small width"),
    })
}

/// Immunity of `W` against controlled bit flips.
pub fn check_immunity(
    f: &BoolFn,
    params: &CodeParams,
    cfg: &VerificationConfig,
) -> Result<VerificationReport> {
    let start = Instant::now();
    cfg.validate()?;
    f.ensure_balanced()?;
    if f.width() != params.n_prime() {
        return Err(Error::WidthMismatch {
            expected: params.n_prime(),
            got: f.width(),
        });
    }
    let dense = cfg.dense(params.n())?;
    let n = params.n();
    let s = f.influence_profile().max_influence;
    let words = codeword_samples(params, cfg.seed, cfg.codewords);

    let per_word = par::map_indexed(
        words.len(),
        |w| -> Result<Worst<(usize, ControlledBitFlip)>> {
            let coeffs = &words[w];
            let mut worst = Worst::new();
            let mut r = rng::substream(cfg.seed, Stage::ControlSets, w as u64);
            let mut ops: Vec<ControlledBitFlip> = (1..=n)
                .map(|i| ControlledBitFlip::full(i).expect("i ≥ 1"))
                .collect();
            for _ in 0..cfg.error_draws {
                let target = r.random_range(1..=n);
                ops.push(ControlledBitFlip::new(
                    target,
                    random_controls(params, target, dense, &mut r),
                )?);
            }
            if dense {
                let phi = materialize_codeword(f, coeffs, cfg.dense_cap)?;
                let norm = phi.norm_sqr();
                if n <= EXHAUSTIVE_MAX_N {
                    for i in 1..=n {
                        ops.extend(
                            all_control_sets(n)
                                .map(|c| ControlledBitFlip::new(i, c).expect("i ≥ 1")),
                        );
                    }
                }
                for e in ops {
                    let eps = 1.0 - bitflip_form(&phi, &e, &phi)?.norm() / norm;
                    worst.offer(eps, || (w, e));
                }
            } else {
                let norm = structured_diag_form(f, coeffs, &empty_flip())?.re;
                for e in ops {
                    let eps = 1.0 - structured_diag_form(f, coeffs, &e)?.norm() / norm;
                    worst.offer(eps, || (w, e));
                }
            }
            Ok(worst)
        },
    );
    let worst = per_word
        .into_iter()
        .try_fold(Worst::new(), |acc, w| w.map(|w| acc.merge(w)))?;
    let bound = cfg.epsilon_claim.unwrap_or(2.0 * s);
    let witness = worst.witness.map(|(w, error)| Witness::Immunity {
        codeword: words[w].clone(),
        error,
        value: worst.value,
    });
    Ok(VerificationReport {
        kind: ReportKind::Immunity,
        n,
        b: Some(params.b()),
        s: Some(s),
        epsilon_measured: Some(worst.value),
        epsilon_bound: Some(bound),
        alpha_measured: None,
        alpha_claim: None,
        pass: worst.value <= bound + cfg.tol,
        witness,
        seed: cfg.seed,
        evaluations: worst.evaluations,
        path: if dense {
            EvalPath::Dense
        } else {
            EvalPath::Structured
        },
        runtime_ms: elapsed_ms(start),
    })
}

/// Error families for [`check_separation`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparationFamily {
    Bitflip,
    Phaseflip,
}

impl std::str::FromStr for SeparationFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bitflip" => Ok(SeparationFamily::Bitflip),
            "phaseflip" => Ok(SeparationFamily::Phaseflip),
            other => Err(Error::Config(format!("unknown error family {other:?}"))),
        }
    }
}

fn random_bitflip<R: Rng>(n: u32, r: &mut R) -> ErrorOperator {
    let target = r.random_range(1..=n);
    ErrorOperator::Bitflip(
        ControlledBitFlip::new(
            target,
            ControlSet::seeded(r.random(), r.random()).expect("density in [0, 1)"),
        )
        .expect("target ≥ 1"),
    )
}

fn random_phaseflip<R: Rng>(r: &mut R) -> ErrorOperator {
    let theta = [0.0, FRAC_PI_4, FRAC_PI_2][r.random_range(0..3)];
    let set = PhaseSet::Seeded {
        density: r.random(),
        seed: r.random(),
    };
    ErrorOperator::Phase(ControlledPhase::new(set, theta).expect("grid angle"))
}

/// Largest `|φ* X* Y ψ|` over sampled `X, Y` from a family and the given
/// orthonormal pairs. For the phaseflip family each pair is also boosted and
/// attacked with a realizable `X* Y`. `B` is reported when `params` is given.
pub fn check_separation(
    pairs: &[(StateVector, StateVector)],
    family: SeparationFamily,
    params: Option<&CodeParams>,
    cfg: &VerificationConfig,
) -> Result<VerificationReport> {
    let start = Instant::now();
    cfg.validate()?;
    let Some(n) = pairs.first().map(|(phi, _)| phi.n()) else {
        return Err(Error::Config("no pairs to check".into()));
    };
    for (phi, psi) in pairs {
        if phi.n() != n {
            return Err(Error::DimensionMismatch {
                left: 1usize << n,
                right: phi.len(),
            });
        }
        check_orthonormal(phi, psi, cfg.tol)?;
    }
    let per_pair = par::map_indexed(pairs.len(), |p| -> Result<Worst<Witness>> {
        let (phi, psi) = &pairs[p];
        let mut worst = Worst::new();
        let mut r = rng::substream(cfg.seed, Stage::PhaseSets, p as u64);
        for _ in 0..cfg.error_draws {
            let (x, y) = match family {
                SeparationFamily::Bitflip => (random_bitflip(n, &mut r), random_bitflip(n, &mut r)),
                SeparationFamily::Phaseflip => (random_phaseflip(&mut r), random_phaseflip(&mut r)),
            };
            let value = x.apply(phi)?.inner(&y.apply(psi)?)?.norm();
            worst.offer(value, || Witness::Separation {
                pair: p,
                boosted: false,
                x,
                y,
                value,
            });
        }
        match family {
            SeparationFamily::Bitflip => {
                for i in 1..=n {
                    let y = ErrorOperator::Bitflip(ControlledBitFlip::full(i)?);
                    let value = phi.inner(&y.apply(psi)?)?.norm();
                    worst.offer(value, || Witness::Separation {
                        pair: p,
                        boosted: false,
                        x: ErrorOperator::identity(),
                        y,
                        value,
                    });
                }
            }
            SeparationFamily::Phaseflip => {
                let boosted = boost_overlap(phi, psi, cfg.tol)?;
                let atk =
                    phaseflip_attack(&boosted.phi, &boosted.psi, ATTACK_ROTATIONS, cfg.dense_cap)?;
                let value = atk.value;
                worst.offer(value, || Witness::Separation {
                    pair: p,
                    boosted: true,
                    x: ErrorOperator::Phase(atk.realization.x),
                    y: ErrorOperator::Phase(atk.realization.y),
                    value,
                });
            }
        }
        Ok(worst)
    });
    let worst = per_pair
        .into_iter()
        .try_fold(Worst::new(), |acc, w| w.map(|w| acc.merge(w)))?;
    let claim = cfg.alpha_claim.unwrap_or(DEFAULT_ALPHA);
    Ok(VerificationReport {
        kind: ReportKind::Separation,
        n,
        b: params.map(|p| p.b()),
        s: None,
        epsilon_measured: None,
        epsilon_bound: None,
        alpha_measured: Some(worst.value),
        alpha_claim: Some(claim),
        pass: worst.value <= claim + cfg.tol,
        witness: worst.witness,
        seed: cfg.seed,
        evaluations: worst.evaluations,
        path: EvalPath::Dense,
        runtime_ms: elapsed_ms(start),
    })
}

/// `max(|ψ* E φ|, |φ* E φ - ψ* E ψ|)` for an orthonormal pair: zero iff a
/// single constant `c(E)` satisfies the exact-correction conditions.
pub fn check_exactness(
    phi: &StateVector,
    psi: &StateVector,
    e: &ErrorOperator,
    tol: f64,
) -> Result<f64> {
    check_orthonormal(phi, psi, tol)?;
    Ok(exactness_residual(
        e.form(phi, phi)?,
        e.form(psi, psi)?,
        e.form(psi, phi)?,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCheck {
    /// `|φ* E_{i,S} φ - φ* φ|`.
    pub lhs: f64,
    /// `2^{n-1} I_i(φ)`.
    pub rhs: f64,
    pub pass: bool,
}

/// `|φ* E_{i,S} φ - φ* φ| ≤ 2^{n-1} I_i(φ)`.
pub fn check_sensitivity_bound(
    phi: &StateVector,
    e: &ControlledBitFlip,
    dense_cap: u32,
    tol: f64,
) -> Result<SensitivityCheck> {
    check_dense(phi.n(), dense_cap)?;
    let lhs = (bitflip_form(phi, e, phi)? - phi.norm_sqr()).norm();
    let rhs = (phi.len() / 2) as f64 * phi.influence(e.target())?;
    Ok(SensitivityCheck {
        lhs,
        rhs,
        pass: lhs <= rhs + tol,
    })
}

/// `2^{n-1} I_i(φ) / ‖φ‖²` for a codeword.
fn lemma_w_value(
    f: &BoolFn,
    coeffs: &CodewordCoeffs,
    qubit: u32,
    dense: bool,
    cap: u32,
) -> Result<f64> {
    if dense {
        let phi = materialize_codeword(f, coeffs, cap)?;
        Ok((phi.len() / 2) as f64 * phi.influence(qubit)? / phi.norm_sqr())
    } else {
        // Σ_pairs |φ(y,0) - φ(y,1)|² = ‖φ‖² - φ* X^i φ
        let norm = structured_diag_form(f, coeffs, &empty_flip())?.re;
        let flipped = structured_diag_form(f, coeffs, &ControlledBitFlip::full(qubit)?)?.re;
        Ok((norm - flipped) / norm)
    }
}

/// `2^{n-1} I(φ) ≤ 2s ‖φ‖²` on corner-case and random codewords.
pub fn check_lemma_w(
    f: &BoolFn,
    params: &CodeParams,
    cfg: &VerificationConfig,
) -> Result<VerificationReport> {
    let start = Instant::now();
    cfg.validate()?;
    f.ensure_balanced()?;
    if f.width() != params.n_prime() {
        return Err(Error::WidthMismatch {
            expected: params.n_prime(),
            got: f.width(),
        });
    }
    let dense = cfg.dense(params.n())?;
    let s = f.influence_profile().max_influence;
    let words = codeword_samples(params, cfg.seed, cfg.codewords);
    let per_word = par::map_indexed(words.len(), |w| -> Result<Worst<(usize, u32)>> {
        let mut worst = Worst::new();
        if dense {
            let phi = materialize_codeword(f, &words[w], cfg.dense_cap)?;
            let (norm, half) = (phi.norm_sqr(), (phi.len() / 2) as f64);
            for i in 1..=params.n() {
                worst.offer(half * phi.influence(i)? / norm, || (w, i));
            }
        } else {
            for i in 1..=params.n() {
                worst.offer(
                    lemma_w_value(f, &words[w], i, false, cfg.dense_cap)?,
                    || (w, i),
                );
            }
        }
        Ok(worst)
    });
    let worst = per_word
        .into_iter()
        .try_fold(Worst::new(), |acc, w| w.map(|w| acc.merge(w)))?;
    let bound = 2.0 * s;
    Ok(VerificationReport {
        kind: ReportKind::LemmaW,
        n: params.n(),
        b: Some(params.b()),
        s: Some(s),
        epsilon_measured: Some(worst.value),
        epsilon_bound: Some(bound),
        alpha_measured: None,
        alpha_claim: None,
        pass: worst.value <= bound + cfg.tol,
        witness: worst.witness.map(|(w, qubit)| Witness::LemmaW {
            codeword: words[w].clone(),
            qubit,
            value: worst.value,
        }),
        seed: cfg.seed,
        evaluations: worst.evaluations,
        path: if dense {
            EvalPath::Dense
        } else {
            EvalPath::Structured
        },
        runtime_ms: elapsed_ms(start),
    })
}

/// Gram matrix of the basis `f_z` against `2^{n-2B}·I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub n: u32,
    #[serde(rename = "B")]
    pub b: u32,
    pub balanced: bool,
    pub expected_diagonal: f64,
    pub diagonal: Vec<f64>,
    pub max_off_diagonal: f64,
    pub max_deviation: f64,
    pub path: EvalPath,
    pub pass: bool,
}

pub fn check_gram(f: &BoolFn, params: &CodeParams, dense_cap: u32, tol: f64) -> Result<GramReport> {
    let dense = params.n() <= dense_cap;
    let g = if dense {
        crate::codespace::gram(f, params, dense_cap)?
    } else {
        crate::codespace::gram_structured(f, params)?
    };
    let expected = params.basis_norm_sqr();
    let max_deviation = g.deviation_from_scaled_identity(expected);
    Ok(GramReport {
        n: params.n(),
        b: params.b(),
        balanced: f.is_balanced(),
        expected_diagonal: expected,
        diagonal: g.diagonal(),
        max_off_diagonal: g.max_off_diagonal(),
        max_deviation,
        path: if dense {
            EvalPath::Dense
        } else {
            EvalPath::Structured
        },
        pass: max_deviation <= tol,
    })
}

/// Gram-Schmidt on two vectors.
fn orthonormalize(phi: StateVector, raw: StateVector) -> Result<(StateVector, StateVector)> {
    let phi = phi.normalized();
    let proj = phi.inner(&raw)?;
    let psi = raw
        .combine(Complex64::new(1.0, 0.0), &phi, -proj)?
        .normalized();
    Ok((phi, psi))
}

/// A random orthonormal pair in `C^{2^n}`: a random 2-dimensional code.
pub fn random_orthonormal_pair(n: u32, seed: u64) -> Result<(StateVector, StateVector)> {
    let mut r = rng::stream(seed, Stage::Pairs);
    let phi = StateVector::random_unit(n, &mut r)?;
    let raw = StateVector::random_unit(n, &mut r)?;
    orthonormalize(phi, raw)
}

/// A random orthonormal pair of codewords of `W` (a 2-dimensional slice),
/// orthonormalized in coefficient space and then materialized.
pub fn w_slice_pair(
    f: &BoolFn,
    params: &CodeParams,
    seed: u64,
    dense_cap: u32,
) -> Result<(StateVector, StateVector)> {
    f.ensure_balanced()?;
    let mut r = rng::stream(seed, Stage::Pairs);
    let a: Vec<Complex64> = (0..params.dim()).map(|_| complex_normal(&mut r)).collect();
    let b: Vec<Complex64> = (0..params.dim()).map(|_| complex_normal(&mut r)).collect();
    let alpha = CodewordCoeffs::new(*params, a)?.normalized();
    let beta = CodewordCoeffs::new(*params, b)?;
    let proj = alpha.inner(&beta)?;
    let beta = beta
        .combine(Complex64::new(1.0, 0.0), &alpha, -proj)?
        .normalized();
    Ok((
        materialize_codeword(f, &alpha, dense_cap)?,
        materialize_codeword(f, &beta, dense_cap)?,
    ))
}

/// The pair `(f_{z1}, f_{z2})`, unit-normalized.
pub fn w_basis_pair(
    f: &BoolFn,
    params: &CodeParams,
    z1: u64,
    z2: u64,
    dense_cap: u32,
) -> Result<(StateVector, StateVector)> {
    f.ensure_balanced()?;
    if z1 == z2 {
        return Err(Error::Config("basis pair needs two distinct z".into()));
    }
    let phi = CodewordCoeffs::basis(*params, z1)?.normalized();
    let psi = CodewordCoeffs::basis(*params, z2)?.normalized();
    Ok((
        materialize_codeword(f, &phi, dense_cap)?,
        materialize_codeword(f, &psi, dense_cap)?,
    ))
}

/// `bra* E ket` over codewords, dense or structured per `cfg`.
pub fn codeword_form(
    f: &BoolFn,
    bra: &CodewordCoeffs,
    e: &ControlledBitFlip,
    ket: &CodewordCoeffs,
    cfg: &VerificationConfig,
) -> Result<Complex64> {
    if cfg.dense(ket.params().n())? {
        let b = materialize_codeword(f, bra, cfg.dense_cap)?;
        let k = materialize_codeword(f, ket, cfg.dense_cap)?;
        bitflip_form(&b, e, &k)
    } else {
        structured_bitflip_form(f, bra, e, ket)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::tribes;

    fn block(n_prime: u32) -> BoolFn {
        tribes(n_prime, None).unwrap().balance()
    }

    fn small_cfg(seed: u64) -> VerificationConfig {
        VerificationConfig {
            seed,
            codewords: 5,
            error_draws: 10,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(VerificationConfig {
            codewords: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(VerificationConfig {
            tol: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(VerificationConfig {
            dense_cap: 31,
            ..Default::default()
        }
        .validate()
        .is_err());
        VerificationConfig::default().validate().unwrap();
    }

    #[test]
    fn immunity_small_code_passes_and_witness_reproduces() {
        let params = CodeParams::new(8, 2).unwrap();
        let f = block(2);
        let r = check_immunity(&f, &params, &small_cfg(3)).unwrap();
        assert!(r.pass, "{r:?}");
        let w = r.witness.as_ref().unwrap();
        assert!((w.reevaluate(Some(&f), &[], 24).unwrap() - r.measured()).abs() <= 1e-12);
    }

    #[test]
    fn immunity_exhaustive_at_four_qubits() {
        let params = CodeParams::new(4, 1).unwrap();
        let f = block(2);
        let r = check_immunity(&f, &params, &small_cfg(1)).unwrap();
        // 9 codewords × (4 full + 10 random + 4·256 exhaustive)
        assert_eq!(r.evaluations, 9 * (4 + 10 + 4 * 256));
        assert!(r.pass);
        // a full flip can reach φ* X φ = -1, so the worst ε sits on a proper subset
        let Some(Witness::Immunity { error, .. }) = &r.witness else {
            panic!()
        };
        assert_ne!(error.controls(), &ControlSet::All);
        assert!((r.measured() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn immunity_rejects_unbalanced() {
        let params = CodeParams::new(8, 2).unwrap();
        let f = tribes(2, None).unwrap();
        assert!(matches!(
            check_immunity(&f, &params, &small_cfg(0)),
            Err(Error::Unbalanced { .. })
        ));
    }

    #[test]
    fn structured_and_dense_immunity_agree() {
        let params = CodeParams::new(12, 2).unwrap();
        let f = block(3);
        let dense = check_immunity(&f, &params, &small_cfg(4)).unwrap();
        let structured = check_immunity(
            &f,
            &params,
            &VerificationConfig {
                path: EvalPath::Structured,
                ..small_cfg(4)
            },
        )
        .unwrap();
        assert_eq!(dense.path, EvalPath::Dense);
        assert_eq!(structured.path, EvalPath::Structured);
        // both include every full flip, which dominates
        assert!((dense.measured() - structured.measured()).abs() < 1e-12);
    }

    #[test]
    fn separation_identical_operators_vanish() {
        let (phi, psi) = random_orthonormal_pair(5, 2).unwrap();
        let x = ErrorOperator::Bitflip(
            ControlledBitFlip::new(2, ControlSet::seeded(0.4, 1).unwrap()).unwrap(),
        );
        let v = x
            .apply(&phi)
            .unwrap()
            .inner(&x.apply(&psi).unwrap())
            .unwrap()
            .norm();
        assert!(v < 1e-12);
    }

    #[test]
    fn separation_phaseflip_refutes_one_tenth() {
        let pairs: Vec<_> = (0..3)
            .map(|s| random_orthonormal_pair(6, s).unwrap())
            .collect();
        let r = check_separation(&pairs, SeparationFamily::Phaseflip, None, &small_cfg(0)).unwrap();
        assert!(r.alpha_measured.unwrap() > 0.1);
        assert!(!r.pass);
        let w = r.witness.unwrap();
        assert!((w.reevaluate(None, &pairs, 24).unwrap() - w.value()).abs() < 1e-12);
    }

    #[test]
    fn exactness_trivial_operators() {
        let (phi, psi) = random_orthonormal_pair(4, 7).unwrap();
        assert!(check_exactness(&phi, &psi, &ErrorOperator::identity(), 1e-9).unwrap() < 1e-15);
        let global = ErrorOperator::Phase(ControlledPhase::new(PhaseSet::All, 1.1).unwrap());
        assert!(check_exactness(&phi, &psi, &global, 1e-9).unwrap() < 1e-12);
        assert!(check_exactness(&phi, &phi, &global, 1e-9).is_err());
    }

    #[test]
    fn sensitivity_equality_and_trivial_cases() {
        let (phi, _) = random_orthonormal_pair(6, 8).unwrap();
        for i in 1..=6 {
            let all = check_sensitivity_bound(&phi, &ControlledBitFlip::full(i).unwrap(), 24, 1e-9)
                .unwrap();
            assert!((all.lhs - all.rhs).abs() < 1e-12);
            let none = check_sensitivity_bound(
                &phi,
                &ControlledBitFlip::new(i, ControlSet::Empty).unwrap(),
                24,
                1e-9,
            )
            .unwrap();
            assert_eq!(none.lhs, 0.0);
            assert!(none.pass);
        }
    }

    #[test]
    fn lemma_w_dense_and_structured() {
        let params = CodeParams::new(12, 2).unwrap();
        let f = block(3);
        let dense = check_lemma_w(&f, &params, &small_cfg(5)).unwrap();
        let structured = check_lemma_w(
            &f,
            &params,
            &VerificationConfig {
                path: EvalPath::Structured,
                ..small_cfg(5)
            },
        )
        .unwrap();
        assert!(dense.pass && structured.pass);
        assert!((dense.measured() - structured.measured()).abs() < 1e-12);
    }

    #[test]
    fn gram_reports() {
        let params = CodeParams::new(8, 2).unwrap();
        let good = check_gram(&block(2), &params, 24, 1e-9).unwrap();
        assert!(good.pass);
        assert_eq!(good.diagonal, vec![16.0; 4]);
        let bad = check_gram(&tribes(2, None).unwrap(), &params, 24, 1e-9).unwrap();
        assert!(!bad.pass && !bad.balanced);
    }

    #[test]
    fn w_pairs_are_orthonormal() {
        let params = CodeParams::new(8, 2).unwrap();
        let f = block(2);
        let (a, b) = w_slice_pair(&f, &params, 3, 24).unwrap();
        check_orthonormal(&a, &b, 1e-12).unwrap();
        let (a, b) = w_basis_pair(&f, &params, 0, 3, 24).unwrap();
        check_orthonormal(&a, &b, 1e-12).unwrap();
    }

    #[test]
    fn report_json_keys_and_trend_row() {
        let params = CodeParams::new(8, 2).unwrap();
        let r = check_immunity(&block(2), &params, &small_cfg(0)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "kind",
            "n",
            "B",
            "s",
            "epsilon_measured",
            "epsilon_bound",
            "alpha_measured",
            "pass",
            "witness",
            "seed",
            "runtime_ms",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["kind"], "immunity");
        let row = TrendRow::from_report(&r).unwrap();
        assert_eq!(
            row.to_csv().split(',').count(),
            TrendRow::CSV_HEADER.split(',').count()
        );
    }
}
