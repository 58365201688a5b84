use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, ensure, Context, Result};
use aqec::attacks::{
    attack_value, boost_overlap, build_phase_partition, exact_impossibility_witness,
    phaseflip_attack, realize_as_xy, GridMode, ImpossibilityWitness, PhaseAttack, PhaseflipAttack,
    XyRealization,
};
use aqec::boolfn::{default_tribe_width, tribes, BoolFn, InfluenceProfile};
use aqec::codespace::{materialize_codeword, sample_codeword, CodeParams, StateVector};
use aqec::noise::ErrorOperator;
use aqec::rng;
use aqec::verify::{
    check_gram, check_immunity, check_separation, codeword_form, codeword_samples,
    random_orthonormal_pair, w_slice_pair, EvalPath, ReportKind, TrendRow, VerificationConfig,
    VerificationReport, Witness, ATTACK_ROTATIONS,
};
use aqec::Complex64;
use serde::Serialize;

use crate::output::{emit, load_codeword, load_errors, load_function, to_json, CodewordFile};
use crate::{Cli, Command, Common, EvalChoice, Format, Status};

pub fn run(cli: &Cli) -> Result<Status> {
    let c = &cli.common;
    ensure!(c.tol > 0.0, "--tol must be positive");
    if c.format == Format::Csv
        && !matches!(
            cli.command,
            Command::Influence { .. } | Command::Immunity { .. }
        )
    {
        bail!("CSV output is only available for `influence` and `immunity`");
    }
    match &cli.command {
        Command::Influence { n_prime } => influence(cli, *n_prime),
        Command::Build {
            n_prime,
            codeword_out,
        } => build(cli, *n_prime, codeword_out.as_deref()),
        Command::Gram {
            unbalanced,
            function,
        } => gram(cli, *unbalanced, function.as_deref()),
        Command::Immunity {
            path,
            structured,
            function,
            errors,
            epsilon_claim,
        } => {
            let path = if *structured {
                EvalChoice::Structured
            } else {
                *path
            };
            immunity(
                cli,
                path,
                function.as_deref(),
                errors.as_deref(),
                *epsilon_claim,
            )
        }
        Command::Separation {
            family,
            alpha_claim,
            function,
            errors,
        } => {
            let cfg = VerificationConfig {
                alpha_claim: Some(*alpha_claim),
                ..config(c, EvalPath::Dense)
            };
            let n = single_n(c)?;
            let params = c.b.map(|b| CodeParams::new(n, b)).transpose()?;
            let pairs = sample_pairs(c, n, params.as_ref(), function.as_deref())?;
            let report = match errors {
                Some(path) => separation_over(&pairs, &load_errors(path)?, params.as_ref(), &cfg)?,
                None => check_separation(&pairs, *family, params.as_ref(), &cfg)?,
            };
            emit(cli, &to_json(&report)?, &[])?;
            Ok(status(report.pass))
        }
        Command::Attack {
            codewords,
            function,
        } => attack(cli, codewords, function.as_deref()),
        Command::Witness { function } => witness(cli, function.as_deref()),
    }
}

fn status(pass: bool) -> Status {
    if pass {
        Status::Verified
    } else {
        Status::Violation
    }
}

fn config(c: &Common, path: EvalPath) -> VerificationConfig {
    VerificationConfig {
        seed: c.seed,
        codewords: c.samples,
        error_draws: c.draws,
        tol: c.tol,
        dense_cap: c.dense_cap,
        epsilon_claim: None,
        alpha_claim: None,
        path,
    }
}

fn single_n(c: &Common) -> Result<u32> {
    match c.n.as_slice() {
        [n] => Ok(*n),
        [] => bail!("--n is required"),
        _ => bail!("this command takes a single --n"),
    }
}

fn code_params(c: &Common) -> Result<CodeParams> {
    let b = c.b.ok_or_else(|| anyhow!("--B is required"))?;
    Ok(CodeParams::new(single_n(c)?, b)?)
}

fn resolve_n_prime(c: &Common, n_prime: Option<u32>) -> Result<u32> {
    if let Some(np) = n_prime {
        return Ok(np);
    }
    code_params(c)
        .map(|p| p.n_prime())
        .context("give --n-prime or both --n and --B")
}

/// The building block of `W(params)`: a function file, or balanced Tribes.
fn block(c: &Common, params: &CodeParams, function: Option<&Path>) -> Result<BoolFn> {
    let f = match function {
        Some(path) => load_function(path)?,
        None => tribes(params.n_prime(), c.w)?.balance(),
    };
    ensure!(
        f.width() == params.n_prime(),
        "function width {} does not match n' = {}",
        f.width(),
        params.n_prime()
    );
    Ok(f)
}

#[derive(Serialize)]
struct InfluenceReport {
    n_prime: u32,
    w: u32,
    /// Entries flipped to balance the Tribes function.
    flips: u64,
    balanced: bool,
    s: f64,
    #[serde(flatten)]
    profile: InfluenceProfile,
}

fn influence(cli: &Cli, n_prime: Option<u32>) -> Result<Status> {
    let c = &cli.common;
    let np = resolve_n_prime(c, n_prime)?;
    let w = c.w.unwrap_or_else(|| default_tribe_width(np));
    let (f, flips) = tribes(np, Some(w))?.balance_with_flips();
    let profile = f.influence_profile();
    let body = match c.format {
        Format::Json => to_json(&InfluenceReport {
            n_prime: np,
            w,
            flips,
            balanced: f.is_balanced(),
            s: profile.max_influence,
            profile,
        })?,
        Format::Csv => {
            let mut s = String::from("variable,pivotal,influence\n");
            for (j, (p, v)) in profile
                .pivotal
                .iter()
                .zip(&profile.per_variable)
                .enumerate()
            {
                s += &format!("{},{p},{v:e}\n", j + 1);
            }
            s
        }
    };
    emit(cli, &body, &[])?;
    Ok(Status::Verified)
}

fn build(cli: &Cli, n_prime: Option<u32>, codeword_out: Option<&Path>) -> Result<Status> {
    let c = &cli.common;
    let np = resolve_n_prime(c, n_prime)?;
    let f = tribes(np, c.w)?.balance();
    let mut extra = Vec::new();
    if let Some(path) = codeword_out {
        let params = code_params(c)?;
        ensure!(
            params.n_prime() == np,
            "--n-prime {np} does not match n / 2B = {}",
            params.n_prime()
        );
        let function = match &c.out {
            Some(out) => Some(std::path::absolute(out)?),
            None => None,
        };
        let file = CodewordFile {
            coeffs: sample_codeword(&params, c.seed),
            function,
        };
        std::fs::write(path, to_json(&file)?)
            .with_context(|| format!("writing {}", path.display()))?;
        extra.push(path.to_path_buf());
    }
    emit(cli, &to_json(&f)?, &extra)?;
    Ok(Status::Verified)
}

fn gram(cli: &Cli, unbalanced: bool, function: Option<&Path>) -> Result<Status> {
    let c = &cli.common;
    let params = code_params(c)?;
    let f = if unbalanced {
        ensure!(function.is_none(), "--unbalanced builds its own function");
        tribes(params.n_prime(), c.w)?
    } else {
        block(c, &params, function)?
    };
    let report = check_gram(&f, &params, c.dense_cap, c.tol)?;
    emit(cli, &to_json(&report)?, &[])?;
    Ok(status(report.pass))
}

fn immunity(
    cli: &Cli,
    path: EvalChoice,
    function: Option<&Path>,
    errors: Option<&Path>,
    epsilon_claim: Option<f64>,
) -> Result<Status> {
    let c = &cli.common;
    ensure!(!c.n.is_empty(), "--n is required");
    let b = c.b.ok_or_else(|| anyhow!("--B is required"))?;
    let path = match path {
        EvalChoice::Auto => EvalPath::Auto,
        EvalChoice::Dense => EvalPath::Dense,
        EvalChoice::Structured => EvalPath::Structured,
    };
    let cfg = VerificationConfig {
        epsilon_claim,
        ..config(c, path)
    };
    let errors = errors.map(load_errors).transpose()?;
    let mut reports = Vec::new();
    for &n in &c.n {
        let params = CodeParams::new(n, b)?;
        let f = block(c, &params, function)?;
        reports.push(match &errors {
            Some(list) => immunity_over(&f, &params, list, &cfg)?,
            None => check_immunity(&f, &params, &cfg)?,
        });
    }
    let body = match c.format {
        Format::Json if reports.len() == 1 => to_json(&reports[0])?,
        Format::Json => to_json(&reports)?,
        Format::Csv => {
            let mut s = format!("{}\n", TrendRow::CSV_HEADER);
            for r in &reports {
                let row =
                    TrendRow::from_report(r).ok_or_else(|| anyhow!("report without epsilon"))?;
                s += &row.to_csv();
                s.push('\n');
            }
            s
        }
    };
    emit(cli, &body, &[])?;
    Ok(status(reports.iter().all(|r| r.pass)))
}

/// Immunity restricted to a given list of bit flips.
fn immunity_over(
    f: &BoolFn,
    params: &CodeParams,
    errors: &[ErrorOperator],
    cfg: &VerificationConfig,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let flips = errors
        .iter()
        .map(|e| match e {
            ErrorOperator::Bitflip(flip) => {
                e.validate(params.n())?;
                Ok(flip.clone())
            }
            _ => bail!("immunity takes bit-flip error specs only"),
        })
        .collect::<Result<Vec<_>>>()?;
    let s = f.influence_profile().max_influence;
    let bound = cfg.epsilon_claim.unwrap_or(2.0 * s);
    let mut worst: Option<Witness> = None;
    let mut evaluations = 0;
    for word in codeword_samples(params, cfg.seed, cfg.codewords) {
        for flip in &flips {
            let value = 1.0 - codeword_form(f, &word, flip, &word, cfg)?.norm() / word.norm_sqr();
            evaluations += 1;
            if worst.as_ref().is_none_or(|w| value > w.value()) {
                worst = Some(Witness::Immunity {
                    codeword: word.clone(),
                    error: flip.clone(),
                    value,
                });
            }
        }
    }
    let measured = worst.as_ref().map_or(0.0, Witness::value);
    let dense = match cfg.path {
        EvalPath::Auto => params.n() <= cfg.dense_cap,
        EvalPath::Dense => true,
        EvalPath::Structured => false,
    };
    Ok(VerificationReport {
        kind: ReportKind::Immunity,
        n: params.n(),
        b: Some(params.b()),
        s: Some(s),
        epsilon_measured: Some(measured),
        epsilon_bound: Some(bound),
        alpha_measured: None,
        alpha_claim: None,
        pass: measured <= bound + cfg.tol,
        witness: worst,
        seed: cfg.seed,
        evaluations,
        path: if dense {
            EvalPath::Dense
        } else {
            EvalPath::Structured
        },
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

/// Orthonormal pairs: slices of `W` when `params` is given, random otherwise.
fn sample_pairs(
    c: &Common,
    n: u32,
    params: Option<&CodeParams>,
    function: Option<&Path>,
) -> Result<Vec<(StateVector, StateVector)>> {
    let f = params.map(|p| block(c, p, function)).transpose()?;
    (0..c.samples.max(1) as u64)
        .map(|i| {
            let seed = rng::mix(c.seed, i);
            Ok(match (&f, params) {
                (Some(f), Some(p)) => w_slice_pair(f, p, seed, c.dense_cap)?,
                _ => random_orthonormal_pair(n, seed)?,
            })
        })
        .collect()
}

/// Separation over every ordered pair `(X, Y)` from a given list.
fn separation_over(
    pairs: &[(StateVector, StateVector)],
    errors: &[ErrorOperator],
    params: Option<&CodeParams>,
    cfg: &VerificationConfig,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let n = pairs[0].0.n();
    for e in errors {
        e.validate(n)?;
    }
    let mut worst: Option<Witness> = None;
    let mut evaluations = 0;
    for (p, (phi, psi)) in pairs.iter().enumerate() {
        let applied_phi = errors
            .iter()
            .map(|x| x.apply(phi))
            .collect::<aqec::Result<Vec<_>>>()?;
        let applied_psi = errors
            .iter()
            .map(|y| y.apply(psi))
            .collect::<aqec::Result<Vec<_>>>()?;
        for (a, xphi) in applied_phi.iter().enumerate() {
            for (b, ypsi) in applied_psi.iter().enumerate() {
                let value = xphi.inner(ypsi)?.norm();
                evaluations += 1;
                if worst.as_ref().is_none_or(|w| value > w.value()) {
                    worst = Some(Witness::Separation {
                        pair: p,
                        boosted: false,
                        x: errors[a].clone(),
                        y: errors[b].clone(),
                        value,
                    });
                }
            }
        }
    }
    let measured = worst.as_ref().map_or(0.0, Witness::value);
    let claim = cfg.alpha_claim.unwrap_or(aqec::verify::DEFAULT_ALPHA);
    Ok(VerificationReport {
        kind: ReportKind::Separation,
        n,
        b: params.map(CodeParams::b),
        s: None,
        epsilon_measured: None,
        epsilon_bound: None,
        alpha_measured: Some(measured),
        alpha_claim: Some(claim),
        pass: measured <= claim + cfg.tol,
        witness: worst,
        seed: cfg.seed,
        evaluations,
        path: EvalPath::Dense,
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

/// The code under attack: two codeword files, a slice of `W`, or a random
/// pair, in that order of preference.
fn attack_pair(
    c: &Common,
    codewords: &[PathBuf],
    function: Option<&Path>,
) -> Result<(StateVector, StateVector)> {
    if let [a, b] = codewords {
        let (ca, fa) = load_codeword(a)?;
        let (cb, _) = load_codeword(b)?;
        let fpath = function
            .map(Path::to_path_buf)
            .or(fa)
            .ok_or_else(|| anyhow!("codeword file names no function table; pass --function"))?;
        let f = load_function(&fpath)?;
        let phi = materialize_codeword(&f, &ca, c.dense_cap)?.normalized();
        let raw = materialize_codeword(&f, &cb, c.dense_cap)?;
        let proj = phi.inner(&raw)?;
        let rest = raw.combine(Complex64::new(1.0, 0.0), &phi, -proj)?;
        ensure!(
            rest.norm_sqr() > 1e-18,
            "the two codewords are linearly dependent"
        );
        return Ok((phi, rest.normalized()));
    }
    let n = single_n(c)?;
    match c.b {
        Some(b) => {
            let params = CodeParams::new(n, b)?;
            Ok(w_slice_pair(
                &block(c, &params, function)?,
                &params,
                c.seed,
                c.dense_cap,
            )?)
        }
        None => Ok(random_orthonormal_pair(n, c.seed)?),
    }
}

#[derive(Serialize)]
struct AttackWitness {
    attack: PhaseAttack,
    /// `X* Y` with the same action as the partition, when one exists.
    realization: Option<XyRealization>,
    /// Best realizable `X* Y` found by rotating `ψ`.
    phaseflip: PhaseflipAttack,
}

#[derive(Serialize)]
struct AttackReport {
    n: u32,
    overlap_before: f64,
    overlap_after: f64,
    rotated: bool,
    k: u32,
    grid: GridMode,
    attack_value: f64,
    /// `(1 - π/2^k)·overlap_after`; only guaranteed on the full grid.
    bound: Option<f64>,
    alpha_claim: f64,
    /// `attack_value > alpha_claim`.
    violates_claim: bool,
    max_residual: f64,
    residual_histogram: Vec<u64>,
    witness: AttackWitness,
    seed: u64,
}

fn attack(cli: &Cli, codewords: &[PathBuf], function: Option<&Path>) -> Result<Status> {
    let c = &cli.common;
    let (phi, psi) = attack_pair(c, codewords, function)?;
    let boosted = boost_overlap(&phi, &psi, c.tol.max(1e-9))?;
    let atk = build_phase_partition(&boosted.phi, &boosted.psi, c.k, c.grid, c.dense_cap)?;
    let value = attack_value(&boosted.phi, &atk.partition, &boosted.psi)?;
    let realization = match realize_as_xy(&atk.partition) {
        Ok(r) => r,
        Err(aqec::Error::PartCountOverflow(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let phaseflip = phaseflip_attack(&boosted.phi, &boosted.psi, ATTACK_ROTATIONS, c.dense_cap)?;
    let bound = match c.grid {
        GridMode::Full => Some((1.0 - PI / (1u64 << c.k) as f64) * boosted.overlap),
        GridMode::Paper => None,
    };
    let alpha_claim = aqec::verify::DEFAULT_ALPHA;
    let report = AttackReport {
        n: phi.n(),
        overlap_before: boosted.overlap_before,
        overlap_after: boosted.overlap,
        rotated: boosted.rotated,
        k: c.k,
        grid: c.grid,
        attack_value: value,
        bound,
        alpha_claim,
        violates_claim: value > alpha_claim,
        max_residual: atk.max_residual,
        residual_histogram: atk.residual_histogram.clone(),
        witness: AttackWitness {
            attack: atk,
            realization,
            phaseflip,
        },
        seed: c.seed,
    };
    emit(cli, &to_json(&report)?, &[])?;
    Ok(if report.violates_claim {
        Status::Violation
    } else {
        Status::Verified
    })
}

#[derive(Serialize)]
struct WitnessReport {
    n: u32,
    #[serde(rename = "B")]
    b: Option<u32>,
    seed: u64,
    tol: f64,
    witness: Option<ImpossibilityWitness>,
}

fn witness(cli: &Cli, function: Option<&Path>) -> Result<Status> {
    let c = &cli.common;
    let (phi, psi) = attack_pair(c, &[], function)?;
    let found = exact_impossibility_witness(&phi, &psi, c.tol)?;
    let report = WitnessReport {
        n: phi.n(),
        b: c.b,
        seed: c.seed,
        tol: c.tol,
        witness: found,
    };
    emit(cli, &to_json(&report)?, &[])?;
    Ok(if report.witness.is_some() {
        Status::Violation
    } else {
        Status::Verified
    })
}
