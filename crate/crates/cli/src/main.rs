//! `aqec`: build codes, run the immunity/separation checks and attacks, and
//! write JSON or CSV reports.
//!
//! Exit status: 0 when the checked claim holds, 1 when a violation or witness
//! was found, 2 on usage or configuration errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use aqec::attacks::GridMode;
use aqec::codespace::DEFAULT_DENSE_CAP;
use aqec::verify::SeparationFamily;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "aqec",
    version,
    about = "Approximate QEC against controlled bit-flip and phase noise"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Qubit count; `immunity` also takes a comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Vec<u32>,
    /// Number of block pairs (code dimension 2^B).
    #[arg(long = "B", global = true)]
    #[serde(rename = "B")]
    pub b: Option<u32>,
    /// Tribe width of the building block (default: chosen from n').
    #[arg(long, global = true)]
    pub w: Option<u32>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Random codewords or pairs, on top of the fixed corner cases.
    #[arg(long, global = true, default_value_t = 100)]
    pub samples: usize,
    /// Random error draws per codeword or pair.
    #[arg(long, global = true, default_value_t = 200)]
    pub draws: usize,
    /// Phase grid level.
    #[arg(long, global = true, default_value_t = 2)]
    pub k: u32,
    #[arg(long, global = true, default_value = "full")]
    pub grid: GridMode,
    /// Largest n materialized as a dense vector.
    #[arg(long = "dense-cap", global = true, default_value_t = DEFAULT_DENSE_CAP)]
    pub dense_cap: u32,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; a run manifest is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalChoice {
    Auto,
    Dense,
    Structured,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Command {
    /// Influence profile of the balanced Tribes block.
    Influence {
        /// Block length n' (default: n / 2B).
        #[arg(long = "n-prime")]
        n_prime: Option<u32>,
    },
    /// Write the balanced building block, and optionally a codeword of W.
    Build {
        #[arg(long = "n-prime")]
        n_prime: Option<u32>,
        /// Also write a random unit codeword of W(n, B) here.
        #[arg(long = "codeword-out")]
        codeword_out: Option<PathBuf>,
    },
    /// Orthogonality of the basis f_z.
    Gram {
        /// Skip balancing, as a negative control.
        #[arg(long)]
        unbalanced: bool,
        #[arg(long)]
        function: Option<PathBuf>,
    },
    /// Measured epsilon of W against controlled bit flips versus 2s.
    Immunity {
        #[arg(long, value_enum, default_value_t = EvalChoice::Auto)]
        path: EvalChoice,
        /// Shorthand for `--path structured`.
        #[arg(long, conflicts_with = "path")]
        structured: bool,
        #[arg(long)]
        function: Option<PathBuf>,
        /// Evaluate only these bit-flip error specs (JSON object or array).
        #[arg(long)]
        errors: Option<PathBuf>,
        /// Declared epsilon to check instead of 2s.
        #[arg(long = "epsilon-claim")]
        epsilon_claim: Option<f64>,
    },
    /// Largest |phi* X* Y psi| over orthonormal pairs (W slices with --B).
    Separation {
        #[arg(long, default_value = "phaseflip")]
        family: SeparationFamily,
        #[arg(long = "alpha-claim", default_value_t = 0.1)]
        alpha_claim: f64,
        #[arg(long)]
        function: Option<PathBuf>,
        /// Use all ordered pairs from these error specs as (X, Y).
        #[arg(long)]
        errors: Option<PathBuf>,
    },
    /// Boost a pair and align it with a partitioned phase.
    Attack {
        /// Two codeword files defining the code (orthonormalized).
        #[arg(long = "codeword", num_args = 2)]
        codewords: Vec<PathBuf>,
        #[arg(long)]
        function: Option<PathBuf>,
    },
    /// Singleton bit flip refuting exact correction of a 2-dim code.
    Witness {
        #[arg(long)]
        function: Option<PathBuf>,
    },
}

pub enum Status {
    Verified,
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(Status::Verified) => ExitCode::SUCCESS,
        Ok(Status::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
