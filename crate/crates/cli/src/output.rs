use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use aqec::boolfn::BoolFn;
use aqec::codespace::CodewordCoeffs;
use aqec::noise::ErrorOperator;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Cli, Command, Common};

/// Everything needed to rerun a command.
#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a Command,
    pub config: &'a Common,
    pub argv: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub version: &'static str,
}

/// Writes `body` to `--out` (and the manifest next to it) or to stdout.
pub fn emit(cli: &Cli, body: &str, extra_outputs: &[PathBuf]) -> Result<()> {
    let Some(out) = &cli.common.out else {
        print!("{body}");
        return Ok(());
    };
    fs::write(out, body).with_context(|| format!("writing {}", out.display()))?;
    let mut outputs = vec![out.clone()];
    outputs.extend_from_slice(extra_outputs);
    let manifest = RunManifest {
        command: &cli.command,
        config: &cli.common,
        argv: std::env::args().collect(),
        outputs,
        version: env!("CARGO_PKG_VERSION"),
    };
    let path = manifest_path(out);
    fs::write(&path, to_json(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_function(path: &Path) -> Result<BoolFn> {
    read_json(path)
}

/// A codeword file: the coefficients plus an optional path to the function
/// table, relative to the codeword file.
#[derive(Serialize, Deserialize)]
pub struct CodewordFile {
    #[serde(flatten)]
    pub coeffs: CodewordCoeffs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<PathBuf>,
}

pub fn load_codeword(path: &Path) -> Result<(CodewordCoeffs, Option<PathBuf>)> {
    let file: CodewordFile = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok((file.coeffs, file.function.map(|f| base.join(f))))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(ErrorOperator),
    Many(Vec<ErrorOperator>),
}

pub fn load_errors(path: &Path) -> Result<Vec<ErrorOperator>> {
    Ok(match read_json::<OneOrMany>(path)? {
        OneOrMany::One(e) => vec![e],
        OneOrMany::Many(v) => v,
    })
}
