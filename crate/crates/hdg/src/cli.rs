//! Command-line interface: `run` writes a convergence table, `check` runs
//! the invariant suite for one degree.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{HdgError, Result};
use crate::harness::{
    run_checks, run_convergence_study, ManufacturedProblem, MeshFamily, StudyConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "hdg",
    version,
    about = "Hybridized DG solver for second-order elliptic problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a convergence study and write the error table.
    Run(RunArgs),
    /// Run the invariant suite; nonzero exit on any failure.
    Check(CheckArgs),
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Polynomial degree of flux and traces (0..=3).
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of refinement levels; level j uses n = 2 * 2^j.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Problem preset: paper | linear.
    #[arg(long)]
    pub problem: Option<String>,
    /// Output path; prints to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format: csv | md.
    #[arg(long)]
    pub format: Option<String>,
    /// Mesh family: crisscross | diagonal.
    #[arg(long)]
    pub mesh: Option<String>,
    /// Plain key=value file supplying any of the options above; explicit
    /// flags win on conflict.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Polynomial degree of flux and traces (0..=3).
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Md,
}

impl OutputFormat {
    fn from_name(name: &str) -> Result<Self> {
        match name {
            "csv" => Ok(OutputFormat::Csv),
            "md" => Ok(OutputFormat::Md),
            other => Err(HdgError::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// Fully resolved `run` invocation.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub study: StudyConfig,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

const CONFIG_KEYS: [&str; 6] = ["k", "levels", "problem", "out", "format", "mesh"];

/// Parses a plain key=value configuration; `#` starts a comment line.
fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| HdgError::Config(format!("line {}: expected key=value", idx + 1)))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(HdgError::Config(format!("line {}: unknown key `{key}`", idx + 1)));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_usize(value: &str, what: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| HdgError::Config(format!("invalid {what} `{value}`")))
}

/// Merges flags over config-file entries over built-in defaults
/// (k=0, levels=5, problem=paper, format=csv, mesh=crisscross).
fn resolve_from(args: &RunArgs, file: &BTreeMap<String, String>) -> Result<RunSettings> {
    let k = match args.k {
        Some(v) => v,
        None => file.get("k").map(|s| parse_usize(s, "k")).transpose()?.unwrap_or(0),
    };
    let levels = match args.levels {
        Some(v) => v,
        None => file
            .get("levels")
            .map(|s| parse_usize(s, "levels"))
            .transpose()?
            .unwrap_or(5),
    };
    let problem_name = args
        .problem
        .clone()
        .or_else(|| file.get("problem").cloned())
        .unwrap_or_else(|| "paper".to_string());
    let format_name = args
        .format
        .clone()
        .or_else(|| file.get("format").cloned())
        .unwrap_or_else(|| "csv".to_string());
    let mesh_name = args
        .mesh
        .clone()
        .or_else(|| file.get("mesh").cloned())
        .unwrap_or_else(|| "crisscross".to_string());
    let out = args
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from));
    Ok(RunSettings {
        study: StudyConfig {
            ks: vec![k],
            levels,
            problem: ManufacturedProblem::from_name(&problem_name)?,
            family: MeshFamily::from_name(&mesh_name)?,
        },
        out,
        format: OutputFormat::from_name(&format_name)?,
    })
}

pub fn resolve_run(args: &RunArgs) -> Result<RunSettings> {
    let file = match &args.config {
        Some(path) => parse_config_text(&fs::read_to_string(path)?)?,
        None => BTreeMap::new(),
    };
    resolve_from(args, &file)
}

pub fn run_command(args: &RunArgs) -> Result<()> {
    let settings = resolve_run(args)?;
    let table = run_convergence_study(&settings.study)?;
    let text = match settings.format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Md => table.to_markdown(),
    };
    match &settings.out {
        Some(path) => fs::write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Prints one line per invariant; returns whether all passed.
pub fn check_command(args: &CheckArgs) -> Result<bool> {
    let outcomes = run_checks(args.k)?;
    let mut all = true;
    for o in &outcomes {
        if o.ok {
            println!("check {}: ok", o.name);
        } else {
            all = false;
            println!("check {}: FAIL ({})", o.name, o.detail);
        }
    }
    Ok(all)
}

/// Exit code for a failed command: 1 for numerical invariant violations,
/// 2 for bad input or environment.
pub fn failure_code(e: &HdgError) -> u8 {
    match e {
        HdgError::ResidualTooLarge { .. }
        | HdgError::NotPositiveDefinite(_)
        | HdgError::SingularLocalSystem { .. }
        | HdgError::NonSpdCoefficient { .. } => 1,
        _ => 2,
    }
}
