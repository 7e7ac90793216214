//! Batch front-end: one JSON config per run, a JSON report or CSV trajectory
//! out, and an exit code that says whether every check held.
//!
//! Exit codes: 0 pass, 1 tolerance failure, 2 config error, 3 domain error.

// `!(x > 0.0)` deliberately rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod report;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Deserialize;

use crate::config::{load, ConfigError};
use crate::report::{to_stable_json, Checks};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    AlgebraCheck,
    CrResidual,
    PairOps,
    LineIntegral,
    Geodesic,
    Extremal,
    FamilyVerify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::AlgebraCheck => "algebra-check",
            Self::CrResidual => "cr-residual",
            Self::PairOps => "pair-ops",
            Self::LineIntegral => "line-integral",
            Self::Geodesic => "geodesic",
            Self::Extremal => "extremal",
            Self::FamilyVerify => "family-verify",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "polyga", version, about = "Verification suites and integrators for generalized-analytic functions")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Write here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Override the command's tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed for randomly drawn fields.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// What a run produced: the bytes to write and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub body: String,
    pub output: Option<PathBuf>,
}

pub fn execute(args: &Args) -> Result<Outcome, ConfigError> {
    let loaded = load(&args.config)?;
    let mut echo = loaded.raw.clone();
    if let Some(obj) = echo.as_object_mut() {
        if let Some(t) = args.tol {
            obj.insert("tol".into(), report::float(t));
        }
        if let Some(s) = args.seed {
            obj.insert("seed".into(), s.into());
        }
    }
    let out_spec = loaded.config.output.clone();
    let format = args.format.or(out_spec.as_ref().and_then(|o| o.format)).unwrap_or_default();
    let output = args.output.clone().or(out_spec.and_then(|o| o.file.map(|f| loaded.base.join(f))));
    let ctx = commands::Ctx {
        tol: args.tol.or(loaded.config.tol),
        seed: args.seed.or(loaded.config.seed).unwrap_or(0),
        loaded,
    };
    if let Some(t) = ctx.tol {
        if !(t >= 0.0) {
            return Err(ConfigError::Invalid(format!("tolerance must be non-negative, got {t}")));
        }
    }
    let mut checks = Checks::default();
    let out = commands::run(args.command, &ctx, &mut checks)?;
    let body = match format {
        Format::Json => to_stable_json(&report::report(args.command.name(), echo, out.results, &checks)),
        Format::Csv => match out.table {
            Some(t) => t.to_csv().map_err(|e| ConfigError::Invalid(format!("csv: {e}")))?,
            None => {
                return Err(ConfigError::Invalid(format!(
                    "{} has no tabular output; use --format json",
                    args.command.name()
                )))
            }
        },
    };
    Ok(Outcome { code: checks.exit_code(), body, output })
}

/// Runs and writes the result; returns the process exit code.
pub fn run(args: &Args) -> i32 {
    let outcome = match execute(args) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let written = match &outcome.output {
        Some(path) => std::fs::write(path, &outcome.body),
        None => std::io::stdout().lock().write_all(outcome.body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return EXIT_CONFIG;
    }
    outcome.code
}
