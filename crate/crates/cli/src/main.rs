//! `eqsym run <command> <spec>...`: parse spec files, run an audit, write a
//! JSON report (or a CSV series for `converge` and `spiral`).
//!
//! Exit codes: 0 success, 2 an audit found non-uniqueness, 1 any error.

mod commands;
mod report;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use eqsym::algebra::DEFAULT_CLOSURE_CAP;
use serde_json::json;
use sha2::{Digest, Sha256};

use commands::{Command, Settings};
use report::{Input, Report};

#[derive(Parser)]
#[command(
    name = "eqsym",
    version,
    about = "Symmetry audits for finite matrix semigroups"
)]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Run one command over one or more spec files.
    Run {
        #[arg(value_enum)]
        command: Command,
        #[arg(required = true)]
        specs: Vec<PathBuf>,
        /// Relative rank and matching tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Seed for randomized steps; decimal or 0x-prefixed hex.
        #[arg(long, default_value = "0xDECAF", value_parser = parse_seed)]
        seed: u64,
        /// Largest closure size before giving up.
        #[arg(long, default_value_t = DEFAULT_CLOSURE_CAP)]
        cap: usize,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Re-parse a JSON report and check its schema.
    Validate { report: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    match Cli::parse().action {
        Action::Validate { report } => validate(&report),
        Action::Run {
            command,
            specs,
            tol,
            seed,
            cap,
            out,
            format,
        } => run(command, &specs, Settings { tol, seed, cap }, out, format),
    }
}

fn validate(path: &PathBuf) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", path.display())),
    };
    let value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return fail(format!("{}: {e}", path.display())),
    };
    match report::validate(&value) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(format!("{}: {e}", path.display())),
    }
}

fn run(
    command: Command,
    specs: &[PathBuf],
    settings: Settings,
    out: Option<PathBuf>,
    format: Format,
) -> ExitCode {
    let Settings { tol, cap, seed } = settings;

    if !(tol > 0.0 && tol.is_finite()) {
        return fail("--tol must be a positive number");
    }
    if format == Format::Csv && !command.emits_series() {
        return fail(format!(
            "`{}` has no series; CSV is available for converge and spiral",
            command.name()
        ));
    }
    let start = Instant::now();

    let mut inputs = Vec::new();
    let mut results = Vec::new();
    let mut series = Vec::new();
    let mut nonunique = false;
    for (i, path) in specs.iter().enumerate() {
        let shown = path.display().to_string();
        let bytes = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) => return fail(format!("cannot read {shown}: {e}")),
        };
        let text = match String::from_utf8(bytes.clone()) {
            Ok(t) => t,
            Err(_) => return fail(format!("{shown} is not UTF-8")),
        };
        let spec = match spec::parse(&shown, &text) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        let outcome = match commands::run(command, &spec, &settings) {
            Ok(o) => o,
            Err(e) => return fail(e),
        };
        inputs.push(Input {
            path: shown,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        results.push(outcome.result);
        series.push((i, outcome.series));
        nonunique |= outcome.nonunique;
    }

    let exit_code: u8 = if nonunique { 2 } else { 0 };
    let text = match format {
        Format::Csv => report::csv(&series),
        Format::Json => {
            let r = Report {
                command: command.name().to_string(),
                inputs,
                results,
                tolerances: json!({ "tol": tol, "cap": cap }),
                seed,
                exit_code: exit_code.into(),
                wall_time_s: start.elapsed().as_secs_f64(),
            };
            let mut s = report::to_string(&r.to_value());
            s.push('\n');
            s
        }
    };
    match out {
        Some(p) => {
            if let Err(e) = std::fs::write(&p, text) {
                return fail(format!("cannot write {}: {e}", p.display()));
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(exit_code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_accept_hex_and_decimal() {
        assert_eq!(parse_seed("0xDECAF"), Ok(0xDECAF));
        assert_eq!(parse_seed("42"), Ok(42));
        assert!(parse_seed("0xZZ").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
