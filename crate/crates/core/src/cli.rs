//! Command-line front end.
//!
//! Exit codes: 0 when every check passed, 1 when any check failed, 2 for
//! usage or configuration errors, 3 for unreadable or invalid system files.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ks::{search, ContextSystem, SearchReport};
use crate::observables::PairKind;
use crate::proofs::{
    swap_demo, swap_outcomes, verify_fig1_matrices, verify_ghz, verify_hardy, verify_ks,
    KsVerification,
};
use crate::report::VerificationReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeasurementArg {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
}

#[derive(Debug, Parser)]
#[command(
    name = "precorr",
    version,
    about = "Verify the no-go arguments against preexisting pair correlations"
)]
struct Args {
    /// Numerical tolerance for pass/fail comparisons
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: CommandArg,
}

#[derive(Debug, Subcommand)]
enum CommandArg {
    /// Operator identities and value-assignment contradiction on three pairs
    VerifyGhz,
    /// Post-selection probabilities on the two-pair state
    VerifyHardy,
    /// Exhaustive searches over the built-in context systems
    VerifyKs,
    /// Measure A or B on particles 2 and 3 of two singlets
    DemoSwap {
        #[arg(long, value_enum, default_value_t = MeasurementArg::B)]
        measurement: MeasurementArg,
    },
    /// Search a context system loaded from a JSON document
    CheckSystem { path: PathBuf },
    /// Run every built-in verification
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    VerifyGhz,
    VerifyHardy,
    VerifyKs,
    DemoSwap,
    CheckSystem,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub tolerance: f64,
    pub format: Format,
    pub system_path: Option<PathBuf>,
    pub measurement: Option<PairKind>,
}

impl CliConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            tolerance: DEFAULT_TOLERANCE,
            format: Format::Text,
            system_path: None,
            measurement: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(format!("tolerance must be positive, got {}", self.tolerance));
        }
        match (self.command, &self.system_path) {
            (Command::CheckSystem, None) => Err("check-system requires a system file".into()),
            (Command::CheckSystem, Some(_)) | (_, None) => Ok(()),
            (_, Some(_)) => Err("a system file is only accepted by check-system".into()),
        }
    }
}

/// What the binary should print and return.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn usage(message: String) -> Self {
        Self {
            exit_code: EXIT_USAGE,
            stdout: String::new(),
            stderr: message,
        }
    }
}

/// Parses command-line arguments (including the program name).
///
/// `Err` carries the outcome to return directly: help and version output
/// with exit 0, or a usage error with exit 2.
pub fn parse_args<I, T>(args: I) -> Result<CliConfig, Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(args).map_err(|e| {
        let rendered = e.render().to_string();
        if e.use_stderr() {
            Outcome::usage(rendered)
        } else {
            Outcome {
                exit_code: EXIT_OK,
                stdout: rendered,
                stderr: String::new(),
            }
        }
    })?;
    let mut config = CliConfig {
        tolerance: args.tolerance,
        format: args.format,
        ..CliConfig::new(Command::All)
    };
    match args.command {
        CommandArg::VerifyGhz => config.command = Command::VerifyGhz,
        CommandArg::VerifyHardy => config.command = Command::VerifyHardy,
        CommandArg::VerifyKs => config.command = Command::VerifyKs,
        CommandArg::DemoSwap { measurement } => {
            config.command = Command::DemoSwap;
            config.measurement = Some(match measurement {
                MeasurementArg::A => PairKind::A,
                MeasurementArg::B => PairKind::B,
            });
        }
        CommandArg::CheckSystem { path } => {
            config.command = Command::CheckSystem;
            config.system_path = Some(path);
        }
        CommandArg::All => config.command = Command::All,
    }
    Ok(config)
}

/// Parses and runs in one step; the binary entry point.
pub fn main_with_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(args) {
        Ok(config) => run(&config),
        Err(outcome) => outcome,
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum Document {
    Verification(VerificationReport),
    Ks(KsVerification),
    Search(SystemSearch),
}

#[derive(Serialize)]
struct SystemSearch {
    system: String,
    #[serde(flatten)]
    report: SearchReport,
}

impl Document {
    fn passed(&self) -> bool {
        match self {
            Document::Verification(r) => r.overall,
            Document::Ks(k) => k.report.overall,
            Document::Search(_) => true,
        }
    }

    fn render_text(&self, out: &mut String) {
        match self {
            Document::Verification(r) => out.push_str(&r.render_text()),
            Document::Ks(k) => {
                out.push_str(&k.report.render_text());
                for s in &k.searches {
                    render_search(out, &s.system, &s.report);
                }
            }
            Document::Search(s) => render_search(out, &s.system, &s.report),
        }
    }
}

fn render_search(out: &mut String, system: &str, r: &SearchReport) {
    let verdict = if r.satisfiable { "SAT" } else { "UNSAT" };
    let _ = writeln!(
        out,
        "search {system}: {verdict} after {} assignments",
        r.assignments_checked
    );
    if let Some(w) = &r.witness {
        let parts: Vec<String> = w.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "  witness: {}", parts.join(", "));
    }
    if !r.first_violated_context_histogram.is_empty() {
        let parts: Vec<String> = r
            .first_violated_context_histogram
            .iter()
            .map(|(c, n)| format!("context {c}: {n}"))
            .collect();
        let _ = writeln!(out, "  first violated: {}", parts.join(", "));
    }
}

fn swap_text_details(kind: PairKind, out: &mut String) {
    if let Ok(outcomes) = swap_outcomes(kind) {
        for o in outcomes {
            let amps: Vec<String> = o
                .state_14
                .amplitudes()
                .iter()
                .map(|z| format!("{:+.4}{:+.4}i", z.re, z.im))
                .collect();
            let _ = writeln!(
                out,
                "  {kind}_23 = {:+}: p = {:.6}, entropy = {:.6} bits, (1,4) state = [{}]",
                o.eigenvalue,
                o.probability,
                o.entropy,
                amps.join(", ")
            );
        }
    }
}

pub fn run(config: &CliConfig) -> Outcome {
    if let Err(message) = config.validate() {
        return Outcome::usage(format!("error: {message}\n"));
    }
    let tol = config.tolerance;
    let docs = match config.command {
        Command::VerifyGhz => vec![Document::Verification(verify_ghz(tol))],
        Command::VerifyHardy => vec![Document::Verification(verify_hardy(tol))],
        Command::VerifyKs => vec![Document::Ks(verify_ks())],
        Command::DemoSwap => {
            let kind = config.measurement.unwrap_or(PairKind::B);
            vec![Document::Verification(swap_demo(kind))]
        }
        Command::CheckSystem => {
            let path = config.system_path.as_ref().expect("validated");
            match check_system(path) {
                Ok(doc) => vec![doc],
                Err(message) => {
                    return Outcome {
                        exit_code: EXIT_INPUT,
                        stdout: String::new(),
                        stderr: format!("error: {}: {message}\n", path.display()),
                    }
                }
            }
        }
        Command::All => vec![
            Document::Verification(verify_ghz(tol)),
            Document::Verification(verify_hardy(tol)),
            Document::Ks(verify_ks()),
            Document::Verification(verify_fig1_matrices(tol)),
        ],
    };

    let passed = docs.iter().all(Document::passed);
    let stdout = match config.format {
        Format::Json => {
            let json = if docs.len() == 1 {
                serde_json::to_string_pretty(&docs[0])
            } else {
                serde_json::to_string_pretty(&docs)
            };
            json.expect("reports serialize") + "\n"
        }
        Format::Text => {
            let mut out = String::new();
            for d in &docs {
                d.render_text(&mut out);
            }
            if config.command == Command::DemoSwap {
                swap_text_details(config.measurement.unwrap_or(PairKind::B), &mut out);
            }
            out
        }
    };
    Outcome {
        exit_code: if passed { EXIT_OK } else { EXIT_FAILED },
        stdout,
        stderr: String::new(),
    }
}

fn check_system(path: &std::path::Path) -> Result<Document, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let sys = ContextSystem::from_json(&text).map_err(|e| e.to_string())?;
    let report = search(&sys).map_err(|e| e.to_string())?;
    Ok(Document::Search(SystemSearch {
        system: path.display().to_string(),
        report,
    }))
}
