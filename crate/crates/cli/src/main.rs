use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::builder::FalseyValueParser;
use clap::{ArgAction, Args, Parser, Subcommand};
use serde_json::{json, Value};

mod commands;

use commands::Failure;

pub const SCHEMA_VERSION: u32 = 1;

/// Wold decompositions, norms and nearly invariant subspaces for finite
/// Blaschke products. Every command prints a JSON report.
#[derive(Debug, Parser)]
#[command(name = "nearshift", version)]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Escalate truncation warnings to errors.
    #[arg(
        long,
        global = true,
        env = "NEARSHIFT_STRICT",
        action = ArgAction::SetTrue,
        value_parser = FalseyValueParser::new()
    )]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Wold decomposition of a series with respect to B.
    Decompose(DecomposeArgs),
    /// D_alpha and Wold-type norms of a series, with the lower bound of T_B.
    Norms(NormsArgs),
    /// Near T_B^-1 invariance of the span of the given series.
    NearCheck(NearCheckArgs),
    /// Factorizations h = q G0 over seeded random elements of M.
    Factorize(FactorizeArgs),
    /// The scenario of the worked example with phi_a.
    #[command(name = "example-sec2")]
    ExampleSec2(ExampleArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// List the verification suites.
    Suites,
}

#[derive(Debug, Args)]
pub struct BlaschkeArg {
    /// Finite Blaschke product as JSON, inline or a path to a file,
    /// e.g. '{"origin_multiplicity":2,"zeros":[]}'.
    #[arg(long)]
    pub blaschke: String,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub b: BlaschkeArg,
    /// Series JSON file: {"degree": D, "coeffs": [[re, im], ...]}.
    #[arg(long)]
    pub input: PathBuf,
    /// Fixed number of levels; adaptive when absent.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Truncate or pad the input to this degree.
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NormsArgs {
    #[command(flatten)]
    pub b: BlaschkeArg,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Radius for alpha < 0; suggested from the zeros when absent.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NearCheckArgs {
    #[command(flatten)]
    pub b: BlaschkeArg,
    /// JSON file with the generators: a list of series or {"generators": [...]}.
    #[arg(long)]
    pub input: PathBuf,
    /// Truncation degree of the ambient H^2; the largest generator degree when absent.
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub guard: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct FactorizeArgs {
    #[command(flatten)]
    pub b: BlaschkeArg,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long)]
    pub s: Option<f64>,
    /// Generators of M; the example-type subspace phi_a (span{B^k e_1} + span{B^i e_2}) when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Real part of a for the example-type subspace.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub a_im: f64,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Number of B^k e_1 generators of the example-type subspace.
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub a_im: f64,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Highest power of z in the polynomial part of M.
    #[arg(long, default_value_t = 32)]
    pub degree: usize,
    /// Number of even generators; degree / 2 + 1 when absent.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Read "k in N" as k >= 1, which drops phi_a from M.
    #[arg(long)]
    pub literal_naturals: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite name, or "all".
    #[arg(long)]
    pub suite: String,
    #[arg(long)]
    pub blaschke: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub trials: Option<usize>,
}

/// What a command hands back before timings are attached.
pub struct Outcome {
    pub config: Value,
    pub report: Value,
    pub pass: bool,
    /// `true` when a failing verdict is still a successful run.
    pub report_only: bool,
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Decompose(a) => commands::decompose(a, cli.strict),
        Command::Norms(a) => commands::norms(a, cli.strict),
        Command::NearCheck(a) => commands::near_check(a),
        Command::Factorize(a) => commands::factorize(a),
        Command::ExampleSec2(a) => commands::example(a),
        Command::Verify(a) => commands::verify(a),
        Command::Suites => Ok(commands::suites()),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Decompose(_) => "decompose",
        Command::Norms(_) => "norms",
        Command::NearCheck(_) => "near-check",
        Command::Factorize(_) => "factorize",
        Command::ExampleSec2(_) => "example-sec2",
        Command::Verify(_) => "verify",
        Command::Suites => "suites",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(f) => {
            eprintln!("nearshift: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command_name(&cli.command),
        "config": outcome.config,
        "strict": cli.strict,
        "pass": outcome.pass,
    });
    if let (Value::Object(dst), Value::Object(src)) = (&mut report, outcome.report) {
        dst.extend(src);
    }
    report["timings"] = json!({ "total_ms": start.elapsed().as_secs_f64() * 1e3 });
    let text = serde_json::to_string_pretty(&report).expect("reports serialize");
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text + "\n") {
                eprintln!("nearshift: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => {
            // A closed pipe is the reader's choice; the verdict still stands.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
        }
    }
    if outcome.pass || outcome.report_only {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
