//! Command implementations behind the `flowsched` binary.
//!
//! Every command is a plain function returning an exit code so that tests can
//! drive the same code paths as the binary. Exit codes: 0 pass, 1 verification
//! failure, 2 usage or I/O error.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flowsched::{PolicyKind, Rational, Scalar};

pub mod lowerbound;
pub mod simulate;
pub mod source;
pub mod sweep;
pub mod verify;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError(pub String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<flowsched::Error> for CliError {
    fn from(e: flowsched::Error) -> Self {
        CliError(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn parse_rational(s: &str) -> Result<Rational, String> {
    Rational::parse_ratio(s.trim()).ok_or_else(|| format!("expected N/D, got {s:?}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Alpha,
    Srpt,
    Setf,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Alpha => PolicyKind::AlphaClairvoyant,
            PolicyArg::Srpt => PolicyKind::Srpt,
            PolicyArg::Setf => PolicyKind::Setf,
        }
    }
}

/// Where instances come from: files on disk or a seeded random corpus.
#[derive(Args, Debug, Clone, Default)]
pub struct SourceArgs {
    /// Instance JSON file, or a directory of them.
    #[arg(long, value_name = "PATH", conflicts_with = "corpus")]
    pub instance: Option<PathBuf>,
    /// Generate this many random instances instead of reading files.
    #[arg(long, value_name = "N")]
    pub corpus: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub max_n: usize,
    #[arg(long, default_value_t = 8)]
    pub max_p: u32,
    #[arg(long, default_value_t = 10)]
    pub max_release: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replaces the alpha of every instance. Corpus instances cycle through
    /// 1/2, 2/3, 3/4 when absent.
    #[arg(long, value_name = "N/D", value_parser = parse_rational)]
    pub alpha: Option<Rational>,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[arg(long, value_name = "PATH")]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = PolicyArg::Alpha)]
    pub policy: PolicyArg,
    #[arg(long, value_name = "N/D", value_parser = parse_rational)]
    pub alpha: Option<Rational>,
    /// Stop the run at this time.
    #[arg(long, value_name = "N/D", value_parser = parse_rational)]
    pub horizon: Option<Rational>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Add decimal columns next to the exact ones.
    #[arg(long)]
    pub float: bool,
    /// Cross-check total flow against a time-stepped run at quantum 1/64.
    #[arg(long)]
    pub quantum_oracle: bool,
}

#[derive(Args, Debug, Clone)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Write compare.csv here instead of printing it.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub float: bool,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Check this trace CSV in place of the simulated alpha-clairvoyant run.
    #[arg(long, value_name = "CSV")]
    pub trace_override: Option<PathBuf>,
    /// Skip the discretization-refinement check.
    #[arg(long)]
    pub no_refinement: bool,
    /// Also solve the unrestricted max flow and compare values.
    #[arg(long)]
    pub compare_unrestricted: bool,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Lb1,
    Lb2,
    Rand,
    Rand32,
}

#[derive(Args, Debug, Clone)]
pub struct LowerBoundArgs {
    #[arg(long, value_enum)]
    pub which: Which,
    #[arg(long, value_name = "N/D", value_parser = parse_rational)]
    pub alpha: Rational,
    /// Number of jobs (lb1) or phases (lb2, rand32).
    #[arg(long)]
    pub k: Option<u32>,
    /// Number of seeds for the randomized constructions.
    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Append M unit jobs after the measurement time.
    #[arg(long = "dos-M", value_name = "M")]
    pub dos_m: Option<u32>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub float: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Comma-separated alpha values.
    #[arg(long, value_name = "LIST", value_delimiter = ',', value_parser = parse_rational, required = true)]
    pub grid: Vec<Rational>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub float: bool,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Run one policy on one instance and write trace, events and metrics.
    Simulate(SimulateArgs),
    /// Total flow of every policy against SRPT.
    Compare(CompareArgs),
    /// Check the analysis invariants on alpha-clairvoyant runs.
    Verify(VerifyArgs),
    /// Reproduce a lower-bound construction.
    Lowerbound(LowerBoundArgs),
    /// Empirical alive-count and flow ratios over an alpha grid.
    Sweep(SweepArgs),
}

#[derive(Parser, Debug, Clone)]
#[command(name = "flowsched", version, about = "Exact flow-time scheduling simulator and verifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

pub fn execute(command: &Command) -> CliResult<i32> {
    match command {
        Command::Simulate(a) => simulate::cmd_simulate(a),
        Command::Compare(a) => simulate::cmd_compare(a),
        Command::Verify(a) => verify::cmd_verify(a),
        Command::Lowerbound(a) => lowerbound::cmd_lowerbound(a),
        Command::Sweep(a) => sweep::cmd_sweep(a),
    }
}

/// Parses arguments (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

pub(crate) fn write_file(dir: &std::path::Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub(crate) fn float_str(v: &Rational) -> String {
    format!("{}", Scalar::to_f64(v))
}
