//! `tqkd`: correlation tables, single sessions, attack experiments,
//! efficiency sweeps and network scenarios.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use tqkd_core::protocols::ProtocolId;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error(transparent)]
    Protocol(#[from] tqkd_core::protocols::ProtocolError),
    #[error(transparent)]
    Adversary(#[from] tqkd_core::adversary::AdversaryError),
    #[error(transparent)]
    Network(#[from] tqkd_core::netsim::NetError),
}

/// Trusted-center quantum key distribution simulator.
#[derive(Debug, Parser)]
#[command(name = "tqkd", version, args_override_self = true)]
#[command(after_help = "Any verb also accepts --config FILE with key=value defaults; flags override them.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the derived correlation tables.
    Tables(TablesArgs),
    /// Run one session and write its transcript.
    Run(RunArgs),
    /// Run an attacked session and compare with the exact prediction.
    Attack(AttackArgs),
    /// Sweep efficiency over protocols and loss values.
    Bench(BenchArgs),
    /// Execute a network scenario file.
    Network(NetworkArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableSelector {
    Bell,
    Mixed,
    Ghz,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Csv,
}

#[derive(Debug, Args)]
struct TablesArgs {
    #[arg(value_enum, default_value = "all")]
    scenario: TableSelector,
    #[arg(long, value_enum, default_value = "text")]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SessionArgs {
    #[arg(long, value_parser = parse_protocol)]
    protocol: ProtocolId,
    #[arg(long, default_value_t = 10_000)]
    num_states: usize,
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    check_fraction: f64,
    /// Abort when the check error rate exceeds this.
    #[arg(long)]
    threshold: Option<f64>,
    /// Secrecy parameter for privacy amplification.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Transcript JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// One-row CSV summary path.
    #[arg(long)]
    summary_csv: Option<PathBuf>,
    /// Hex export of the final key (Alice's copy).
    #[arg(long)]
    key_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AttackKind {
    InterceptResend,
    CheatingCenter,
    Ancilla,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TargetArg {
    Alice,
    Bob,
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[arg(long, value_enum)]
    attack: AttackKind,
    /// Intercepted user.
    #[arg(long, value_enum, default_value = "alice")]
    target: TargetArg,
    /// Eve's bases, e.g. `xy`; defaults to the protocol's own pair.
    #[arg(long)]
    pool: Option<String>,
    /// Basis of a cheating center's measurements.
    #[arg(long, default_value = "x")]
    basis: String,
    #[arg(long, default_value_t = 0.5)]
    coupling: f64,
    /// Report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Transcript JSON path.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated protocols, or `all`.
    #[arg(long, default_value = "all")]
    protocols: String,
    /// Comma-separated loss values.
    #[arg(long, default_value = "0,0.1,0.2,0.3,0.5")]
    loss_grid: String,
    #[arg(long, default_value_t = 10_000)]
    num_states: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    check_fraction: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NetworkArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Aggregate report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-session CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Directory for one transcript JSON per session.
    #[arg(long)]
    transcripts: Option<PathBuf>,
    /// Run sessions one after another instead of in parallel.
    #[arg(long)]
    sequential: bool,
}

fn parse_protocol(s: &str) -> Result<ProtocolId, String> {
    s.parse().map_err(|e: tqkd_core::protocols::ProtocolError| e.to_string())
}

/// Process outcome: 0 success, 1 usage or input error, 2 aborted by the check.
pub enum Status {
    Ok,
    Aborted,
}

fn main() -> ExitCode {
    let args = match config::expand_config(std::env::args().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Tables(a) => commands::tables(a),
        Command::Run(a) => commands::run(a),
        Command::Attack(a) => commands::attack(a),
        Command::Bench(a) => commands::bench(a),
        Command::Network(a) => commands::network(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Aborted) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
