//! `consensus-reliab`: reliability, latency and power-allocation tables for
//! consensus protocols over unreliable nodes and links.

mod commands;
mod error;
mod grid;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult, EXIT_INPUT};
use crate::grid::Grid;
use crate::output::{emit, Format};

pub const THREADS_ENV: &str = "CONSENSUS_RELIAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "consensus-reliab", version, about)]
pub struct Cli {
    /// Write results here instead of stdout (atomic replace).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed for simulations and optimizer restarts.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact consensus reliability.
    Reliability(ReliabilityArgs),
    /// Approximate failure rates.
    Approx(ApproxArgs),
    /// Reliability and tolerance gain laws.
    Gains(GainsArgs),
    /// Expected transmission and queuing latency.
    Latency(LatencyArgs),
    /// Wireless transmit power allocation for RAFT.
    Optimize(OptimizeArgs),
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Failure rates over parameter grids.
    Sweep(SweepArgs),
}

/// Protocol selection and cluster parameters shared by several commands.
#[derive(Debug, Clone, Args, Default)]
pub struct ClusterArgs {
    /// Built-in protocol name, or `all` for raft, paxos, pbft and hotstuff.
    #[arg(long, conflicts_with = "protocol_file")]
    pub protocol: Option<String>,
    /// Protocol structure as JSON.
    #[arg(long)]
    pub protocol_file: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Fault tolerance; defaults to the protocol family's rule.
    #[arg(long)]
    pub f: Option<usize>,
    #[arg(long, conflicts_with = "p_node_fail")]
    pub p_node: Option<f64>,
    #[arg(long)]
    pub p_node_fail: Option<f64>,
    #[arg(long, conflicts_with = "p_link_fail")]
    pub p_link: Option<f64>,
    #[arg(long)]
    pub p_link_fail: Option<f64>,
    /// Heterogeneous cluster parameters as JSON.
    #[arg(long, conflicts_with_all = ["p_node", "p_node_fail", "p_link", "p_link_fail"])]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExactMethod {
    Exact,
    ExactIid,
    NodeOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MultiMode {
    Exact,
    Approx,
}

#[derive(Debug, Args)]
pub struct ReliabilityArgs {
    #[command(flatten)]
    pub cluster: ClusterArgs,
    #[arg(long, value_enum, default_value_t = ExactMethod::Exact)]
    pub method: ExactMethod,
    /// Evaluate this many consecutive instances sharing one fault set.
    #[arg(long)]
    pub instances: Option<u64>,
    #[arg(long, value_enum, default_value_t = MultiMode::Exact, requires = "instances")]
    pub multi_mode: MultiMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApproxMethod {
    Joint,
    PowerSeries,
    Tree,
    IidFirstOrder,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub cluster: ClusterArgs,
    #[arg(long, value_enum, default_value_t = ApproxMethod::Tree)]
    pub method: ApproxMethod,
    /// Power-series truncation order; defaults to n.
    #[arg(long)]
    pub t_max: Option<usize>,
    /// Overall joint failure rate for `iid-first-order`; computed when omitted.
    #[arg(long)]
    pub p_jfr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GainsArgs {
    #[command(flatten)]
    pub cluster: ClusterArgs,
    /// Restrict tolerance rows to one family (cft or bft).
    #[arg(long)]
    pub family: Option<String>,
    /// Overall joint failure rate; computed from the protocol when omitted.
    #[arg(long)]
    pub p_jfr: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct AttemptLatency {
    /// Latency of one consensus attempt, seconds.
    #[arg(long, conflicts_with = "link_latency")]
    pub l_c: Option<f64>,
    /// One-way link latency, seconds; an attempt takes two.
    #[arg(long)]
    pub link_latency: Option<f64>,
    /// Reattempt timeout, seconds; defaults to the attempt latency.
    #[arg(long)]
    pub timeout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LatencyArgs {
    #[command(flatten)]
    pub attempt: AttemptLatency,
    /// Per-attempt failure rate (value, list or grid).
    #[arg(long)]
    pub pf: Grid,
    /// Arrivals per second (value, list or grid).
    #[arg(long)]
    pub arrival: Grid,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Scenario JSON with gains and threshold in dB, powers in watts.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Override the scenario's total power budget (value, list or grid).
    #[arg(long)]
    pub p_total: Option<Grid>,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Monte Carlo consensus trials.
    Consensus(SimConsensusArgs),
    /// Discrete-event RAFT log replication trace.
    Latency(SimLatencyArgs),
}

#[derive(Debug, Args)]
pub struct SimConsensusArgs {
    #[command(flatten)]
    pub cluster: ClusterArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
}

#[derive(Debug, Args)]
pub struct SimLatencyArgs {
    #[command(flatten)]
    pub attempt: AttemptLatency,
    #[arg(long)]
    pub arrival: f64,
    /// Fixed per-attempt failure rate; otherwise every attempt is a consensus trial.
    #[arg(long, conflicts_with_all = ["protocol", "protocol_file", "params"])]
    pub pf: Option<f64>,
    #[command(flatten)]
    pub cluster: ClusterArgs,
    #[arg(long, conflicts_with = "duration", required_unless_present = "duration")]
    pub instances: Option<usize>,
    /// Simulated seconds of arrivals.
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value = "all", conflicts_with = "protocol_file")]
    pub protocol: String,
    #[arg(long)]
    pub protocol_file: Option<PathBuf>,
    /// Node counts (value, list or lin grid).
    #[arg(long)]
    pub n: Grid,
    /// Fault tolerance for every n; defaults to the family rule.
    #[arg(long)]
    pub f: Option<usize>,
    #[arg(long, conflicts_with = "p_node_fail")]
    pub p_node: Option<Grid>,
    #[arg(long)]
    pub p_node_fail: Option<Grid>,
    #[arg(long, conflicts_with = "p_link_fail")]
    pub p_link: Option<Grid>,
    #[arg(long)]
    pub p_link_fail: Option<Grid>,
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} = `{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let content = commands::dispatch(&cli)?;
    emit(&content, cli.output.as_deref()).map_err(|e| CliError::output(cli.output.as_deref(), e))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion)
                || e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
                    && std::env::args().len() <= 1
            {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or_default();
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", CliError::usage(first).record());
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit as u8)
        }
    }
}
