//! Monte Carlo consensus trials and discrete-event latency simulation.

pub mod raft;
pub mod rng;
pub mod trace;
pub mod trials;

pub use raft::{simulate_raft_latency, FailureSource, Horizon, SimConfig};
pub use trace::{summarize_trace, SimTrace, TraceRecord, TraceSummary};
pub use trials::{run_trial, simulate_consensus_trials, McEstimate, Sampler, TrialOutcome};
