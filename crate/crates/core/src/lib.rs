//! Consensus reliability under probabilistic node and link failures.
//!
//! Protocols are sequences of communication components; the crate computes
//! exact and approximate failure rates, latency under reattempts, wireless
//! power allocations, and validates all of it by simulation.

pub mod approx;
pub mod error;
pub mod exact;
pub mod latency;
pub mod math;
pub mod params;
pub mod protocol;
pub mod sim;
pub mod wireless;

pub use approx::{
    c_graph_avg_activation, c_graph_avg_activation_iid, hotstuff_variant_ratio,
    iid_first_order_failure, joint_reliability, joint_vector, overall_joint_failure_rate_iid,
    power_series_failure, reliability_gain, tolerance_gain, tree_decomposed_failure, GainReport,
    JointReliabilityVector, NForm, OverallJointFailure, PowerSeriesExpansion,
};
pub use error::{Error, Result};
pub use exact::{
    activation_probability, exact_reliability, exact_reliability_iid, multi_instance_reliability,
    node_only_reliability, transition_probability, Method, MultiInstanceMode, NodeSet,
    ReliabilityResult, Term,
};
pub use latency::{
    expected_transmission_latency, queuing_latency, transmission_latency_pmf, LatencyParams,
    LatencyReport,
};
pub use math::Prob;
pub use params::ClusterParams;
pub use protocol::{
    builtin_protocol, validate_structure, Builtin, Component, DependenceTree, Family, GraphKind,
    ProtocolStructure, ResolvedStructure, ThresholdSpec,
};
pub use wireless::{
    db_to_linear, equal_split_allocation, node_count_sweep, optimize_power, optimize_power_seeded,
    raft_failure_from_losses, rayleigh_link_loss, PowerAllocation, WirelessScenario,
};
