use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("protocol structure has no components")]
    EmptyStructure,
    #[error("component {phase} has r = {r}, which exceeds its position")]
    ROutOfRange { phase: usize, r: usize },
    #[error("component {phase} resolves to M = {m}, outside [1, {n}]")]
    MOutOfRange { phase: usize, m: i64, n: usize },
    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("node {node} is not in the prior activated set")]
    NodeNotInPriorSet { node: usize },
    #[error("n = {n} exceeds the exact enumeration cap of {cap}")]
    NTooLarge { n: usize, cap: usize },
    #[error("instance count must be positive")]
    WNonPositive,
    #[error("structure is not first-order (phase {phase} has r = {r})")]
    NotFirstOrder { phase: usize, r: usize },
    #[error("phase {phase} threshold is {m}, expected n - f = {expected}")]
    MNotNf { phase: usize, m: usize, expected: usize },
    #[error("phase {phase} is not a many-to-many component")]
    NotCGraph { phase: usize },
    #[error("truncation order {t_max} outside [{lo}, {hi}]")]
    TruncationOutOfRange { t_max: usize, lo: usize, hi: usize },
    #[error("invalid tolerance-gain case: {0}")]
    InvalidCase(String),
    #[error("attempt count must be at least 1")]
    KNonPositive,
    #[error("consensus failure rate is 1; latency is unbounded")]
    PfIsOne,
    #[error("queue is unstable (utilization {utilization:.6} >= 1)")]
    UnstableQueue { utilization: f64 },
    #[error("power budget must be positive")]
    Infeasible,
    #[error("trace is empty")]
    EmptyTrace,
    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable code for diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyStructure => "EMPTY_STRUCTURE",
            Error::ROutOfRange { .. } => "R_OUT_OF_RANGE",
            Error::MOutOfRange { .. } => "M_OUT_OF_RANGE",
            Error::UnknownProtocol(_) => "UNKNOWN_PROTOCOL",
            Error::InvalidStructure(_) => "INVALID_STRUCTURE",
            Error::InvalidParams(_) => "INVALID_PARAMS",
            Error::NodeNotInPriorSet { .. } => "NODE_NOT_IN_PRIOR_SET",
            Error::NTooLarge { .. } => "N_TOO_LARGE",
            Error::WNonPositive => "W_NONPOSITIVE",
            Error::NotFirstOrder { .. } => "NOT_FIRST_ORDER",
            Error::MNotNf { .. } => "M_NOT_NF",
            Error::NotCGraph { .. } => "NOT_C_GRAPH",
            Error::TruncationOutOfRange { .. } => "TRUNCATION_OUT_OF_RANGE",
            Error::InvalidCase(_) => "INVALID_CASE",
            Error::KNonPositive => "K_NONPOSITIVE",
            Error::PfIsOne => "PF_IS_ONE",
            Error::UnstableQueue { .. } => "UNSTABLE_QUEUE",
            Error::Infeasible => "INFEASIBLE",
            Error::EmptyTrace => "EMPTY_TRACE",
            Error::Parse(_) => "PARSE",
        }
    }
}
