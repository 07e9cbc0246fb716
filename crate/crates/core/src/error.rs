use thiserror::Error;

use crate::fixpoint::FixpointResult;
use crate::verify::VerificationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("prior not normalized (sum = {0})")]
    PriorNotNormalized(f64),

    #[error("prior must be strictly positive (state {state} has mass {mass})")]
    NonPositivePrior { state: usize, mass: f64 },

    #[error("invalid type distribution: {0}")]
    InvalidTypes(String),

    #[error("zero type mass requires robustness mode")]
    ZeroTypeMass,

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("impossible evidence: likelihood is zero in every state")]
    ImpossibleEvidence,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("branch unavailable: the state branch needs k >= 2")]
    BranchUnavailable,

    #[error("infeasible split in state {state}: gamma * q_low = {required} exceeds prior mass {available}")]
    InfeasibleSplit {
        state: usize,
        required: f64,
        available: f64,
    },

    #[error("bad barycenter: targets miss the prior by {0:e}")]
    BadBarycenter(f64),

    #[error("null event: conditioning event has zero probability")]
    NullEvent,

    #[error("sender utility is state dependent (action {action} varies by {spread:e})")]
    NotTransparent { action: usize, spread: f64 },

    #[error("no punishing action exists with respect to the benchmark support")]
    NoPunishingAction,

    #[error("fixed-point iteration did not converge (best residual {residual:e})")]
    NoConvergence {
        residual: f64,
        best: Box<FixpointResult>,
    },

    #[error("verification failed: {}", .0.failed_checks().join(", "))]
    VerificationFailed(Box<VerificationReport>),

    #[error("construction check failed: {0}")]
    ConstructionCheck(String),
}
