//! Error catalogue shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("masses for {what} sum to {sum}, not 1")]
    NotADistribution { what: String, sum: f64 },

    #[error("joint for state {state} is not exchangeable: entries ({i},{j}) and ({j},{i}) differ by {gap:e}")]
    NotExchangeable {
        state: &'static str,
        i: usize,
        j: usize,
        gap: f64,
    },

    #[error("posteriors at signals {i} and {j} coincide ({value}); signals must be merged first")]
    PosteriorNotInjective { i: usize, j: usize, value: f64 },

    #[error("negative mass {value} at ({i},{j})")]
    NegativeMass { i: usize, j: usize, value: f64 },

    #[error("signal {x} has zero marginal mass{}", state.map(|s| format!(" in state {s}")).unwrap_or_default())]
    ZeroMassSignal { x: usize, state: Option<&'static str> },

    #[error("marginals differ at signal {x}: {left} vs {right}")]
    MarginalMismatch { x: usize, left: f64, right: f64 },

    #[error("transferring {alpha} at pair ({i},{j}) requires off-diagonal mass >= alpha, found {available}")]
    NonnegativityViolated {
        i: usize,
        j: usize,
        alpha: f64,
        available: f64,
    },

    #[error("pmf truncation cannot reach tail mass {target:e} within support cap {cap}")]
    TruncationBudgetExceeded { target: f64, cap: usize },

    #[error("threshold models are not ordered by first-order stochastic dominance at position {index}")]
    NotFOSDOrdered { index: usize },

    #[error("{what} of size {got} exceeds the cap of {cap}")]
    SizeCapExceeded {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    #[error("{op} requires {requirement}")]
    ModelNotSupported {
        op: &'static str,
        requirement: &'static str,
    },

    #[error("conditional undefined: {what} has probability zero")]
    UndefinedConditional { what: String },

    #[error("no indifference root in [0,1]")]
    NoRoot,

    #[error("{0}")]
    DomainError(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("structures are not similarity-comparable: {0}")]
    NotCadComparable(String),

    #[error("premise failed: {0}")]
    PremiseFailed(String),

    #[error("spread-out comparison premise failed: {0}")]
    AssumptionB2Failed(String),

    #[error("parse error: {0}")]
    ParseError(String),

    #[error("validation failed: {}", .0.join("; "))]
    ValidationError(Vec<String>),

    #[error("unknown name {0:?}")]
    UnknownName(String),
}

pub type Result<T> = std::result::Result<T, Error>;
