use thiserror::Error;

/// Errors raised while building games or running the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability vector for {context}: {reason}")]
    InvalidProbability { context: String, reason: String },

    #[error("unknown {kind} label `{label}`")]
    UnknownLabel { kind: &'static str, label: String },

    #[error("duplicate {kind} label `{label}`")]
    DuplicateLabel { kind: &'static str, label: String },

    #[error("malformed input at `{key}`: {reason}")]
    Input { key: String, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no intervention action is declared as the no-intervention action")]
    NoInterventionAction,

    #[error(
        "no-intervention action is not strictly preferred by the manager at \
         (a0={action}, a=({profile}), y={signal})"
    )]
    NoInterventionNotPreferred { action: String, profile: String, signal: String },

    #[error("the operation requires {expected} players, game has {actual}")]
    PlayerCount { expected: usize, actual: usize },

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("no sustainable profile found: {0}")]
    NoSustainableProfile(String),

    #[error("cannot write {path}: {reason}")]
    Output { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
