use thiserror::Error;

/// Errors raised by model construction, closure and measurement.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown state space `{0}`")]
    UnknownSpace(String),

    #[error("state `{state}` is not a member of space `{space}`")]
    UnknownState { space: String, state: String },

    #[error("negative scale {scale} for part `{part}`")]
    NegativeScale { part: String, scale: String },

    #[error("fractional scale {scale} on generic space `{space}`; only 0 or 1 are allowed")]
    FractionalScale { space: String, scale: String },

    #[error("invalid number `{0}`")]
    InvalidNumber(String),

    #[error("space `{0}` is not normal-analytic")]
    NotAnalytic(String),

    #[error("unequal amount of matter in space `{space}`: {lhs} vs {rhs}")]
    MatterMismatch { space: String, lhs: String, rhs: String },

    #[error("composite `{0}` is outside the model universe; add it to the universe and close again")]
    OutsideUniverse(String),

    #[error("universe has {size} composites, exceeding the budget of {budget}")]
    UniverseTooLarge { size: usize, budget: usize },

    #[error("invalid reference pair: S(X0) = {s0} is not strictly below S(X1) = {s1}")]
    InvalidReferencePair { s0: f64, s1: f64 },

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("could not bracket the entropy of `{0}` within the doubling budget")]
    Unbracketed(String),

    #[error("entropy range of `{space}` has a gap of {gap} above the bound {bound}")]
    DisconnectedRange { space: String, gap: f64, bound: f64 },

    #[error("invalid state set for `{space}`: {reason}")]
    InvalidStateSet { space: String, reason: String },

    #[error("bracketing fails at `{state}`: no {side} bound exists")]
    BracketMissing { state: String, side: Side },

    #[error("comparability fails at `{state}`: gap {gap} exceeds {bound}")]
    NotComparable { state: String, gap: f64, bound: f64 },

    #[error("chart `{0}` is not declared in the atlas")]
    UnknownChart(String),

    #[error("chart `{0}` has an empty region")]
    EmptyChart(String),

    #[error("declared neighbours `{a}` and `{b}` share no state")]
    EmptyOverlap { a: String, b: String },

    #[error("atlas has {count} inconsistent loop(s); largest mismatch {worst}")]
    InconsistentLoops { count: usize, worst: f64 },

    #[error("glued values disagree at `{state}` by {spread}")]
    GlueMismatch { state: String, spread: f64 },

    #[error("linear solve for chart offsets failed")]
    SingularCalibration,
}

/// Which half of a bracketing or double variational bound is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Lower => f.write_str("lower"),
            Side::Upper => f.write_str("upper"),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
