use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bundle cost {cost} exceeds budget {budget}")]
    OverBudget { cost: f64, budget: f64 },

    /// The stored ratio bounds admit no positive solution. Signals corrupted
    /// or adversarial observations.
    #[error("ratio bounds admit no positive solution")]
    Inconsistent,

    /// Chord through the polytope collapsed below tolerance.
    #[error("polytope chord degenerate: body has collapsed below tolerance")]
    EmptyChord,

    /// A reject told us nothing the proposing hypothesis violates; the
    /// feedback oracle broke its contract.
    #[error("reject feedback contains no pair violated by the proposing hypothesis")]
    FeedbackWitness,

    #[error("model file malformed: {0}")]
    ModelFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
