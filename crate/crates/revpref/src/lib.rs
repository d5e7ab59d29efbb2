//! Rational-agent purchase oracles, revealed-preference learners, and the
//! seeded experiment harness that ties them together.
//!
//! An agent with a hidden valuation buys its optimal bundle whenever it
//! faces a price vector and budget drawn from a known family. The learners
//! here consume those observations and produce hypotheses that predict the
//! agent's future purchases:
//!
//! - [`allpairs`]: pairwise value-ratio bounds for linear valuations.
//! - [`separable`]: discretized derivative-ratio bounds for linearly
//!   separable concave valuations.
//! - [`polytope`]: an interactive cutting-plane learner that samples
//!   hypotheses from a shrinking convex body.
//!
//! The [`harness`] module drives end-to-end experiments: instance
//! generation, training, evaluation, and sample-complexity sweeps, all
//! deterministic under a fixed seed.

pub mod agent;
pub mod allpairs;
pub mod bounds;
pub mod error;
pub mod harness;
pub mod polytope;
pub mod separable;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    Bundle, Example, ExampleDistribution, LinearValuation, Observation, PriceVector,
    SeparableConcaveValuation, Valuation,
};
