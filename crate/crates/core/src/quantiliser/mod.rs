//! Quantilising agents: commit to a uniformly random choice among the
//! options whose observed value clears a threshold, instead of the maximum.

mod general;
mod simple;
mod stationary;

use thiserror::Error;

pub use general::{
    general_bound, plan_general, policy_from_index, Candidate, GeneralPlan, GeneralQuantiliser,
    DEFAULT_POLICY_CAP, EXACT_PACKING_LIMIT,
};
pub use simple::{quantile_bound, quantile_set, QuantilePhase, SimpleQuantiliser};
pub use stationary::{balance_residual, recurrent_classes, stationary_distribution, value_supports, ValueSupport};

#[derive(Debug, Error)]
pub enum QuantileError {
    #[error("delta must lie in [0, 1), got {0}")]
    Delta(f64),
    #[error("policy does not match the model's shape")]
    BadPolicy,
    #[error("chain is not unichain: recurrent classes {first:?} and {second:?}")]
    Multichain { first: Vec<usize>, second: Vec<usize> },
    #[error("stationary equations are singular")]
    Singular,
    #[error("stationary solve residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("{count} stationary policies exceed the cap of {cap}")]
    PolicyCap { count: u128, cap: u64 },
    #[error("general quantiliser supports at most 128 states, got {0}")]
    TooManyStates(usize),
    #[error("failed because delta {delta} is too high: no policy has a non-empty value-supporting set ({skipped_multichain} multichain policies skipped)")]
    DeltaTooHigh { delta: f64, skipped_multichain: u64 },
}
