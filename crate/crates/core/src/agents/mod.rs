//! Agents acting on observed histories.
//!
//! An [`Agent`] is fed one [`Observation`] per time step and answers with an
//! action index. The observation carries the current state and the observed
//! reward received there; there is no channel through which an agent could
//! read the true reward.

mod belief;
mod etc;
mod qlearn;
mod scripted;

use thiserror::Error;

pub use belief::BeliefState;
pub use etc::{EtcAgent, EtcMode, EtcPhase};
pub use qlearn::{
    epsilon_greedy_act, q_learning_step, softmax_act, softmax_probs, Exploration, QLearningAgent, QTable,
};
pub use scripted::{FixedPolicyAgent, RandomAgent};

/// What the agent sees at each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub state: usize,
    pub observed_reward: f64,
}

pub trait Agent: Send {
    /// Clears all learned state and reseeds the agent's own RNG stream.
    fn reset(&mut self, seed: u64);
    /// Chooses the next action. Deterministic given internal state and RNG.
    fn act(&mut self, obs: Observation) -> usize;
    /// Diagnostic record for logs and CSV columns.
    fn snapshot(&self) -> serde_json::Value;
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("hypothesis class is empty")]
    EmptyClass,
    #[error("class members disagree on {0}")]
    ClassMismatch(&'static str),
    #[error("prior must have one positive weight per member")]
    BadPrior,
    #[error("observed reward {reward} in state {state} is inconsistent with every member")]
    Inconsistent { state: usize, reward: f64 },
    #[error(transparent)]
    Model(#[from] crate::crmdp::CrmdpError),
}

/// Lowest index attaining the maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Lowest index within `tol` of the maximum.
pub(crate) fn argmax_tol(values: &[f64], tol: f64) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().position(|&v| v >= max - tol).unwrap_or(0)
}
