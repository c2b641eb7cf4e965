//! Decoupled feedback: in each state the agent may see the reward of a
//! different state, through that state's (possibly corrupt) view.

mod agent;
pub mod cirl;
mod explore;
pub mod fixtures;
mod reconstruct;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crmdp::{Crmdp, CrmdpError, REWARD_TOL};

pub use agent::{run_reconstruct_then_plan, ReconstructThenPlan, RtpPhase, RtpRun};
pub use explore::{explore, exploration_bound, ExplorationBound, ExplorationRecord};
pub use reconstruct::{
    consistent_reward_functions, reconstruct, Method, Reconstruction, TargetOutcome, Unresolved,
};

/// `(observer, target, observed value)`.
pub type ObservationTriple = (usize, usize, f64);

#[derive(Debug, Error)]
pub enum DecoupledError {
    #[error("observation table must be {expected}x{expected}, got a row of length {got}")]
    Shape { expected: usize, got: usize },
    #[error("state {0} is out of range")]
    State(usize),
    #[error("observer {observer} reports {value} for target {target}, which is not in the reward set")]
    Reward { observer: usize, target: usize, value: f64 },
    #[error("observer {observer} gave two different values for target {target}")]
    ObserverConflict { observer: usize, target: usize },
    #[error("model violation: safe observers disagree on target {target}: {values:?}")]
    SafeConflict { target: usize, values: Vec<f64> },
    #[error("model violation: no strict majority among {observers} observers of target {target}")]
    NoMajority { target: usize, observers: usize },
    #[error("exploration hit the step limit {limit} with {missing} edges unobserved (first missing: {first:?})")]
    StepLimit { limit: u64, missing: usize, first: Option<(usize, usize)> },
    #[error("trajectory step {step} has probability zero under both hypotheses")]
    ZeroLikelihood { step: usize },
    #[error("invalid prior: {0}")]
    Prior(f64),
    #[error(transparent)]
    Model(#[from] CrmdpError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

/// A CRMDP whose reward feedback is a family `R̂_s(s')`: in state `s` the agent
/// sees target `s'` (drawn uniformly each step) through observer `s`'s view.
/// `None` is the blank symbol: `s'` cannot be observed from `s`.
#[derive(Debug, Clone)]
pub struct DecoupledCrmdp {
    base: Crmdp,
    observed: Vec<Vec<Option<f64>>>,
}

impl DecoupledCrmdp {
    /// `observed[s][s']` must be blank or a member of the base reward set.
    /// The base model's own corruption function is ignored.
    pub fn new(base: Crmdp, observed: Vec<Vec<Option<f64>>>) -> Result<Self, DecoupledError> {
        let n = base.n_states();
        if observed.len() != n {
            return Err(DecoupledError::Shape { expected: n, got: observed.len() });
        }
        let mut snapped = observed;
        for (observer, row) in snapped.iter_mut().enumerate() {
            if row.len() != n {
                return Err(DecoupledError::Shape { expected: n, got: row.len() });
            }
            for (target, cell) in row.iter_mut().enumerate() {
                if let Some(value) = *cell {
                    *cell = Some(base.snap_reward(value).ok_or(DecoupledError::Reward { observer, target, value })?);
                }
            }
        }
        Ok(Self { base, observed: snapped })
    }

    /// Every state observes itself faithfully and nothing else.
    pub fn self_observing(base: Crmdp) -> Self {
        let n = base.n_states();
        let observed = (0..n)
            .map(|s| (0..n).map(|t| (s == t).then(|| base.true_reward(t))).collect())
            .collect();
        Self { base, observed }
    }

    pub fn base(&self) -> &Crmdp {
        &self.base
    }

    pub fn n_states(&self) -> usize {
        self.base.n_states()
    }

    pub fn observe(&self, observer: usize, target: usize) -> Option<f64> {
        self.observed[observer][target]
    }

    pub fn observed_family(&self) -> &[Vec<Option<f64>>] {
        &self.observed
    }

    /// Observers that report a wrong value for at least one target.
    pub fn corrupt_observers(&self) -> BTreeSet<usize> {
        (0..self.n_states())
            .filter(|&s| {
                self.observed[s].iter().enumerate().any(|(t, v)| {
                    v.is_some_and(|v| (v - self.base.true_reward(t)).abs() > REWARD_TOL)
                })
            })
            .collect()
    }

    /// The graph of non-blank pairs with the given safe set and budget.
    pub fn graph(&self, safe: BTreeSet<usize>, q: usize) -> ObservationGraph {
        let n = self.n_states();
        let edges = (0..n)
            .flat_map(|s| (0..n).filter(move |&t| self.observed[s][t].is_some()).map(move |t| (s, t)))
            .collect();
        ObservationGraph { n_states: n, edges, safe, q }
    }
}

/// Edge `s → s'` whenever `s'` is observable from `s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationGraph {
    pub n_states: usize,
    pub edges: BTreeSet<(usize, usize)>,
    pub safe: BTreeSet<usize>,
    pub q: usize,
}

impl ObservationGraph {
    pub fn new(
        n_states: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        safe: impl IntoIterator<Item = usize>,
        q: usize,
    ) -> Result<Self, DecoupledError> {
        let g = Self { n_states, edges: edges.into_iter().collect(), safe: safe.into_iter().collect(), q };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<(), DecoupledError> {
        let bad = self
            .edges
            .iter()
            .flat_map(|&(s, t)| [s, t])
            .chain(self.safe.iter().copied())
            .find(|&s| s >= self.n_states);
        match bad {
            Some(s) => Err(DecoupledError::State(s)),
            None => Ok(()),
        }
    }

    /// `S_obs(s') = {s : s → s'}`.
    pub fn observers(&self, target: usize) -> Vec<usize> {
        self.edges.iter().filter(|&&(_, t)| t == target).map(|&(s, _)| s).collect()
    }

    pub fn from_json(text: &str) -> Result<Self, DecoupledError> {
        let g: Self = serde_json::from_str(text)?;
        g.check()?;
        Ok(g)
    }

    pub fn to_json(&self) -> Result<String, DecoupledError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DecoupledError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Learnability {
    pub per_target: Vec<bool>,
    pub overall: bool,
}

impl Learnability {
    pub fn failing_targets(&self) -> Vec<usize> {
        (0..self.per_target.len()).filter(|&t| !self.per_target[t]).collect()
    }
}

/// A target's reward is learnable when a safe state observes it or more than
/// `2q` states do.
pub fn learnability_check(g: &ObservationGraph) -> Learnability {
    let per_target: Vec<bool> = (0..g.n_states)
        .map(|t| {
            let observers = g.observers(t);
            observers.iter().any(|s| g.safe.contains(s)) || observers.len() > 2 * g.q
        })
        .collect();
    let overall = per_target.iter().all(|&ok| ok);
    Learnability { per_target, overall }
}
