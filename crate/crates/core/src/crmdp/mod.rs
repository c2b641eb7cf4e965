//! Corrupt-reward MDPs.
//!
//! A [`Crmdp`] is a finite MDP whose reward depends on the state only, plus a
//! per-state corruption function `C_s` mapping the true reward of a state to
//! the reward the agent observes there. Agents only ever see the observed
//! reward `R̂(s) = C_s(Ṙ(s))`; true rewards are used for regret.
//!
//! Rewards are `f64` values in `[0, 1]`. Set membership is checked at
//! [`REWARD_TOL`] and values are snapped to the canonical member of the
//! reward set, so the exact identities the mirror construction relies on hold
//! structurally rather than numerically.

mod assumptions;
mod json;
mod mirror;
mod planning;
mod regret;
mod simulate;

use std::collections::VecDeque;

use rand::Rng;
use thiserror::Error;

pub use assumptions::{validate_assumptions, AssumptionReport};
pub use json::CrmdpDocument;
pub use mirror::mirror;
pub use planning::{
    average_reward_optimum, diameter, finite_horizon_values, hitting_times, informed_optimum,
    informed_value, navigation_policy, AverageRewardSolution, Navigation, OptimumEstimate,
    DEFAULT_DP_BUDGET,
};
pub use regret::{regret, regret_against, RegretReport};
pub(crate) use simulate::sample_index;
pub use simulate::{cumulative_returns, run_episode, simulate, PolicyKind, Step, Trajectory};

/// Tolerance for reward-set membership and reward comparisons.
pub const REWARD_TOL: f64 = 1e-9;
/// Tolerance for probability rows summing to one.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CrmdpError {
    #[error("model needs at least one state and one action (got {states} states, {actions} actions)")]
    Empty { states: usize, actions: usize },
    #[error("expected {expected} {what}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("transition row (state {state}, action {action}) sums to {sum}")]
    RowSum { state: usize, action: usize, sum: f64 },
    #[error("transition (state {state}, action {action}) has invalid entry ({target}, {prob})")]
    BadEntry {
        state: usize,
        action: usize,
        target: usize,
        prob: f64,
    },
    #[error("reward {0} is outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("true reward {reward} of state {state} is not in the reward set")]
    TrueRewardNotInSet { state: usize, reward: f64 },
    #[error("corruption pair (state {state}: {from} -> {to}) is outside the reward set")]
    CorruptionNotInSet { state: usize, from: f64, to: f64 },
    #[error("state {0} is out of range")]
    StateOutOfRange(usize),
    #[error("state {to} is unreachable from state {from}; the model is not communicating")]
    NotCommunicating { from: usize, to: usize },
    #[error("reward set is not closed under r -> 1 - r: {0} has no mirror image")]
    NotMirrorClosed(f64),
    #[error("finite-horizon planning needs {needed} row evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("at least one run is required")]
    NoRuns,
    #[error("unsupported document version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type Result<T, E = CrmdpError> = std::result::Result<T, E>;

/// Transition structure `T(s' | s, a)` of a finite MDP, stored sparsely.
///
/// This is everything an agent may know about an environment besides the
/// rewards it observes; it carries no reward information.
#[derive(Debug, Clone, PartialEq)]
pub struct Dynamics {
    n_states: usize,
    n_actions: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl Dynamics {
    /// Builds dynamics from sparse rows indexed by `state * n_actions + action`.
    /// Zero-probability entries are dropped and duplicate targets merged.
    pub fn new(n_states: usize, n_actions: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(CrmdpError::Empty {
                states: n_states,
                actions: n_actions,
            });
        }
        if rows.len() != n_states * n_actions {
            return Err(CrmdpError::Shape {
                what: "transition rows",
                expected: n_states * n_actions,
                got: rows.len(),
            });
        }
        let mut clean = Vec::with_capacity(rows.len());
        for (idx, row) in rows.into_iter().enumerate() {
            let (state, action) = (idx / n_actions, idx % n_actions);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (target, prob) in row {
                if target >= n_states || !(0.0..=1.0).contains(&prob) || prob.is_nan() {
                    return Err(CrmdpError::BadEntry {
                        state,
                        action,
                        target,
                        prob,
                    });
                }
                if prob == 0.0 {
                    continue;
                }
                match merged.iter_mut().find(|(t, _)| *t == target) {
                    Some(entry) => entry.1 += prob,
                    None => merged.push((target, prob)),
                }
            }
            merged.sort_by_key(|&(t, _)| t);
            let sum: f64 = merged.iter().map(|&(_, p)| p).sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(CrmdpError::RowSum { state, action, sum });
            }
            clean.push(merged);
        }
        Ok(Self {
            n_states,
            n_actions,
            rows: clean,
        })
    }

    /// Builds dynamics from a dense `[state][action][next_state]` table.
    pub fn from_dense(table: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n_states = table.len();
        let n_actions = table.first().map_or(0, Vec::len);
        let mut rows = Vec::with_capacity(n_states * n_actions);
        for per_state in table {
            if per_state.len() != n_actions {
                return Err(CrmdpError::Shape {
                    what: "actions per state",
                    expected: n_actions,
                    got: per_state.len(),
                });
            }
            for dist in per_state {
                if dist.len() != n_states {
                    return Err(CrmdpError::Shape {
                        what: "next-state probabilities",
                        expected: n_states,
                        got: dist.len(),
                    });
                }
                rows.push(dist.iter().copied().enumerate().collect());
            }
        }
        Self::new(n_states, n_actions, rows)
    }

    /// Deterministic dynamics from a successor function.
    pub fn deterministic(
        n_states: usize,
        n_actions: usize,
        next: impl Fn(usize, usize) -> usize,
    ) -> Result<Self> {
        let rows = (0..n_states)
            .flat_map(|s| (0..n_actions).map(move |a| (s, a)))
            .map(|(s, a)| vec![(next(s, a), 1.0)])
            .collect();
        Self::new(n_states, n_actions, rows)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Non-zero entries of `T(· | state, action)`, sorted by target.
    pub fn row(&self, state: usize, action: usize) -> &[(usize, f64)] {
        &self.rows[state * self.n_actions + action]
    }

    pub fn prob(&self, state: usize, action: usize, next: usize) -> f64 {
        self.row(state, action)
            .iter()
            .find(|&&(t, _)| t == next)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Total number of stored non-zero entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> usize {
        let row = self.row(state, action);
        if let [(only, _)] = row {
            return *only;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(target, prob) in row {
            acc += prob;
            if u < acc {
                return target;
            }
        }
        row.last().map(|&(t, _)| t).unwrap_or(state)
    }

    /// `Σ_{s'} T(s' | s, a) · values[s']`.
    pub fn expect(&self, state: usize, action: usize, values: &[f64]) -> f64 {
        self.row(state, action)
            .iter()
            .map(|&(t, p)| p * values[t])
            .sum()
    }

    /// Lowest-index action with `T(s | s, a) = 1`, if any.
    pub fn stay_action(&self, state: usize) -> Option<usize> {
        (0..self.n_actions).find(|&a| matches!(self.row(state, a), [(t, p)] if *t == state && (*p - 1.0).abs() <= PROB_TOL))
    }

    /// States reachable from `state` under some action sequence (including itself).
    pub fn reachable_from(&self, state: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n_states];
        let mut queue = VecDeque::from([state]);
        seen[state] = true;
        while let Some(s) = queue.pop_front() {
            for a in 0..self.n_actions {
                for &(t, _) in self.row(s, a) {
                    if !seen[t] {
                        seen[t] = true;
                        queue.push_back(t);
                    }
                }
            }
        }
        seen
    }

    /// First `(from, to)` pair (in index order) with `to` unreachable from `from`.
    pub fn unreachable_pair(&self) -> Option<(usize, usize)> {
        (0..self.n_states).find_map(|from| {
            self.reachable_from(from)
                .iter()
                .position(|&r| !r)
                .map(|to| (from, to))
        })
    }

    pub fn is_communicating(&self) -> bool {
        self.unreachable_pair().is_none()
    }

    /// Transition matrix of a stationary deterministic policy as sparse rows.
    pub fn policy_rows(&self, policy: &[usize]) -> Vec<&[(usize, f64)]> {
        policy
            .iter()
            .enumerate()
            .map(|(s, &a)| self.row(s, a))
            .collect()
    }
}

/// Per-state corruption functions, stored as the explicit non-identity pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corruption {
    pairs: Vec<Vec<(f64, f64)>>,
}

impl Corruption {
    pub fn identity(n_states: usize) -> Self {
        Self {
            pairs: vec![Vec::new(); n_states],
        }
    }

    /// `C_s(r)`: the listed output for `r`, or `r` itself.
    pub fn apply(&self, state: usize, reward: f64) -> f64 {
        self.pairs[state]
            .iter()
            .find(|(from, _)| (from - reward).abs() <= REWARD_TOL)
            .map_or(reward, |&(_, to)| to)
    }

    /// Explicit non-identity pairs of `C_s`.
    pub fn pairs(&self, state: usize) -> &[(f64, f64)] {
        &self.pairs[state]
    }

    /// `C_s` differs from the identity somewhere on the reward set.
    pub fn is_corrupt(&self, state: usize) -> bool {
        !self.pairs[state].is_empty()
    }
}

/// A corrupt reward MDP `⟨S, A, R, T, Ṙ, C⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Crmdp {
    dynamics: Dynamics,
    rewards: Vec<f64>,
    true_reward: Vec<f64>,
    corruption: Corruption,
    observed: Vec<f64>,
}

impl Crmdp {
    /// Builds a CRMDP.
    ///
    /// `rewards` is the reward set `R`; when `None` it is taken to be the set
    /// of values appearing in `true_reward` and `corruption_pairs`. Corruption
    /// pairs `(state, r_in, r_out)` override the identity; pairs with
    /// `r_in == r_out` are dropped.
    pub fn new(
        dynamics: Dynamics,
        rewards: Option<Vec<f64>>,
        true_reward: Vec<f64>,
        corruption_pairs: &[(usize, f64, f64)],
    ) -> Result<Self> {
        let n = dynamics.n_states();
        if true_reward.len() != n {
            return Err(CrmdpError::Shape {
                what: "true rewards",
                expected: n,
                got: true_reward.len(),
            });
        }
        let raw: Vec<f64> = match rewards {
            Some(r) => r,
            None => true_reward
                .iter()
                .copied()
                .chain(corruption_pairs.iter().flat_map(|&(_, a, b)| [a, b]))
                .collect(),
        };
        let rewards = canonical_reward_set(raw)?;
        let snap = |r: f64| snap_to(&rewards, r);

        let true_reward = true_reward
            .into_iter()
            .enumerate()
            .map(|(state, reward)| snap(reward).ok_or(CrmdpError::TrueRewardNotInSet { state, reward }))
            .collect::<Result<Vec<_>>>()?;

        let mut corruption = Corruption::identity(n);
        for &(state, from, to) in corruption_pairs {
            if state >= n {
                return Err(CrmdpError::StateOutOfRange(state));
            }
            let (Some(f), Some(t)) = (snap(from), snap(to)) else {
                return Err(CrmdpError::CorruptionNotInSet { state, from, to });
            };
            let entry = &mut corruption.pairs[state];
            entry.retain(|&(existing, _)| existing != f);
            if f != t {
                entry.push((f, t));
            }
        }
        for entry in &mut corruption.pairs {
            entry.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let observed = (0..n)
            .map(|s| corruption.apply(s, true_reward[s]))
            .collect();
        Ok(Self {
            dynamics,
            rewards,
            true_reward,
            corruption,
            observed,
        })
    }

    /// A CRMDP with identity corruption everywhere.
    pub fn uncorrupted(dynamics: Dynamics, true_reward: Vec<f64>) -> Result<Self> {
        Self::new(dynamics, None, true_reward, &[])
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn n_states(&self) -> usize {
        self.dynamics.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.dynamics.n_actions
    }

    /// The reward set `R`, ascending.
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn true_reward(&self, state: usize) -> f64 {
        self.true_reward[state]
    }

    pub fn true_rewards(&self) -> &[f64] {
        &self.true_reward
    }

    pub fn corruption(&self) -> &Corruption {
        &self.corruption
    }

    /// `R̂(s) = C_s(Ṙ(s))`.
    pub fn observed_reward(&self, state: usize) -> f64 {
        self.observed[state]
    }

    pub fn observed_rewards(&self) -> &[f64] {
        &self.observed
    }

    pub fn observed_view(&self) -> ObservedRewardView<'_> {
        ObservedRewardView { source: self }
    }

    /// The observed MDP `⟨S, A, R, T, R̂⟩`, detached from the true rewards.
    pub fn observed_mdp(&self) -> ObservedMdp {
        ObservedMdp {
            dynamics: self.dynamics.clone(),
            observed_reward: self.observed.clone(),
        }
    }

    /// Canonical member of `R` within [`REWARD_TOL`] of `reward`.
    pub fn snap_reward(&self, reward: f64) -> Option<f64> {
        snap_to(&self.rewards, reward)
    }

    /// Copy with a different true reward and corruption, same `S, A, R, T`.
    pub fn with_rewards(
        &self,
        true_reward: Vec<f64>,
        corruption_pairs: &[(usize, f64, f64)],
    ) -> Result<Self> {
        Self::new(
            self.dynamics.clone(),
            Some(self.rewards.clone()),
            true_reward,
            corruption_pairs,
        )
    }

    /// All explicit corruption pairs as `(state, r_in, r_out)`.
    pub fn corruption_pairs(&self) -> Vec<(usize, f64, f64)> {
        (0..self.n_states())
            .flat_map(|s| self.corruption.pairs(s).iter().map(move |&(a, b)| (s, a, b)))
            .collect()
    }

    pub(crate) fn check_state(&self, state: usize) -> Result<()> {
        if state < self.n_states() {
            Ok(())
        } else {
            Err(CrmdpError::StateOutOfRange(state))
        }
    }
}

/// Borrowed view of the observed reward function `R̂` of a CRMDP.
#[derive(Debug, Clone, Copy)]
pub struct ObservedRewardView<'a> {
    source: &'a Crmdp,
}

impl<'a> ObservedRewardView<'a> {
    pub fn source(&self) -> &'a Crmdp {
        self.source
    }

    pub fn value(&self, state: usize) -> f64 {
        self.source.observed_reward(state)
    }

    pub fn values(&self) -> &'a [f64] {
        self.source.observed_rewards()
    }
}

/// What an agent with a known model is allowed to hold: dynamics and the
/// observed reward, never the true reward.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedMdp {
    pub dynamics: Dynamics,
    pub observed_reward: Vec<f64>,
}

fn canonical_reward_set(mut raw: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(&bad) = raw.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(CrmdpError::RewardOutOfRange(bad));
    }
    raw.sort_by(f64::total_cmp);
    let mut set: Vec<f64> = Vec::with_capacity(raw.len());
    for r in raw {
        if set.last().is_none_or(|&last| r - last > REWARD_TOL) {
            set.push(r);
        }
    }
    Ok(set)
}

fn snap_to(set: &[f64], reward: f64) -> Option<f64> {
    set.iter()
        .copied()
        .find(|&r| (r - reward).abs() <= REWARD_TOL)
}
