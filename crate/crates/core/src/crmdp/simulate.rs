use rand::Rng;

use super::{Crmdp, CrmdpError, Result, PROB_TOL};
use crate::agents::{Agent, Observation};
use crate::rng::{derive_seed, rng_from_seed, AGENT_STREAM, ENV_STREAM};

/// One time step of the interaction process.
///
/// `action` is the action that led into `state` (`None` at time 0), so a
/// trajectory reads `s_0 ṙ_0 r̂_0 a_1 s_1 ṙ_1 r̂_1 …`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub time: usize,
    pub state: usize,
    pub action: Option<usize>,
    pub true_reward: f64,
    pub observed_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub seed: u64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.state)
    }
}

/// How actions are chosen.
pub enum PolicyKind {
    StationaryDeterministic(Vec<usize>),
    /// Per-state action distributions; rows must sum to one.
    StationaryStochastic(Vec<Vec<f64>>),
    /// An arbitrary agent acting on the observed history.
    HistoryBased(Box<dyn Agent>),
}

impl std::fmt::Debug for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::StationaryDeterministic(p) => f.debug_tuple("StationaryDeterministic").field(p).finish(),
            Self::StationaryStochastic(p) => f.debug_tuple("StationaryStochastic").field(p).finish(),
            Self::HistoryBased(_) => f.write_str("HistoryBased(..)"),
        }
    }
}

impl PolicyKind {
    fn validate(&self, m: &Crmdp) -> Result<()> {
        let (n, k) = (m.n_states(), m.n_actions());
        match self {
            Self::StationaryDeterministic(p) => {
                if p.len() != n {
                    return Err(CrmdpError::Shape { what: "policy entries", expected: n, got: p.len() });
                }
                if let Some(&a) = p.iter().find(|&&a| a >= k) {
                    return Err(CrmdpError::Shape { what: "action index bound", expected: k, got: a });
                }
            }
            Self::StationaryStochastic(rows) => {
                if rows.len() != n {
                    return Err(CrmdpError::Shape { what: "policy rows", expected: n, got: rows.len() });
                }
                for (state, row) in rows.iter().enumerate() {
                    let sum: f64 = row.iter().sum();
                    if row.len() != k || (sum - 1.0).abs() > PROB_TOL || row.iter().any(|&p| p < 0.0) {
                        return Err(CrmdpError::RowSum { state, action: usize::MAX, sum });
                    }
                }
            }
            Self::HistoryBased(_) => {}
        }
        Ok(())
    }
}

/// Runs the process for `t` transitions, calling `visit` on each of the
/// `t + 1` steps without storing them.
///
/// The environment and the policy draw from independent streams derived
/// from `seed`, so two CRMDPs with identical dynamics and observed rewards
/// produce identical state/action sequences under the same seed.
pub fn run_episode(
    m: &Crmdp,
    policy: &mut PolicyKind,
    s0: usize,
    t: usize,
    seed: u64,
    mut visit: impl FnMut(&Step),
) -> Result<()> {
    m.check_state(s0)?;
    policy.validate(m)?;
    let dynamics = m.dynamics();
    let mut env_rng = rng_from_seed(derive_seed(seed, ENV_STREAM));
    let agent_seed = derive_seed(seed, AGENT_STREAM);
    let mut policy_rng = rng_from_seed(agent_seed);
    if let PolicyKind::HistoryBased(agent) = policy {
        agent.reset(agent_seed);
    }

    let mut state = s0;
    let mut action = None;
    for time in 0..=t {
        let observed_reward = m.observed_reward(state);
        visit(&Step {
            time,
            state,
            action,
            true_reward: m.true_reward(state),
            observed_reward,
        });
        if time == t {
            break;
        }
        let a = match policy {
            PolicyKind::StationaryDeterministic(p) => p[state],
            PolicyKind::StationaryStochastic(rows) => sample_index(&rows[state], &mut policy_rng),
            PolicyKind::HistoryBased(agent) => agent.act(Observation { state, observed_reward }),
        };
        state = dynamics.sample(state, a, &mut env_rng);
        action = Some(a);
    }
    Ok(())
}

/// Samples a trajectory of length `t + 1` from the process induced by
/// `policy` on `m`, starting in `s0`.
pub fn simulate(m: &Crmdp, policy: &mut PolicyKind, s0: usize, t: usize, seed: u64) -> Result<Trajectory> {
    let mut steps = Vec::with_capacity(t + 1);
    run_episode(m, policy, s0, t, seed, |step| steps.push(*step))?;
    Ok(Trajectory { steps, seed })
}

/// `(Σ ṙ_k, Σ r̂_k)` over `k = 0..=t`.
pub fn cumulative_returns(trajectory: &Trajectory) -> (f64, f64) {
    trajectory
        .steps
        .iter()
        .fold((0.0, 0.0), |(t, o), s| (t + s.true_reward, o + s.observed_reward))
}

pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
