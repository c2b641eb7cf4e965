use serde_json::json;

use super::{argmax_tol, Agent, AgentError, BeliefState, Observation};
use crate::crmdp::{hitting_times, navigation_policy, CrmdpError, Dynamics, Navigation, REWARD_TOL};

/// Which expectation the committed state maximises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtcMode {
    /// Posterior-expected true reward.
    Cr,
    /// Posterior-expected observed reward.
    Rl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtcPhase {
    Exploring,
    Committed(usize),
}

/// Explore-then-commit Bayesian agent.
///
/// Visits every state (always heading for the unvisited state with the
/// smallest expected hitting time, lowest index on ties), conditioning its
/// belief on each observed reward, then navigates to the state with the
/// highest posterior expectation and stays there.
#[derive(Debug, Clone)]
pub struct EtcAgent {
    mode: EtcMode,
    belief: BeliefState,
    dynamics: Dynamics,
    /// `to_target[t][s]`: expected hitting time of `t` from `s`.
    to_target: Vec<Vec<f64>>,
    visited: Vec<bool>,
    phase: EtcPhase,
    heading: Option<usize>,
    navigation: Option<Navigation>,
    inconsistent: bool,
    steps: u64,
}

impl EtcAgent {
    /// All members must share the same (communicating) transition function.
    pub fn new(belief: BeliefState, mode: EtcMode) -> Result<Self, AgentError> {
        let dynamics = belief.members()[0].dynamics().clone();
        if belief.members().iter().any(|m| m.dynamics() != &dynamics) {
            return Err(AgentError::ClassMismatch("transition function"));
        }
        if let Some((from, to)) = dynamics.unreachable_pair() {
            return Err(CrmdpError::NotCommunicating { from, to }.into());
        }
        let to_target = (0..dynamics.n_states())
            .map(|t| hitting_times(&dynamics, t))
            .collect();
        let n = dynamics.n_states();
        Ok(Self {
            mode,
            belief,
            dynamics,
            to_target,
            visited: vec![false; n],
            phase: EtcPhase::Exploring,
            heading: None,
            navigation: None,
            inconsistent: false,
            steps: 0,
        })
    }

    pub fn phase(&self) -> EtcPhase {
        self.phase
    }

    pub fn belief(&self) -> &BeliefState {
        &self.belief
    }

    /// The state the agent would commit to under the current posterior.
    pub fn preferred_state(&self) -> usize {
        let scores: Vec<f64> = (0..self.dynamics.n_states())
            .map(|s| match self.mode {
                EtcMode::Cr => self.belief.expected_true_reward(s),
                EtcMode::Rl => self.belief.expected_observed_reward(s),
            })
            .collect();
        argmax_tol(&scores, REWARD_TOL)
    }

    fn nearest_unvisited(&self, from: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for t in (0..self.visited.len()).filter(|&t| !self.visited[t]) {
            let time = self.to_target[t][from];
            if best.is_none_or(|(_, b)| time < b - 1e-9) {
                best = Some((t, time));
            }
        }
        best.map(|(t, _)| t)
    }

    fn head_for(&mut self, target: usize) {
        if self.navigation.as_ref().map(|n| n.target) != Some(target) {
            self.navigation = Some(navigation_policy(&self.dynamics, target));
        }
        self.heading = Some(target);
    }
}

impl Agent for EtcAgent {
    fn reset(&mut self, _seed: u64) {
        self.belief.reset();
        self.visited.fill(false);
        self.phase = EtcPhase::Exploring;
        self.heading = None;
        self.navigation = None;
        self.inconsistent = false;
        self.steps = 0;
    }

    fn act(&mut self, obs: Observation) -> usize {
        self.steps += 1;
        if !self.visited[obs.state] {
            self.visited[obs.state] = true;
            if self.belief.update(obs.state, obs.observed_reward).is_err() {
                self.inconsistent = true;
            }
        }
        if self.phase == EtcPhase::Exploring
            && self.heading.is_none_or(|h| self.visited[h]) {
                match self.nearest_unvisited(obs.state) {
                    Some(t) => self.head_for(t),
                    None => {
                        let target = self.preferred_state();
                        self.phase = EtcPhase::Committed(target);
                        self.head_for(target);
                    }
                }
            }
        self.navigation
            .as_ref()
            .map_or(0, |nav| nav.actions[obs.state])
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({
            "agent": match self.mode { EtcMode::Cr => "etc-cr", EtcMode::Rl => "etc-rl" },
            "committed": match self.phase { EtcPhase::Committed(s) => Some(s), EtcPhase::Exploring => None },
            "posterior": self.belief.posterior(),
            "inconsistent_observations": self.inconsistent,
            "steps": self.steps,
        })
    }
}
