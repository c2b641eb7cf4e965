use rand::Rng;
use serde::Serialize;
use serde_json::json;

use super::QuantileError;
use crate::agents::{argmax, Agent, Observation};
use crate::crmdp::{navigation_policy, Dynamics, Navigation, REWARD_TOL};
use crate::rng::{rng_from_seed, LabRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuantilePhase {
    Exploring,
    Travelling,
    Committed,
}

/// `(δ*, bound)` with `δ* = 1 − √(q/|S|)` and `bound = 1 − (1 − √(q/|S|))²`.
pub fn quantile_bound(q: usize, n_states: usize) -> (f64, f64) {
    let root = (q as f64 / n_states as f64).sqrt();
    let delta = 1.0 - root;
    (delta, 1.0 - delta * delta)
}

/// `S^δ = {s : R̂(s) ≥ δ}`, in index order.
pub fn quantile_set(observed: &[f64], delta: f64) -> Vec<usize> {
    (0..observed.len())
        .filter(|&s| observed[s] >= delta - REWARD_TOL)
        .collect()
}

/// The simple δ-quantilising agent.
///
/// Takes uniformly random actions until every state has been seen, draws a
/// target uniformly from `S^δ`, walks there along a shortest-expected-time
/// route and then stays. The agent knows the transition function (for the
/// route) but learns the observed rewards only by visiting.
#[derive(Debug, Clone)]
pub struct SimpleQuantiliser {
    delta: f64,
    dynamics: Dynamics,
    rng: LabRng,
    phase: QuantilePhase,
    observed: Vec<Option<f64>>,
    unvisited: usize,
    candidates: Vec<usize>,
    chosen: Option<usize>,
    navigation: Option<Navigation>,
    fallback: bool,
}

impl SimpleQuantiliser {
    pub fn new(dynamics: Dynamics, delta: f64) -> Result<Self, QuantileError> {
        if !(0.0..1.0).contains(&delta) {
            return Err(QuantileError::Delta(delta));
        }
        let n = dynamics.n_states();
        Ok(Self {
            delta,
            dynamics,
            rng: rng_from_seed(0),
            phase: QuantilePhase::Exploring,
            observed: vec![None; n],
            unvisited: n,
            candidates: Vec::new(),
            chosen: None,
            navigation: None,
            fallback: false,
        })
    }

    pub fn phase(&self) -> QuantilePhase {
        self.phase
    }

    pub fn chosen(&self) -> Option<usize> {
        self.chosen
    }

    /// `S^δ` as computed at the end of exploration.
    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    /// Whether `S^δ` was empty and the agent fell back to the best observed state.
    pub fn fell_back(&self) -> bool {
        self.fallback
    }

    fn commit(&mut self) {
        let observed: Vec<f64> = self.observed.iter().map(|r| r.unwrap_or(0.0)).collect();
        self.candidates = quantile_set(&observed, self.delta);
        let target = if self.candidates.is_empty() {
            self.fallback = true;
            argmax(&observed)
        } else {
            self.candidates[self.rng.gen_range(0..self.candidates.len())]
        };
        self.chosen = Some(target);
        self.navigation = Some(navigation_policy(&self.dynamics, target));
        self.phase = QuantilePhase::Travelling;
    }
}

impl Agent for SimpleQuantiliser {
    fn reset(&mut self, seed: u64) {
        self.rng = rng_from_seed(seed);
        self.phase = QuantilePhase::Exploring;
        self.observed.fill(None);
        self.unvisited = self.observed.len();
        self.candidates.clear();
        self.chosen = None;
        self.navigation = None;
        self.fallback = false;
    }

    fn act(&mut self, obs: Observation) -> usize {
        if self.observed[obs.state].is_none() {
            self.observed[obs.state] = Some(obs.observed_reward);
            self.unvisited -= 1;
        }
        if self.phase == QuantilePhase::Exploring {
            if self.unvisited > 0 {
                return self.rng.gen_range(0..self.dynamics.n_actions());
            }
            self.commit();
        }
        if self.chosen == Some(obs.state) {
            self.phase = QuantilePhase::Committed;
        }
        let nav = self.navigation.as_ref().expect("set on commit");
        nav.actions[obs.state]
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({
            "agent": "quantile",
            "delta": self.delta,
            "phase": self.phase,
            "quantile_set": self.candidates,
            "chosen": self.chosen,
            "fallback": self.fallback,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crmdp::{simulate, PolicyKind};
    use crate::envs::softmax_counterexample;

    #[test]
    fn bound_values() {
        let (d, b) = quantile_bound(1, 1000);
        let root = 0.001f64.sqrt();
        assert!((d - (1.0 - root)).abs() < 1e-15);
        assert!((b - 0.0622).abs() < 1e-4 && (b - 0.06).abs() < 5e-3, "{b}");
        assert_eq!(quantile_bound(0, 10), (1.0, 0.0));
        assert!((quantile_bound(1, 25).0 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn commits_after_exploring_and_stays() {
        let m = softmax_counterexample(10, 0.05).unwrap();
        let agent = SimpleQuantiliser::new(m.dynamics().clone(), 0.5).unwrap();
        let tr = simulate(&m, &mut PolicyKind::HistoryBased(Box::new(agent)), 0, 200, 11).unwrap();
        let last = tr.steps.last().unwrap().state;
        assert!(tr.steps[150..].iter().all(|s| s.state == last));
    }

    #[test]
    fn empty_quantile_set_falls_back() {
        let m = softmax_counterexample(3, 0.05).unwrap();
        let mut agent = SimpleQuantiliser::new(m.dynamics().clone(), 0.99).unwrap();
        agent.reset(0);
        agent.act(Observation { state: 0, observed_reward: 0.2 });
        agent.act(Observation { state: 1, observed_reward: 0.3 });
        assert!(agent.fell_back());
        assert_eq!(agent.chosen(), Some(1));
    }

    #[test]
    fn delta_must_be_below_one() {
        let m = softmax_counterexample(3, 0.05).unwrap();
        assert!(SimpleQuantiliser::new(m.dynamics().clone(), 1.0).is_err());
    }
}
