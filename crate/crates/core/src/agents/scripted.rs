use rand::Rng;
use serde_json::json;

use super::{Agent, Observation};
use crate::rng::{rng_from_seed, LabRng};

/// Plays a fixed action per state. With the stay action everywhere this is
/// the stay-put baseline.
#[derive(Debug, Clone)]
pub struct FixedPolicyAgent {
    policy: Vec<usize>,
}

impl FixedPolicyAgent {
    pub fn new(policy: Vec<usize>) -> Self {
        Self { policy }
    }
}

impl Agent for FixedPolicyAgent {
    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, obs: Observation) -> usize {
        self.policy[obs.state]
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({ "agent": "fixed", "policy": self.policy })
    }
}

/// Uniformly random actions.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    n_actions: usize,
    rng: LabRng,
}

impl RandomAgent {
    pub fn new(n_actions: usize) -> Self {
        Self { n_actions, rng: rng_from_seed(0) }
    }
}

impl Agent for RandomAgent {
    fn reset(&mut self, seed: u64) {
        self.rng = rng_from_seed(seed);
    }

    fn act(&mut self, _obs: Observation) -> usize {
        self.rng.gen_range(0..self.n_actions)
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({ "agent": "random", "actions": self.n_actions })
    }
}
