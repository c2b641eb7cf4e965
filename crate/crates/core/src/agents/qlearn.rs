use rand::Rng;
use serde_json::json;

use super::{argmax, Agent, AgentError, Observation};
use crate::rng::{rng_from_seed, LabRng};

/// Tabular action values with their learning parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
    n_actions: usize,
    pub alpha: f64,
    pub gamma: f64,
}

impl QTable {
    /// Zero-initialised table. Requires `α ∈ (0, 1]` and `γ ∈ [0, 1)`.
    pub fn new(n_states: usize, n_actions: usize, alpha: f64, gamma: f64) -> Result<Self, AgentError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(AgentError::Parameter { name: "alpha", value: alpha, reason: "must lie in (0, 1]" });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(AgentError::Parameter { name: "gamma", value: gamma, reason: "must lie in [0, 1)" });
        }
        Ok(Self {
            values: vec![0.0; n_states * n_actions],
            n_actions,
            alpha,
            gamma,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.n_actions + action] = value;
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Q(s,a) += α (r̂ + γ max_a' Q(s',a') − Q(s,a))`.
    pub fn update(&mut self, state: usize, action: usize, reward: f64, next: usize) {
        let target = reward + self.gamma * self.row(next).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let q = &mut self.values[state * self.n_actions + action];
        *q += self.alpha * (target - *q);
    }

    pub fn fill(&mut self, value: f64) {
        self.values.fill(value);
    }
}

/// One Q-learning update on the transition `(s, a, r̂, s')`.
pub fn q_learning_step(mut q: QTable, (state, action, reward, next): (usize, usize, f64, usize)) -> QTable {
    q.update(state, action, reward, next);
    q
}

/// Greedy action (lowest index on ties) with probability `1 − ε`, otherwise
/// a uniformly random action.
pub fn epsilon_greedy_act<R: Rng + ?Sized>(q: &QTable, state: usize, epsilon: f64, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    if u < epsilon {
        rng.gen_range(0..q.n_actions())
    } else {
        argmax(q.row(state))
    }
}

/// Boltzmann probabilities `∝ exp(Q/τ)` for temperature `τ`, computed after
/// subtracting the max.
pub fn softmax_probs(values: &[f64], temperature: f64) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = values.iter().map(|&v| ((v - max) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

pub fn softmax_act<R: Rng + ?Sized>(q: &QTable, state: usize, temperature: f64, rng: &mut R) -> usize {
    crate::crmdp::sample_index(&softmax_probs(q.row(state), temperature), rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exploration {
    EpsilonGreedy { epsilon: f64 },
    /// `P(a) ∝ exp(Q(s,a)/τ)`. The `beta = 2` setting of the gridworld
    /// experiments corresponds to `τ = 1/2`; see [`Exploration::softmax_beta`].
    Softmax { temperature: f64 },
}

impl Exploration {
    /// Softmax with inverse temperature `β`: `P(a) ∝ exp(β Q(s,a))`.
    pub fn softmax_beta(beta: f64) -> Self {
        Self::Softmax { temperature: 1.0 / beta }
    }
}

impl Exploration {
    fn validate(self) -> Result<Self, AgentError> {
        match self {
            Self::EpsilonGreedy { epsilon } if !(0.0..=1.0).contains(&epsilon) => {
                Err(AgentError::Parameter { name: "epsilon", value: epsilon, reason: "must lie in [0, 1]" })
            }
            Self::Softmax { temperature } if !(temperature > 0.0 && temperature.is_finite()) => {
                Err(AgentError::Parameter { name: "temperature", value: temperature, reason: "must be positive and finite" })
            }
            ok => Ok(ok),
        }
    }
}

/// Tabular Q-learning on the observed reward. The reward for action `a`
/// taken in `s` is the observed reward of the state it lands in.
///
/// The table starts at `initial_value` (by default `1/(1 − γ)`, the largest
/// discounted return possible with rewards in `[0, 1]`), so every action
/// looks worth trying until it has been tried.
#[derive(Debug, Clone)]
pub struct QLearningAgent {
    table: QTable,
    initial_value: f64,
    exploration: Exploration,
    rng: LabRng,
    last: Option<(usize, usize)>,
    steps: u64,
}

impl QLearningAgent {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        alpha: f64,
        gamma: f64,
        exploration: Exploration,
    ) -> Result<Self, AgentError> {
        let mut table = QTable::new(n_states, n_actions, alpha, gamma)?;
        let initial_value = 1.0 / (1.0 - gamma);
        table.fill(initial_value);
        Ok(Self {
            table,
            initial_value,
            exploration: exploration.validate()?,
            rng: rng_from_seed(0),
            last: None,
            steps: 0,
        })
    }

    /// Starting value of every table entry, applied now and on each reset.
    pub fn with_initial_value(mut self, value: f64) -> Result<Self, AgentError> {
        if !value.is_finite() {
            return Err(AgentError::Parameter { name: "q_init", value, reason: "must be finite" });
        }
        self.initial_value = value;
        self.table.fill(value);
        Ok(self)
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut QTable {
        &mut self.table
    }
}

impl Agent for QLearningAgent {
    fn reset(&mut self, seed: u64) {
        self.table.fill(self.initial_value);
        self.rng = rng_from_seed(seed);
        self.last = None;
        self.steps = 0;
    }

    fn act(&mut self, obs: Observation) -> usize {
        if let Some((s, a)) = self.last {
            self.table.update(s, a, obs.observed_reward, obs.state);
        }
        let action = match self.exploration {
            Exploration::EpsilonGreedy { epsilon } => epsilon_greedy_act(&self.table, obs.state, epsilon, &mut self.rng),
            Exploration::Softmax { temperature } => softmax_act(&self.table, obs.state, temperature, &mut self.rng),
        };
        self.last = Some((obs.state, action));
        self.steps += 1;
        action
    }

    fn snapshot(&self) -> serde_json::Value {
        let greedy: Vec<usize> = (0..self.table.values.len() / self.table.n_actions)
            .map(|s| argmax(self.table.row(s)))
            .collect();
        json!({
            "agent": match self.exploration {
                Exploration::EpsilonGreedy { .. } => "qlearn",
                Exploration::Softmax { .. } => "softmax",
            },
            "steps": self.steps,
            "greedy_policy": greedy,
        })
    }
}
