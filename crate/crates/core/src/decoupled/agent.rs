use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use super::{learnability_check, reconstruct, DecoupledCrmdp, DecoupledError, ObservationGraph, ObservationTriple};
use crate::crmdp::{average_reward_optimum, informed_value, Dynamics, DEFAULT_DP_BUDGET};
use crate::rng::{derive_seed, rng_from_seed, LabRng, AGENT_STREAM, ENV_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RtpPhase {
    Exploring,
    Exploiting,
}

/// Explores with uniformly random actions until every reward can be
/// reconstructed from the collected reports, then follows an
/// average-reward-optimal policy for the estimated model (empirical
/// transitions, reconstructed rewards). The plan is recomputed whenever the
/// elapsed time doubles and whenever a state-action pair is tried for the
/// first time.
///
/// Pairs never tried are modelled as self-loops.
#[derive(Debug, Clone)]
pub struct ReconstructThenPlan {
    graph: ObservationGraph,
    learnable: bool,
    n_actions: usize,
    counts: Vec<Vec<(usize, u64)>>,
    observations: Vec<ObservationTriple>,
    seen: BTreeSet<(usize, usize)>,
    stale: bool,
    reward: Option<Vec<f64>>,
    policy: Vec<usize>,
    phase: RtpPhase,
    unresolved: bool,
    rng: LabRng,
    last: Option<(usize, usize)>,
    steps: u64,
    next_solve: u64,
    committed_at: Option<u64>,
}

impl ReconstructThenPlan {
    pub fn new(graph: ObservationGraph, n_actions: usize) -> Self {
        let learnable = learnability_check(&graph).overall;
        let n = graph.n_states;
        Self {
            graph,
            learnable,
            n_actions,
            counts: vec![Vec::new(); n * n_actions],
            observations: Vec::new(),
            seen: BTreeSet::new(),
            stale: false,
            reward: None,
            policy: vec![0; n],
            phase: RtpPhase::Exploring,
            unresolved: false,
            rng: rng_from_seed(0),
            last: None,
            steps: 0,
            next_solve: 0,
            committed_at: None,
        }
    }

    pub fn reset(&mut self, seed: u64) {
        *self = Self { rng: rng_from_seed(seed), ..Self::new(self.graph.clone(), self.n_actions) };
    }

    pub fn phase(&self) -> RtpPhase {
        self.phase
    }

    pub fn reconstructed(&self) -> Option<&[f64]> {
        self.reward.as_deref()
    }

    pub fn committed_at(&self) -> Option<u64> {
        self.committed_at
    }

    /// Reports collected so far, first one per edge.
    pub fn observations(&self) -> &[ObservationTriple] {
        &self.observations
    }

    pub fn observe(&mut self, observer: usize, target: usize, value: f64) {
        if self.seen.insert((observer, target)) {
            self.observations.push((observer, target, value));
            self.stale = true;
        }
    }

    /// The current transition estimate.
    pub fn empirical_dynamics(&self) -> Dynamics {
        let n = self.graph.n_states;
        let rows = (0..n * self.n_actions)
            .map(|i| {
                let row = &self.counts[i];
                let total: u64 = row.iter().map(|&(_, c)| c).sum();
                if total == 0 {
                    vec![(i / self.n_actions, 1.0)]
                } else {
                    row.iter().map(|&(t, c)| (t, c as f64 / total as f64)).collect()
                }
            })
            .collect();
        Dynamics::new(n, self.n_actions, rows).expect("empirical rows are normalised")
    }

    fn record(&mut self, state: usize, action: usize, next: usize) -> bool {
        let row = &mut self.counts[state * self.n_actions + action];
        let first = row.is_empty();
        match row.iter_mut().find(|(t, _)| *t == next) {
            Some(entry) => entry.1 += 1,
            None => row.push((next, 1)),
        }
        first
    }

    fn try_commit(&mut self) {
        self.stale = false;
        if !self.learnable {
            self.unresolved = true;
            return;
        }
        match reconstruct(&self.observations, &self.graph).map(|r| r.reward()) {
            Ok(Some(reward)) => {
                self.reward = Some(reward);
                self.phase = RtpPhase::Exploiting;
                self.committed_at = Some(self.steps);
                self.unresolved = false;
                self.solve();
            }
            _ => self.unresolved = true,
        }
    }

    fn solve(&mut self) {
        let reward = self.reward.as_ref().expect("solve after reconstruction");
        self.policy = average_reward_optimum(&self.empirical_dynamics(), reward).policy;
        self.next_solve = (2 * self.steps).max(1);
    }

    pub fn act(&mut self, state: usize) -> usize {
        if let Some((s, a)) = self.last {
            let first = self.record(s, a, state);
            if first && self.phase == RtpPhase::Exploiting {
                self.solve();
            }
        }
        if self.phase == RtpPhase::Exploring && self.stale {
            self.try_commit();
        }
        if self.phase == RtpPhase::Exploiting && self.steps >= self.next_solve {
            self.solve();
        }
        let action = match self.phase {
            RtpPhase::Exploring => self.rng.gen_range(0..self.n_actions),
            RtpPhase::Exploiting => self.policy[state],
        };
        self.last = Some((state, action));
        self.steps += 1;
        action
    }

    pub fn snapshot(&self) -> serde_json::Value {
        json!({
            "agent": "reconstruct-then-plan",
            "phase": self.phase,
            "learnable": self.learnable,
            "unresolved": self.unresolved,
            "committed_at": self.committed_at,
            "reconstructed": self.reward,
            "policy": self.policy,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RtpRun {
    pub horizon: usize,
    /// `Σ_{k=0}^t ṙ_k`.
    pub true_return: f64,
    pub informed_optimum: f64,
    pub optimum_approximate: bool,
    pub time_averaged_regret: f64,
    pub committed_at: Option<u64>,
    pub reconstructed: Option<Vec<f64>>,
    pub snapshot: serde_json::Value,
}

/// One episode of [`ReconstructThenPlan`] on `dm`. Each step the agent is
/// shown one uniformly drawn target through the current state's view.
pub fn run_reconstruct_then_plan(
    dm: &DecoupledCrmdp,
    graph: &ObservationGraph,
    s0: usize,
    t: usize,
    seed: u64,
) -> Result<RtpRun, DecoupledError> {
    let m = dm.base();
    let n = m.n_states();
    if s0 >= n {
        return Err(DecoupledError::State(s0));
    }
    let optimum = informed_value(m, s0, t, DEFAULT_DP_BUDGET)?;
    let mut agent = ReconstructThenPlan::new(graph.clone(), m.n_actions());
    agent.reset(derive_seed(seed, AGENT_STREAM));
    let mut env_rng = rng_from_seed(derive_seed(seed, ENV_STREAM));
    let mut state = s0;
    let mut total = 0.0;
    for time in 0..=t {
        total += m.true_reward(state);
        let target = env_rng.gen_range(0..n);
        if let Some(value) = dm.observe(state, target) {
            agent.observe(state, target, value);
        }
        if time == t {
            break;
        }
        let action = agent.act(state);
        state = m.dynamics().sample(state, action, &mut env_rng);
    }
    Ok(RtpRun {
        horizon: t,
        true_return: total,
        informed_optimum: optimum.value,
        optimum_approximate: optimum.approximate,
        time_averaged_regret: if t == 0 { 0.0 } else { (optimum.value - total) / t as f64 },
        committed_at: agent.committed_at(),
        reconstructed: agent.reconstructed().map(<[f64]>::to_vec),
        snapshot: agent.snapshot(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crmdp::Crmdp;
    use crate::decoupled::fixtures::{rich_graph_fixture, rl_graph_fixture};

    #[test]
    fn rich_graph_reconstructs_and_has_small_regret() {
        let f = rich_graph_fixture();
        let run = run_reconstruct_then_plan(&f.decoupled, &f.graph, 0, 20_000, 7).unwrap();
        assert_eq!(run.reconstructed.as_deref(), Some(f.decoupled.base().true_rewards()));
        assert!(run.time_averaged_regret < 0.05, "{}", run.time_averaged_regret);
    }

    #[test]
    fn rl_graph_never_commits() {
        let f = rl_graph_fixture();
        let run = run_reconstruct_then_plan(&f.decoupled, &f.graph, 0, 2_000, 1).unwrap();
        assert_eq!(run.committed_at, None);
        assert_eq!(run.snapshot["unresolved"], true);
    }

    #[test]
    fn identity_corruption_plans_on_true_rewards() {
        let d = Dynamics::deterministic(3, 2, |s, a| if a == 0 { s } else { (s + 1) % 3 }).unwrap();
        let m = Crmdp::uncorrupted(d, vec![0.2, 0.4, 0.8]).unwrap();
        let dm = DecoupledCrmdp::self_observing(m);
        let g = dm.graph(Default::default(), 0);
        let run = run_reconstruct_then_plan(&dm, &g, 0, 5_000, 2).unwrap();
        assert_eq!(run.reconstructed, Some(vec![0.2, 0.4, 0.8]));
        assert_eq!(run.snapshot["policy"], json!([1, 1, 0]));
    }
}
