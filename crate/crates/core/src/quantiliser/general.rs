use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::stationary::{stationary_distribution, support_from, ValueSupport};
use super::QuantileError;
use crate::agents::{Agent, Observation};
use crate::crmdp::ObservedMdp;
use crate::rng::{rng_from_seed, LabRng};

pub const DEFAULT_POLICY_CAP: u64 = 1_000_000;
/// Candidate counts up to this are packed exactly; beyond it, greedily.
pub const EXACT_PACKING_LIMIT: usize = 12;
const MAX_STATES: usize = 128;

/// `1 − δ(1 − q/|S^δ|)`. Values `≥ 1` (vacuous) are returned as is.
pub fn general_bound(delta: f64, q: usize, union_size: usize) -> f64 {
    1.0 - delta * (1.0 - q as f64 / union_size as f64)
}

/// Deterministic stationary policy with the given enumeration index; state 0
/// holds the least significant digit, so index 0 plays action 0 everywhere.
pub fn policy_from_index(mut index: u64, n_states: usize, n_actions: usize) -> Vec<usize> {
    (0..n_states)
        .map(|_| {
            let a = (index % n_actions as u64) as usize;
            index /= n_actions as u64;
            a
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub policy_index: u64,
    pub value_support: ValueSupport,
}

impl Candidate {
    pub fn support(&self) -> &[usize] {
        &self.value_support.support
    }

    fn mask(&self) -> u128 {
        self.support().iter().fold(0, |m, &s| m | (1u128 << s))
    }
}

/// Outcome of the planning step: the chosen disjoint family of supports and
/// its union `S^δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralPlan {
    pub delta: f64,
    /// One candidate per distinct non-empty support, lowest policy index kept.
    pub candidates: Vec<Candidate>,
    /// Indices into `candidates`, ascending by policy index.
    pub chosen: Vec<usize>,
    pub union: Vec<usize>,
    /// Policies skipped because their chain has several recurrent classes.
    pub skipped_multichain: u64,
    /// Whether the packing was solved exactly.
    pub exact: bool,
}

impl GeneralPlan {
    /// `P(π_i) = |S_i^δ| / |S^δ|` for each chosen candidate.
    pub fn selection_probabilities(&self) -> Vec<(u64, f64)> {
        self.chosen
            .iter()
            .map(|&c| {
                let cand = &self.candidates[c];
                (cand.policy_index, cand.support().len() as f64 / self.union.len() as f64)
            })
            .collect()
    }

    /// The chosen candidate whose support contains `state`.
    pub fn owner(&self, state: usize) -> Option<&Candidate> {
        self.chosen
            .iter()
            .map(|&c| &self.candidates[c])
            .find(|c| c.support().binary_search(&state).is_ok())
    }
}

/// Evaluates every deterministic stationary policy and packs their maximal
/// δ-value-supporting sets.
///
/// Among disjoint families the one with the largest union wins, then the one
/// with fewer sets, then the lexicographically smallest list of policy
/// indices. Policies whose chain is not unichain are skipped.
pub fn plan_general(mdp: &ObservedMdp, delta: f64, policy_cap: u64) -> Result<GeneralPlan, QuantileError> {
    if !(0.0..1.0).contains(&delta) {
        return Err(QuantileError::Delta(delta));
    }
    let (n, k) = (mdp.dynamics.n_states(), mdp.dynamics.n_actions());
    let count = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > policy_cap as u128 {
        return Err(QuantileError::PolicyCap { count, cap: policy_cap });
    }
    if n > MAX_STATES {
        return Err(QuantileError::TooManyStates(n));
    }
    let evaluated: Vec<Result<Option<ValueSupport>, QuantileError>> = (0..count as u64)
        .into_par_iter()
        .map(|index| {
            let policy = policy_from_index(index, n, k);
            match stationary_distribution(&mdp.dynamics, &policy) {
                Ok(d) => Ok(Some(support_from(policy, d, &mdp.observed_reward, delta))),
                Err(QuantileError::Multichain { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut skipped = 0;
    for (index, result) in evaluated.into_iter().enumerate() {
        match result? {
            None => skipped += 1,
            Some(vs) if vs.support.is_empty() => {}
            Some(vs) => {
                if !candidates.iter().any(|c| c.support() == vs.support.as_slice()) {
                    candidates.push(Candidate { policy_index: index as u64, value_support: vs });
                }
            }
        }
    }
    if candidates.is_empty() {
        return Err(QuantileError::DeltaTooHigh { delta, skipped_multichain: skipped });
    }

    let masks: Vec<u128> = candidates.iter().map(Candidate::mask).collect();
    let exact = candidates.len() <= EXACT_PACKING_LIMIT;
    let chosen = if exact { pack_exact(&masks) } else { pack_greedy(&masks) };
    let mut union: Vec<usize> = chosen.iter().flat_map(|&c| candidates[c].support().iter().copied()).collect();
    union.sort_unstable();
    Ok(GeneralPlan { delta, candidates, chosen, union, skipped_multichain: skipped, exact })
}

/// Family ordering: larger union, then fewer sets, then smaller indices.
/// Candidate indices follow policy index order, so comparing them suffices.
fn better(a: &[usize], b: &[usize], masks: &[u128]) -> bool {
    let size = |f: &[usize]| f.iter().map(|&c| masks[c].count_ones()).sum::<u32>();
    match size(a).cmp(&size(b)) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match b.len().cmp(&a.len()) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => a < b,
        },
    }
}

fn pack_exact(masks: &[u128]) -> Vec<usize> {
    fn search(i: usize, used: u128, current: &mut Vec<usize>, best: &mut Vec<usize>, masks: &[u128]) {
        if i == masks.len() {
            if best.is_empty() || better(current, best, masks) {
                *best = current.clone();
            }
            return;
        }
        if masks[i] & used == 0 {
            current.push(i);
            search(i + 1, used | masks[i], current, best, masks);
            current.pop();
        }
        search(i + 1, used, current, best, masks);
    }
    let mut best = Vec::new();
    search(0, 0, &mut Vec::new(), &mut best, masks);
    best
}

fn greedy_fill(start: Vec<usize>, masks: &[u128], order: &[usize]) -> Vec<usize> {
    let mut family = start;
    let mut used = family.iter().fold(0, |m, &c| m | masks[c]);
    for &c in order {
        if !family.contains(&c) && masks[c] & used == 0 {
            family.push(c);
            used |= masks[c];
        }
    }
    family.sort_unstable();
    family
}

fn pack_greedy(masks: &[u128]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..masks.len()).collect();
    order.sort_by(|&a, &b| masks[b].count_ones().cmp(&masks[a].count_ones()).then(a.cmp(&b)));
    let mut best = greedy_fill(Vec::new(), masks, &order);
    // One-swap local search: drop one member, force in an outsider, refill.
    'improve: loop {
        for drop in 0..best.len() {
            for add in 0..masks.len() {
                if best.contains(&add) {
                    continue;
                }
                let kept: Vec<usize> = best
                    .iter()
                    .enumerate()
                    .filter(|&(i, &c)| i != drop && masks[c] & masks[add] == 0)
                    .map(|(_, &c)| c)
                    .chain(std::iter::once(add))
                    .collect();
                let trial = greedy_fill(kept, masks, &order);
                if better(&trial, &best, masks) {
                    best = trial;
                    continue 'improve;
                }
            }
        }
        return best;
    }
}

/// The general δ-quantilising agent.
///
/// It is handed the observed MDP (dynamics and observed rewards), plans once,
/// then on its first step draws a state uniformly from the union `S^δ` and
/// follows the policy whose support contains it for the rest of the episode.
#[derive(Debug, Clone)]
pub struct GeneralQuantiliser {
    plan: GeneralPlan,
    rng: LabRng,
    selected: Option<(usize, usize)>,
}

impl GeneralQuantiliser {
    pub fn new(mdp: &ObservedMdp, delta: f64, policy_cap: u64) -> Result<Self, QuantileError> {
        Ok(Self::from_plan(plan_general(mdp, delta, policy_cap)?))
    }

    pub fn from_plan(plan: GeneralPlan) -> Self {
        Self { plan, rng: rng_from_seed(0), selected: None }
    }

    pub fn plan(&self) -> &GeneralPlan {
        &self.plan
    }

    /// `(sampled state, candidate index)` once the first action is taken.
    pub fn selected(&self) -> Option<(usize, usize)> {
        self.selected
    }

    fn select(&mut self) -> (usize, usize) {
        let union = &self.plan.union;
        let state = union[self.rng.gen_range(0..union.len())];
        let owner = self
            .plan
            .chosen
            .iter()
            .copied()
            .find(|&c| self.plan.candidates[c].support().binary_search(&state).is_ok())
            .expect("the union is made of chosen supports");
        (state, owner)
    }
}

impl Agent for GeneralQuantiliser {
    fn reset(&mut self, seed: u64) {
        self.rng = rng_from_seed(seed);
        self.selected = None;
    }

    fn act(&mut self, obs: Observation) -> usize {
        let (_, owner) = match self.selected {
            Some(sel) => sel,
            None => {
                let sel = self.select();
                self.selected = Some(sel);
                sel
            }
        };
        self.plan.candidates[owner].value_support.policy[obs.state]
    }

    fn snapshot(&self) -> serde_json::Value {
        let policy_index = self.selected.map(|(_, c)| self.plan.candidates[c].policy_index);
        json!({
            "agent": "general-quantile",
            "delta": self.plan.delta,
            "quantile_set": self.plan.union,
            "chosen": self.selected.map(|(s, _)| s),
            "chosen_policy": policy_index,
            "skipped_multichain": self.plan.skipped_multichain,
            "exact_packing": self.plan.exact,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crmdp::Dynamics;
    use crate::envs::{loop_crmdp, LOOP_CW};

    #[test]
    fn bound_arithmetic() {
        assert!((general_bound(0.5, 1, 4) - 0.625).abs() < 1e-15);
        assert!((general_bound(0.3, 0, 7) - 0.7).abs() < 1e-15);
        assert!(general_bound(0.5, 5, 4) > 1.0);
    }

    #[test]
    fn index_zero_plays_first_action() {
        assert_eq!(policy_from_index(0, 3, 2), vec![0, 0, 0]);
        assert_eq!(policy_from_index(5, 3, 2), vec![1, 0, 1]);
    }

    #[test]
    fn loop_selects_the_cycle() {
        let plan = plan_general(&loop_crmdp().observed_mdp(), 0.5, DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(plan.union, vec![1, 3]);
        assert_eq!(plan.chosen.len(), 1);
        let chosen = &plan.candidates[plan.chosen[0]];
        assert_eq!(chosen.value_support.policy, vec![LOOP_CW; 4]);
        assert_eq!(plan.selection_probabilities(), vec![(chosen.policy_index, 1.0)]);
        assert!(plan.skipped_multichain > 0);
    }

    #[test]
    fn high_delta_is_a_typed_failure() {
        let err = plan_general(&loop_crmdp().observed_mdp(), 0.99, DEFAULT_POLICY_CAP).unwrap_err();
        assert!(matches!(err, QuantileError::DeltaTooHigh { .. }));
    }

    #[test]
    fn policy_cap_is_enforced() {
        let err = plan_general(&loop_crmdp().observed_mdp(), 0.5, 15).unwrap_err();
        assert!(matches!(err, QuantileError::PolicyCap { count: 16, cap: 15 }));
    }

    #[test]
    fn greedy_agrees_with_exact_on_small_instances() {
        let masks = [0b0011u128, 0b0100, 0b1100, 0b1000, 0b0001];
        assert_eq!(pack_exact(&masks), vec![0, 2]);
        assert_eq!(pack_greedy(&masks), vec![0, 2]);
    }

    #[test]
    fn agent_follows_its_policy() {
        // Two absorbing-capable states joined by a switch; each stay policy
        // supports one state.
        let d = Dynamics::deterministic(2, 2, |s, a| if a == 0 { s } else { 1 - s }).unwrap();
        let mdp = ObservedMdp { dynamics: d, observed_reward: vec![1.0, 1.0] };
        let mut agent = GeneralQuantiliser::new(&mdp, 0.9, DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(agent.plan().union, vec![0, 1]);
        agent.reset(4);
        let first = agent.act(Observation { state: 0, observed_reward: 1.0 });
        let (state, _) = agent.selected().unwrap();
        assert_eq!(first, if state == 0 { 0 } else { 1 });
    }
}
