//! Random model generators used as test fixtures.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::crmdp::{Crmdp, Dynamics};

/// Random CRMDP whose reward set `{0, 1/L, …, 1}` is closed under `r ↦ 1 − r`.
///
/// Rows have one to three successors with random weights; about half of the
/// states get a random (non-identity) corruption function.
pub fn random_symmetric_crmdp<R: Rng + ?Sized>(rng: &mut R, n_states: usize, n_actions: usize, levels: usize) -> Crmdp {
    let rewards: Vec<f64> = (0..=levels).map(|k| k as f64 / levels as f64).collect();
    let dynamics = random_sparse_dynamics(rng, n_states, n_actions, 3);
    let true_reward = (0..n_states).map(|_| *rewards.choose(rng).unwrap()).collect();
    let mut pairs = Vec::new();
    for s in 0..n_states {
        if rng.gen_bool(0.5) {
            for &r in &rewards {
                pairs.push((s, r, *rewards.choose(rng).unwrap()));
            }
        }
    }
    Crmdp::new(dynamics, Some(rewards), true_reward, &pairs).expect("generated model is valid")
}

/// Rows with between one and `max_support` successors and random weights.
pub fn random_sparse_dynamics<R: Rng + ?Sized>(rng: &mut R, n_states: usize, n_actions: usize, max_support: usize) -> Dynamics {
    let states: Vec<usize> = (0..n_states).collect();
    let rows = (0..n_states * n_actions)
        .map(|_| {
            let k = rng.gen_range(1..=max_support.min(n_states));
            let targets: Vec<usize> = states.choose_multiple(rng, k).copied().collect();
            let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = weights.iter().sum();
            targets.into_iter().zip(weights).map(|(t, w)| (t, w / total)).collect()
        })
        .collect();
    Dynamics::new(n_states, n_actions, rows).expect("weights are normalised")
}

/// A model with planted worst-case corruption and the corrupt states.
#[derive(Debug, Clone)]
pub struct PlantedFixture {
    pub crmdp: Crmdp,
    pub corrupt: Vec<usize>,
    pub q: usize,
}

/// Easy environment: every state has a stay action (0), ring moves forward
/// (1) and backward (2), and `jumps` deterministic shortcuts to random states.
///
/// Observed rewards are a random permutation of `{1/n, 2/n, …, 1}`. The `q`
/// states with the highest observed rewards are corrupt with true reward 0;
/// everywhere else the true reward equals the observed one.
pub fn easy_fixture<R: Rng + ?Sized>(rng: &mut R, n_states: usize, q: usize, jumps: usize) -> PlantedFixture {
    let n = n_states;
    let shortcuts: Vec<Vec<usize>> = (0..n).map(|_| (0..jumps).map(|_| rng.gen_range(0..n)).collect()).collect();
    let dynamics = Dynamics::deterministic(n, 3 + jumps, |s, a| match a {
        0 => s,
        1 => (s + 1) % n,
        2 => (s + n - 1) % n,
        j => shortcuts[s][j - 3],
    })
    .expect("deterministic successors are valid");
    let mut observed: Vec<f64> = (1..=n).map(|k| k as f64 / n as f64).collect();
    observed.shuffle(rng);
    plant(dynamics, observed, q)
}

/// Unichain fixture: every row puts `0.85` on a random successor and spreads
/// `0.15` uniformly, so every stationary policy is ergodic. Observed rewards
/// are drawn from `{0.1, …, 1.0}`; the `q` highest are corrupt with true reward 0.
pub fn unichain_fixture<R: Rng + ?Sized>(rng: &mut R, n_states: usize, n_actions: usize, q: usize) -> PlantedFixture {
    let n = n_states;
    let rows = (0..n * n_actions)
        .map(|_| {
            let main = rng.gen_range(0..n);
            (0..n).map(|t| (t, if t == main { 0.85 } else { 0.0 } + 0.15 / n as f64)).collect()
        })
        .collect();
    let dynamics = Dynamics::new(n, n_actions, rows).expect("rows sum to one");
    let observed = (0..n).map(|_| rng.gen_range(1..=10) as f64 / 10.0).collect();
    plant(dynamics, observed, q)
}

fn plant(dynamics: Dynamics, observed: Vec<f64>, q: usize) -> PlantedFixture {
    let n = observed.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| observed[b].total_cmp(&observed[a]).then(a.cmp(&b)));
    let mut corrupt: Vec<usize> = order.into_iter().take(q.min(n)).collect();
    corrupt.sort_unstable();
    let mut true_reward = observed.clone();
    let mut pairs = Vec::new();
    for &s in &corrupt {
        true_reward[s] = 0.0;
        pairs.push((s, 0.0, observed[s]));
    }
    let mut rewards = observed;
    rewards.push(0.0);
    let crmdp = Crmdp::new(dynamics, Some(rewards), true_reward, &pairs).expect("planted model is valid");
    PlantedFixture { crmdp, corrupt, q }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crmdp::validate_assumptions;
    use crate::rng::rng_from_seed;
    use std::collections::BTreeSet;

    #[test]
    fn easy_fixture_meets_observed_prevalence() {
        let mut rng = rng_from_seed(3);
        let f = easy_fixture(&mut rng, 25, 2, 2);
        let r = validate_assumptions(&f.crmdp, &BTreeSet::new(), 2);
        assert!(r.limited_corruption() && r.communicating && r.stay_actions);
        assert!(r.high_observed_reward_prevalence);
        assert_eq!(f.corrupt.len(), 2);
        for &s in &f.corrupt {
            assert_eq!(f.crmdp.true_reward(s), 0.0);
            assert!(f.crmdp.observed_reward(s) >= 24.0 / 25.0 - 1e-12);
        }
    }

    #[test]
    fn symmetric_models_are_mirror_closed() {
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let m = random_symmetric_crmdp(&mut rng, 4, 2, 4);
            assert!(crate::crmdp::mirror(&m).is_ok());
        }
    }
}
