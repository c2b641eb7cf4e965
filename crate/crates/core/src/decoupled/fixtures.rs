//! Small decoupled-feedback models used by tests, demos and the CLI.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{learnability_check, DecoupledCrmdp, ObservationGraph};
use crate::crmdp::{Crmdp, Dynamics};

#[derive(Debug, Clone)]
pub struct DecoupledFixture {
    pub decoupled: DecoupledCrmdp,
    pub graph: ObservationGraph,
    /// Observers planted with wrong reports.
    pub corrupt: BTreeSet<usize>,
}

const RICH_TRUE: [f64; 10] = [0.3, 0.5, 0.2, 0.9, 0.4, 0.1, 0.6, 0.0, 0.7, 0.5];
const RICH_SAFE: usize = 9;
const RICH_CORRUPT: [usize; 2] = [5, 7];

fn rich_base() -> Crmdp {
    let n = RICH_TRUE.len();
    // Actions: stay, right, left around a ring.
    let d = Dynamics::deterministic(n, 3, |s, a| match a {
        0 => s,
        1 => (s + 1) % n,
        _ => (s + n - 1) % n,
    })
    .expect("ring is valid");
    let rewards = (0..=10).map(|k| k as f64 / 10.0).collect();
    Crmdp::new(d, Some(rewards), RICH_TRUE.to_vec(), &[]).expect("rewards are on the grid")
}

/// Ring of nine risky states and one safe state (index 9), `q = 2`.
///
/// Every risky state observes every target. The safe state observes only
/// targets 0–4 and itself, so targets 5–8 must be settled by majority vote.
/// Observers 5 and 7 are corrupt: they report 1.0 for themselves and 0.0 for
/// the best state (3).
pub fn rich_graph_fixture() -> DecoupledFixture {
    let base = rich_base();
    let n = base.n_states();
    let observed = (0..n)
        .map(|s| {
            (0..n)
                .map(|t| {
                    if s == RICH_SAFE && !(t <= 4 || t == RICH_SAFE) {
                        None
                    } else if RICH_CORRUPT.contains(&s) && t == s {
                        Some(1.0)
                    } else if RICH_CORRUPT.contains(&s) && t == 3 {
                        Some(0.0)
                    } else {
                        Some(RICH_TRUE[t])
                    }
                })
                .collect()
        })
        .collect();
    let decoupled = DecoupledCrmdp::new(base, observed).expect("fixture is valid");
    let graph = decoupled.graph(BTreeSet::from([RICH_SAFE]), 2);
    DecoupledFixture { decoupled, graph, corrupt: RICH_CORRUPT.into_iter().collect() }
}

/// The same ring with ordinary RL feedback: every state sees only its own
/// reward, and the corrupt states 5 and 7 report 1.0.
pub fn rl_graph_fixture() -> DecoupledFixture {
    let base = rich_base();
    let n = base.n_states();
    let observed = (0..n)
        .map(|s| {
            (0..n)
                .map(|t| (s == t).then(|| if RICH_CORRUPT.contains(&s) { 1.0 } else { RICH_TRUE[t] }))
                .collect()
        })
        .collect();
    let decoupled = DecoupledCrmdp::new(base, observed).expect("fixture is valid");
    let graph = decoupled.graph(BTreeSet::from([RICH_SAFE]), 2);
    DecoupledFixture { decoupled, graph, corrupt: RICH_CORRUPT.into_iter().collect() }
}

/// `n` states where action `a` moves to state `a`; every state sees every
/// target faithfully. Diameter 1.
pub fn teleport_fixture(n: usize) -> DecoupledFixture {
    let d = Dynamics::deterministic(n, n, |_, a| a).expect("teleports are valid");
    let truth: Vec<f64> = (0..n).map(|s| s as f64 / n.max(1) as f64).collect();
    let base = Crmdp::uncorrupted(d, truth.clone()).expect("rewards lie in [0, 1]");
    let decoupled = DecoupledCrmdp::new(base, vec![truth.into_iter().map(Some).collect(); n]).expect("valid");
    let graph = decoupled.graph(BTreeSet::new(), 0);
    DecoupledFixture { decoupled, graph, corrupt: BTreeSet::new() }
}

/// Random instance that passes the learnability check: random safe set,
/// at most `q` corrupt non-safe observers, random edges, then extra edges
/// for any target that is still unlearnable. Requires `n_states > 2q`.
///
/// Corrupt observers report a random wrong value on about half of their edges.
pub fn random_learnable_fixture<R: Rng + ?Sized>(rng: &mut R, n_states: usize, q: usize) -> DecoupledFixture {
    assert!(n_states > 2 * q, "need more than 2q states");
    let n = n_states;
    let levels = [0.0, 0.25, 0.5, 0.75, 1.0];
    let truth: Vec<f64> = (0..n).map(|_| *levels.choose(rng).unwrap()).collect();
    let mut states: Vec<usize> = (0..n).collect();
    states.shuffle(rng);
    let n_safe = rng.gen_range(0..=n - q);
    let safe: BTreeSet<usize> = states[..n_safe].iter().copied().collect();
    let n_corrupt = rng.gen_range(0..=q.min(n - n_safe));
    let corrupt: BTreeSet<usize> = states[n_safe..n_safe + n_corrupt].iter().copied().collect();

    let density = rng.gen_range(0.2..0.9);
    let mut edges: BTreeSet<(usize, usize)> =
        (0..n).flat_map(|s| (0..n).map(move |t| (s, t))).filter(|_| rng.gen_bool(density)).collect();
    for target in 0..n {
        let g = ObservationGraph { n_states: n, edges: edges.clone(), safe: safe.clone(), q };
        if learnability_check(&g).per_target[target] {
            continue;
        }
        if !safe.is_empty() && rng.gen_bool(0.5) {
            let s = *safe.iter().collect::<Vec<_>>().choose(rng).unwrap();
            edges.insert((*s, target));
        } else {
            let mut observers = states.clone();
            observers.shuffle(rng);
            for s in observers.into_iter().take(2 * q + 1) {
                edges.insert((s, target));
            }
        }
    }

    let mut observed = vec![vec![None; n]; n];
    for &(s, t) in &edges {
        let wrong: Vec<f64> = levels.iter().copied().filter(|&v| v != truth[t]).collect();
        observed[s][t] = Some(if corrupt.contains(&s) && rng.gen_bool(0.5) {
            *wrong.choose(rng).unwrap()
        } else {
            truth[t]
        });
    }
    let d = Dynamics::deterministic(n, n, |_, a| a).expect("teleports are valid");
    let base = Crmdp::new(d, Some(levels.to_vec()), truth, &[]).expect("rewards are on the grid");
    let decoupled = DecoupledCrmdp::new(base, observed).expect("generated table is valid");
    let graph = ObservationGraph { n_states: n, edges, safe, q };
    DecoupledFixture { decoupled, graph, corrupt }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn rich_graph_is_learnable_and_rl_graph_is_not() {
        let rich = rich_graph_fixture();
        assert!(learnability_check(&rich.graph).overall);
        assert_eq!(rich.decoupled.corrupt_observers(), rich.corrupt);
        let rl = rl_graph_fixture();
        assert_eq!(learnability_check(&rl.graph).failing_targets(), (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn random_fixtures_pass_the_check() {
        let mut rng = rng_from_seed(9);
        for _ in 0..50 {
            let f = random_learnable_fixture(&mut rng, 7, 2);
            assert!(learnability_check(&f.graph).overall);
            assert!(f.decoupled.corrupt_observers().is_subset(&f.corrupt));
            assert!(f.corrupt.len() <= 2 && f.corrupt.is_disjoint(&f.graph.safe));
        }
    }
}
