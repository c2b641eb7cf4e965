use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use super::{DecoupledCrmdp, DecoupledError, ObservationTriple};
use crate::rng::{derive_seed, rng_from_seed, AGENT_STREAM, ENV_STREAM};

/// `N = 4 D |A|^{2D} |S|³` with `D` rounded up to an integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExplorationBound {
    pub value: f64,
    pub diameter: u32,
    /// `D = 0`: the formula gives 0, which says nothing about a walk that
    /// still needs one step to observe anything.
    pub degenerate: bool,
}

pub fn exploration_bound(n_states: usize, n_actions: usize, diameter: f64) -> ExplorationBound {
    let d = diameter.max(0.0).ceil() as u32;
    let value = 4.0 * d as f64 * (n_actions as f64).powi(2 * d as i32) * (n_states as f64).powi(3);
    ExplorationBound { value, diameter: d, degenerate: d == 0 }
}

/// Everything a random-walk exploration run collected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplorationRecord {
    /// First report for each edge, in the order they were collected.
    pub observations: Vec<ObservationTriple>,
    /// Number of time steps (observation draws) until the last edge was seen.
    pub steps: u64,
    pub bound: ExplorationBound,
}

/// Uniformly random actions until every non-blank pair `(s, s')` has been
/// observed. Each step the target `s'` is drawn uniformly from all states;
/// blank draws carry no information.
///
/// `limit` defaults to 100 times the analytic bound (at least 1000 steps).
pub fn explore(dm: &DecoupledCrmdp, s0: usize, seed: u64, limit: Option<u64>) -> Result<ExplorationRecord, DecoupledError> {
    let m = dm.base();
    let n = m.n_states();
    if s0 >= n {
        return Err(DecoupledError::State(s0));
    }
    let bound = exploration_bound(n, m.n_actions(), m.diameter()?);
    let limit = limit.unwrap_or_else(|| (100.0 * bound.value).clamp(1000.0, u64::MAX as f64) as u64);
    let mut missing: BTreeSet<(usize, usize)> = (0..n)
        .flat_map(|s| (0..n).filter(move |&t| dm.observe(s, t).is_some()).map(move |t| (s, t)))
        .collect();
    let mut env_rng = rng_from_seed(derive_seed(seed, ENV_STREAM));
    let mut agent_rng = rng_from_seed(derive_seed(seed, AGENT_STREAM));
    let mut observations = Vec::with_capacity(missing.len());
    let mut state = s0;
    let mut steps = 0;
    while !missing.is_empty() {
        if steps == limit {
            return Err(DecoupledError::StepLimit { limit, missing: missing.len(), first: missing.first().copied() });
        }
        steps += 1;
        let target = env_rng.gen_range(0..n);
        if let Some(value) = dm.observe(state, target) {
            if missing.remove(&(state, target)) {
                observations.push((state, target, value));
            }
        }
        if missing.is_empty() {
            break;
        }
        let action = agent_rng.gen_range(0..m.n_actions());
        state = m.dynamics().sample(state, action, &mut env_rng);
    }
    Ok(ExplorationRecord { observations, steps, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crmdp::{Crmdp, Dynamics};

    #[test]
    fn bound_arithmetic() {
        assert_eq!(exploration_bound(2, 5, 1.0).value, 800.0);
        assert_eq!(exploration_bound(3, 2, 2.0).value, 3456.0);
        assert_eq!(exploration_bound(3, 2, 1.5).value, 3456.0);
        let b = exploration_bound(1, 3, 0.0);
        assert_eq!(b.value, 0.0);
        assert!(b.degenerate);
    }

    #[test]
    fn single_state_takes_one_step() {
        let m = Crmdp::uncorrupted(Dynamics::deterministic(1, 1, |_, _| 0).unwrap(), vec![0.5]).unwrap();
        let rec = explore(&DecoupledCrmdp::self_observing(m), 0, 3, None).unwrap();
        assert_eq!(rec.steps, 1);
        assert_eq!(rec.observations, vec![(0, 0, 0.5)]);
    }

    #[test]
    fn chain_collects_every_edge() {
        let d = Dynamics::deterministic(4, 2, |s, a| if a == 0 { s.saturating_sub(1) } else { (s + 1).min(3) }).unwrap();
        let m = Crmdp::uncorrupted(d, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        let dm = DecoupledCrmdp::new(m.clone(), vec![vec![Some(0.0), Some(0.25), Some(0.5), Some(1.0)]; 4]).unwrap();
        for seed in 0..20 {
            assert_eq!(explore(&dm, 0, seed, None).unwrap().observations.len(), 16);
        }
    }

    #[test]
    fn step_limit_reports_missing_edges() {
        let d = Dynamics::deterministic(3, 1, |s, _| (s + 1) % 3).unwrap();
        let m = Crmdp::uncorrupted(d, vec![0.0, 0.5, 1.0]).unwrap();
        let dm = DecoupledCrmdp::new(m, vec![vec![Some(0.0), Some(0.5), Some(1.0)]; 3]).unwrap();
        assert!(matches!(explore(&dm, 0, 1, Some(2)), Err(DecoupledError::StepLimit { limit: 2, .. })));
    }
}
