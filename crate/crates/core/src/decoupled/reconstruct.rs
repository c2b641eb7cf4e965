use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{DecoupledError, ObservationGraph, ObservationTriple};
use crate::crmdp::REWARD_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    SafeState,
    MajorityVote,
    /// With at most `2q` observers: the only value that at most `q` of the
    /// reports contradict.
    Consistency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Unresolved {
    NoReports,
    /// Only `observers` distinct non-safe observers reported; more than `2q` are needed.
    TooFewObservers { observers: usize, q: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TargetOutcome {
    Known { value: f64, method: Method },
    Unresolvable(Unresolved),
}

impl TargetOutcome {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Self::Known { value, .. } => Some(value),
            Self::Unresolvable(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub outcomes: Vec<TargetOutcome>,
    /// Observers that reported a value disagreeing with a known one.
    pub corrupt_observer_candidates: BTreeSet<usize>,
}

impl Reconstruction {
    /// The full reward function when every target is known.
    pub fn reward(&self) -> Option<Vec<f64>> {
        self.outcomes.iter().map(TargetOutcome::value).collect()
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= REWARD_TOL
}

/// Recovers `Ṙ(s')` for each target from the collected reports.
///
/// A safe observer's report is taken as is. Otherwise, with more than `2q`
/// distinct observers, at most `q` can be wrong and the right ones agree, so
/// the strict-majority value is returned. With fewer observers a value is
/// still returned when it is the only one that at most `q` wrong reports
/// could hide (e.g. `q + 1` observers in agreement). Repeated reports from the same
/// observer count once (and must agree).
pub fn reconstruct(observations: &[ObservationTriple], g: &ObservationGraph) -> Result<Reconstruction, DecoupledError> {
    let n = g.n_states;
    let mut reports: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for &(observer, target, value) in observations {
        if observer >= n || target >= n {
            return Err(DecoupledError::State(observer.max(target)));
        }
        match reports[target].get(&observer) {
            Some(&old) if !same(old, value) => return Err(DecoupledError::ObserverConflict { observer, target }),
            Some(_) => {}
            None => {
                reports[target].insert(observer, value);
            }
        }
    }

    let mut outcomes = Vec::with_capacity(n);
    let mut suspects = BTreeSet::new();
    for (target, by_observer) in reports.iter().enumerate() {
        let outcome = resolve(target, by_observer, g)?;
        if let TargetOutcome::Known { value, .. } = outcome {
            suspects.extend(by_observer.iter().filter(|&(_, &v)| !same(v, value)).map(|(&s, _)| s));
        }
        outcomes.push(outcome);
    }
    Ok(Reconstruction { outcomes, corrupt_observer_candidates: suspects })
}

fn resolve(target: usize, by_observer: &BTreeMap<usize, f64>, g: &ObservationGraph) -> Result<TargetOutcome, DecoupledError> {
    if by_observer.is_empty() {
        return Ok(TargetOutcome::Unresolvable(Unresolved::NoReports));
    }
    let safe: Vec<f64> = by_observer.iter().filter(|(s, _)| g.safe.contains(s)).map(|(_, &v)| v).collect();
    if let Some(&first) = safe.first() {
        if safe.iter().any(|&v| !same(v, first)) {
            return Err(DecoupledError::SafeConflict { target, values: safe });
        }
        return Ok(TargetOutcome::Known { value: first, method: Method::SafeState });
    }
    let observers = by_observer.len();
    let mut tally: Vec<(f64, usize)> = Vec::new();
    for &v in by_observer.values() {
        match tally.iter_mut().find(|(u, _)| same(*u, v)) {
            Some(entry) => entry.1 += 1,
            None => tally.push((v, 1)),
        }
    }
    if observers <= 2 * g.q {
        // A value is possible iff the reports against it could all be lies.
        // Unreported values are contradicted by every observer.
        let possible: Vec<f64> = tally.iter().filter(|&&(_, c)| observers - c <= g.q).map(|&(v, _)| v).collect();
        return Ok(match possible.as_slice() {
            [value] if observers > g.q => TargetOutcome::Known { value: *value, method: Method::Consistency },
            _ => TargetOutcome::Unresolvable(Unresolved::TooFewObservers { observers, q: g.q }),
        });
    }
    match tally.into_iter().find(|&(_, c)| 2 * c > observers) {
        Some((value, _)) => Ok(TargetOutcome::Known { value, method: Method::MajorityVote }),
        None => Err(DecoupledError::NoMajority { target, observers }),
    }
}

/// Brute force: every `Ṙ ∈ rewards^|S|` for which some set of at most `q`
/// non-safe observers explains all disagreeing reports. Exponential; meant
/// for checking tiny instances.
pub fn consistent_reward_functions(
    observations: &[ObservationTriple],
    g: &ObservationGraph,
    rewards: &[f64],
) -> Vec<Vec<f64>> {
    let n = g.n_states;
    let total = rewards.len().pow(n as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let candidate: Vec<f64> = (0..n)
            .map(|_| {
                let r = rewards[c % rewards.len()];
                c /= rewards.len();
                r
            })
            .collect();
        let liars: BTreeSet<usize> = observations
            .iter()
            .filter(|&&(_, t, v)| !same(candidate[t], v))
            .map(|&(s, _, _)| s)
            .collect();
        if liars.len() <= g.q && liars.is_disjoint(&g.safe) {
            out.push(candidate);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_graph(n: usize, safe: &[usize], q: usize) -> ObservationGraph {
        ObservationGraph::new(n, (0..n).flat_map(|s| (0..n).map(move |t| (s, t))), safe.iter().copied(), q).unwrap()
    }

    #[test]
    fn two_state_decoupled_reports_agree() {
        let g = full_graph(2, &[], 1);
        let obs = [(0, 0, 0.0), (0, 1, 1.0), (1, 0, 0.0), (1, 1, 1.0)];
        let r = reconstruct(&obs, &g).unwrap();
        assert_eq!(r.reward(), Some(vec![0.0, 1.0]));
        assert_eq!(r.outcomes[0], TargetOutcome::Known { value: 0.0, method: Method::Consistency });
        assert_eq!(consistent_reward_functions(&obs, &g, &[0.0, 1.0]), vec![vec![0.0, 1.0]]);
    }

    #[test]
    fn rl_variant_is_unresolvable() {
        let g = ObservationGraph::new(2, [(0, 0), (1, 1)], [], 1).unwrap();
        let obs = [(0, 0, 0.0), (1, 1, 1.0)];
        let r = reconstruct(&obs, &g).unwrap();
        assert!(r.outcomes.iter().all(|o| o.value().is_none()));
        let consistent = consistent_reward_functions(&obs, &g, &[0.0, 1.0]);
        assert_eq!(consistent, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn majority_of_five() {
        let g = full_graph(5, &[], 2);
        let obs: Vec<_> = [0.9, 0.9, 0.9, 0.2, 0.5].iter().enumerate().map(|(s, &v)| (s, 0, v)).collect();
        let r = reconstruct(&obs, &g).unwrap();
        assert_eq!(r.outcomes[0], TargetOutcome::Known { value: 0.9, method: Method::MajorityVote });
        assert_eq!(r.corrupt_observer_candidates, BTreeSet::from([3, 4]));
    }

    #[test]
    fn exactly_two_q_observers_is_unresolvable() {
        let g = full_graph(4, &[], 2);
        let obs = [(0, 0, 0.1), (1, 0, 0.1), (2, 0, 0.8), (3, 0, 0.8)];
        let r = reconstruct(&obs, &g).unwrap();
        assert_eq!(r.outcomes[0], TargetOutcome::Unresolvable(Unresolved::TooFewObservers { observers: 4, q: 2 }));
    }

    #[test]
    fn safe_report_wins_and_conflicts_are_errors() {
        let g = full_graph(3, &[2], 1);
        let r = reconstruct(&[(0, 1, 0.0), (2, 1, 0.7)], &g).unwrap();
        assert_eq!(r.outcomes[1], TargetOutcome::Known { value: 0.7, method: Method::SafeState });
        let g = full_graph(3, &[1, 2], 1);
        assert!(matches!(reconstruct(&[(1, 0, 0.0), (2, 0, 0.7)], &g), Err(DecoupledError::SafeConflict { .. })));
        assert!(matches!(reconstruct(&[(1, 0, 0.0), (1, 0, 0.7)], &g), Err(DecoupledError::ObserverConflict { .. })));
    }

    #[test]
    fn duplicate_reports_count_once() {
        let g = full_graph(3, &[], 1);
        let obs = [(0, 0, 0.5), (0, 0, 0.5), (0, 0, 0.5), (1, 0, 0.2)];
        assert!(reconstruct(&obs, &g).unwrap().outcomes[0].value().is_none());
    }
}
