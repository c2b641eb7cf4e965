use std::collections::BTreeSet;

use serde::Serialize;

use super::{Crmdp, REWARD_TOL};

/// Which of the limited-corruption and easy-environment conditions hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssumptionReport {
    /// Every safe state has identity corruption.
    pub safe_states_uncorrupted: bool,
    /// Number of risky states whose corruption is not the identity.
    pub corrupt_risky_states: usize,
    /// `corrupt_risky_states <= q`.
    pub corruption_within_budget: bool,
    pub communicating: bool,
    /// Every state has an action with `T(s | s, a) = 1`.
    pub stay_actions: bool,
    /// For every δ ∈ [0, 1], at most `δ · |S_risky|` risky states have true reward below δ.
    pub high_true_reward_prevalence: bool,
    /// The same condition evaluated on the observed reward.
    pub high_observed_reward_prevalence: bool,
}

impl AssumptionReport {
    /// Both parts of limited reward corruption.
    pub fn limited_corruption(&self) -> bool {
        self.safe_states_uncorrupted && self.corruption_within_budget
    }

    /// All three parts of the easy-environment assumption (on the true reward).
    pub fn easy(&self) -> bool {
        self.communicating && self.stay_actions && self.high_true_reward_prevalence
    }
}

pub fn validate_assumptions(m: &Crmdp, safe: &BTreeSet<usize>, q: usize) -> AssumptionReport {
    let n = m.n_states();
    let risky: Vec<usize> = (0..n).filter(|s| !safe.contains(s)).collect();
    let corrupt_risky_states = risky.iter().filter(|&&s| m.corruption().is_corrupt(s)).count();
    let risky_true: Vec<f64> = risky.iter().map(|&s| m.true_reward(s)).collect();
    let risky_observed: Vec<f64> = risky.iter().map(|&s| m.observed_reward(s)).collect();
    AssumptionReport {
        safe_states_uncorrupted: safe.iter().all(|&s| s >= n || !m.corruption().is_corrupt(s)),
        corrupt_risky_states,
        corruption_within_budget: corrupt_risky_states <= q,
        communicating: m.dynamics().is_communicating(),
        stay_actions: (0..n).all(|s| m.dynamics().stay_action(s).is_some()),
        high_true_reward_prevalence: prevalence_holds(&risky_true),
        high_observed_reward_prevalence: prevalence_holds(&risky_observed),
    }
}

/// `|{s : r(s) < δ}| ≤ δ · n` for all δ ∈ [0, 1].
///
/// The count is a step function that only changes at reward values, so the
/// binding cases are δ just above each value `v`, where the condition reads
/// `|{s : r(s) ≤ v}| ≤ v · n`.
fn prevalence_holds(rewards: &[f64]) -> bool {
    let n = rewards.len() as f64;
    rewards.iter().all(|&v| {
        let at_most = rewards.iter().filter(|&&r| r <= v + REWARD_TOL).count() as f64;
        at_most <= v * n + REWARD_TOL
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crmdp::Dynamics;

    #[test]
    fn identity_everywhere_with_zero_budget() {
        let d = Dynamics::deterministic(2, 2, |_, a| a).unwrap();
        let m = Crmdp::uncorrupted(d, vec![0.5, 1.0]).unwrap();
        let r = validate_assumptions(&m, &BTreeSet::new(), 0);
        assert!(r.limited_corruption());
        assert!(r.easy());
    }

    #[test]
    fn missing_stay_action_is_reported() {
        let d = Dynamics::deterministic(2, 1, |s, _| 1 - s).unwrap();
        let m = Crmdp::uncorrupted(d, vec![1.0, 1.0]).unwrap();
        let r = validate_assumptions(&m, &BTreeSet::new(), 0);
        assert!(r.communicating);
        assert!(!r.stay_actions);
    }

    #[test]
    fn corrupt_safe_state_and_budget() {
        let d = Dynamics::deterministic(3, 3, |_, a| a).unwrap();
        let m = Crmdp::new(d, None, vec![0.0, 1.0, 1.0], &[(0, 0.0, 1.0)]).unwrap();
        let r = validate_assumptions(&m, &BTreeSet::from([0]), 0);
        assert!(!r.safe_states_uncorrupted);
        assert_eq!(r.corrupt_risky_states, 0);
        let r = validate_assumptions(&m, &BTreeSet::new(), 0);
        assert_eq!(r.corrupt_risky_states, 1);
        assert!(!r.corruption_within_budget);
    }

    #[test]
    fn prevalence_uses_right_limits() {
        // Rewards k/n for k = 1..n: exactly on the boundary.
        assert!(prevalence_holds(&[0.25, 0.5, 0.75, 1.0]));
        // Two states at 0.25 out of four: |{r ≤ 0.25}| = 2 > 1.
        assert!(!prevalence_holds(&[0.25, 0.25, 0.75, 1.0]));
        assert!(!prevalence_holds(&[0.0, 1.0]));
    }
}
