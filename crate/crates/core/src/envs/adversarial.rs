use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::crmdp::{Crmdp, Dynamics};

/// Parameters of the teleport class used to show that RL and CR agents can
/// be driven to near-maximal regret.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialClassSpec {
    pub n_risky: usize,
    #[serde(default)]
    pub safe_states: usize,
    pub q: usize,
    /// Upper bound on the number of generated members.
    #[serde(default = "default_cap")]
    pub member_cap: usize,
}

fn default_cap() -> usize {
    1024
}

impl AdversarialClassSpec {
    pub fn new(n_risky: usize) -> Self {
        Self { n_risky, safe_states: 0, q: 2, member_cap: default_cap() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MemberKind {
    /// `Ṙ(s_i) = i/n`, no corruption.
    Reference,
    /// The target already has the lowest observed reward: identity corruption.
    Case1 { target: usize },
    /// `Ṙ(target) = r_min` and `Ṙ(lowest) = 1`, with the corruption of those
    /// two states restoring the reference's observed rewards.
    Case2 { target: usize, lowest: usize },
}

#[derive(Debug, Clone)]
pub struct ClassMember {
    pub kind: MemberKind,
    pub crmdp: Crmdp,
}

/// States `0..n_risky` are `s_1..s_n`; the safe states follow. Action `a_i`
/// moves to state `i` from anywhere.
#[derive(Debug, Clone)]
pub struct AdversarialClass {
    pub spec: AdversarialClassSpec,
    pub members: Vec<ClassMember>,
}

impl AdversarialClass {
    pub fn r_min(&self) -> f64 {
        1.0 / self.spec.n_risky as f64
    }

    pub fn safe_set(&self) -> BTreeSet<usize> {
        (self.spec.n_risky..self.spec.n_risky + self.spec.safe_states).collect()
    }

    pub fn reference(&self) -> &Crmdp {
        &self.members[0].crmdp
    }

    /// The Case-2 member for the state with the highest observed reward,
    /// which is where an agent that trusts the reference ends up.
    pub fn planted_worst(&self) -> &ClassMember {
        let top = self.spec.n_risky - 1;
        self.members
            .iter()
            .find(|m| matches!(m.kind, MemberKind::Case2 { target, .. } if target == top))
            .expect("the worst member is always generated")
    }

    pub fn crmdps(&self) -> Vec<Crmdp> {
        self.members.iter().map(|m| m.crmdp.clone()).collect()
    }

    /// Prior with `reference_weight` on the reference member and the rest
    /// spread evenly over the others.
    pub fn reference_prior(&self, reference_weight: f64) -> Vec<f64> {
        let k = self.members.len();
        if k == 1 {
            return vec![1.0];
        }
        let rest = (1.0 - reference_weight) / (k - 1) as f64;
        (0..k).map(|i| if i == 0 { reference_weight } else { rest }).collect()
    }
}

pub fn adversarial_class(spec: &AdversarialClassSpec) -> Result<AdversarialClass, EnvError> {
    let n = spec.n_risky;
    if n < 2 {
        return Err(EnvError::Parameter(format!("n_risky must be at least 2, got {n}")));
    }
    if spec.q < 2 {
        return Err(EnvError::Parameter(format!("the construction corrupts two states; q = {} is too small", spec.q)));
    }
    if spec.member_cap < 3 {
        return Err(EnvError::Parameter("member_cap must allow at least 3 members".into()));
    }
    let total = n + spec.safe_states;
    let grid: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let r_min = grid[0];
    let dynamics = Dynamics::deterministic(total, total, |_, a| a)?;
    let mut reference_reward = grid.clone();
    reference_reward.resize(total, r_min);
    let reference = Crmdp::new(dynamics, Some(grid.clone()), reference_reward.clone(), &[])?;

    let lowest = 0;
    let mut members = vec![
        ClassMember { kind: MemberKind::Reference, crmdp: reference.clone() },
        ClassMember { kind: MemberKind::Case1 { target: lowest }, crmdp: reference.clone() },
    ];
    for target in (1..n).rev() {
        if members.len() >= spec.member_cap {
            break;
        }
        let mut true_reward = reference_reward.clone();
        true_reward[target] = r_min;
        true_reward[lowest] = 1.0;
        let pairs = [(target, r_min, grid[target]), (lowest, 1.0, r_min)];
        members.push(ClassMember {
            kind: MemberKind::Case2 { target, lowest },
            crmdp: reference.with_rewards(true_reward, &pairs)?,
        });
    }
    Ok(AdversarialClass { spec: spec.clone(), members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crmdp::validate_assumptions;

    #[test]
    fn two_risky_states_give_half() {
        let c = adversarial_class(&AdversarialClassSpec::new(2)).unwrap();
        assert_eq!(c.r_min(), 0.5);
        assert_eq!(c.members.len(), 3);
    }

    #[test]
    fn members_share_observations_and_satisfy_assumptions() {
        let mut spec = AdversarialClassSpec::new(8);
        spec.safe_states = 2;
        let c = adversarial_class(&spec).unwrap();
        for m in &c.members {
            assert_eq!(m.crmdp.observed_rewards(), c.reference().observed_rewards());
            let r = validate_assumptions(&m.crmdp, &c.safe_set(), spec.q);
            assert!(r.limited_corruption(), "{:?}", m.kind);
            assert!(r.easy(), "{:?}", m.kind);
            assert!(r.high_observed_reward_prevalence);
            assert!(r.corrupt_risky_states <= 2);
        }
        let worst = c.planted_worst();
        assert_eq!(worst.crmdp.true_reward(7), 0.125);
        assert_eq!(worst.crmdp.true_reward(0), 1.0);
    }

    #[test]
    fn cap_keeps_the_worst_member() {
        let mut spec = AdversarialClassSpec::new(6);
        spec.member_cap = 3;
        let c = adversarial_class(&spec).unwrap();
        assert_eq!(c.members.len(), 3);
        assert!(matches!(c.planted_worst().kind, MemberKind::Case2 { target: 5, .. }));
    }
}
