use super::EnvError;
use crate::crmdp::{Crmdp, Dynamics};

/// Two states: action 0 leads to `s1` (`Ṙ = R̂ = 1 − ε`), every other action
/// to `s2` (`Ṙ = 0`, `R̂ = 1`). Picking actions at random from `s1` mostly
/// ends up in the corrupt state.
pub fn softmax_counterexample(n_actions: usize, eps: f64) -> Result<Crmdp, EnvError> {
    if n_actions <= 2 {
        return Err(EnvError::Parameter(format!("need more than 2 actions, got {n_actions}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(EnvError::Parameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let dynamics = Dynamics::deterministic(2, n_actions, |_, a| usize::from(a != 0))?;
    Ok(Crmdp::new(dynamics, None, vec![1.0 - eps, 0.0], &[(1, 0.0, 1.0)])?)
}

/// Clockwise and counter-clockwise moves on a 4-cycle with `R̂ = (0, 1, 0, 1)`.
pub const LOOP_CW: usize = 0;
pub const LOOP_CCW: usize = 1;

pub fn loop_crmdp() -> Crmdp {
    let dynamics = Dynamics::deterministic(4, 2, |s, a| if a == LOOP_CW { (s + 1) % 4 } else { (s + 3) % 4 })
        .expect("static model");
    Crmdp::uncorrupted(dynamics, vec![0.0, 1.0, 0.0, 1.0]).expect("static model")
}

/// A single absorbing state with the given reward.
pub fn absorbing(reward: f64) -> Result<Crmdp, EnvError> {
    Ok(Crmdp::uncorrupted(Dynamics::deterministic(1, 1, |_, _| 0)?, vec![reward])?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_rewards_and_transitions() {
        let m = softmax_counterexample(10, 0.05).unwrap();
        assert_eq!(m.true_rewards(), &[0.95, 0.0]);
        assert_eq!(m.observed_rewards(), &[0.95, 1.0]);
        let to_s2 = (0..10).filter(|&a| m.dynamics().row(0, a)[0].0 == 1).count();
        assert_eq!(to_s2, 9);
        assert!(softmax_counterexample(2, 0.05).is_err());
        assert!(softmax_counterexample(5, 1.0).is_err());
    }

    #[test]
    fn loop_moves_both_ways() {
        let m = loop_crmdp();
        assert_eq!(m.dynamics().row(3, LOOP_CW)[0].0, 0);
        assert_eq!(m.dynamics().row(0, LOOP_CCW)[0].0, 3);
        assert_eq!(m.observed_rewards(), &[0.0, 1.0, 0.0, 1.0]);
    }
}
