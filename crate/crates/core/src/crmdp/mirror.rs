use super::{Crmdp, CrmdpError, Result};

/// The mirror model `μ⁻` with `Ṙ⁻(s) = 1 − Ṙ(s)` and `C⁻_s(x) = C_s(1 − x)`.
///
/// Both models induce the same observed reward function and therefore the
/// same distribution over observed histories for every policy, while their
/// true rewards sum to one in every state. Requires `R` to be closed under
/// `r ↦ 1 − r`.
pub fn mirror(m: &Crmdp) -> Result<Crmdp> {
    let flip = |r: f64| m.snap_reward(1.0 - r).ok_or(CrmdpError::NotMirrorClosed(r));
    for &r in m.rewards() {
        flip(r)?;
    }
    let true_reward = m
        .true_rewards()
        .iter()
        .map(|&r| flip(r))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for s in 0..m.n_states() {
        for &x in m.rewards() {
            pairs.push((s, x, m.corruption().apply(s, flip(x)?)));
        }
    }
    m.with_rewards(true_reward, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crmdp::Dynamics;

    #[test]
    fn half_reward_is_a_fixed_point() {
        let d = Dynamics::deterministic(2, 1, |s, _| s).unwrap();
        let m = Crmdp::new(d, Some(vec![0.0, 0.5, 1.0]), vec![0.5, 0.5], &[]).unwrap();
        let mm = mirror(&m).unwrap();
        assert_eq!(mm.true_rewards(), &[0.5, 0.5]);
        assert_eq!(mm.observed_rewards(), m.observed_rewards());
    }

    #[test]
    fn mirror_preserves_observed_and_flips_true() {
        let d = Dynamics::deterministic(3, 2, |s, a| (s + a) % 3).unwrap();
        let m = Crmdp::new(d, Some(vec![0.0, 0.1, 0.9, 1.0]), vec![0.0, 0.9, 0.1], &[(0, 0.0, 1.0), (2, 0.1, 0.9)]).unwrap();
        let mm = mirror(&m).unwrap();
        assert_eq!(mm.observed_rewards(), m.observed_rewards());
        for s in 0..3 {
            assert_eq!(m.true_reward(s) + mm.true_reward(s), 1.0);
        }
        assert_eq!(mirror(&mm).unwrap(), m);
    }

    #[test]
    fn open_reward_set_is_rejected() {
        let d = Dynamics::deterministic(1, 1, |_, _| 0).unwrap();
        let m = Crmdp::uncorrupted(d, vec![0.3]).unwrap();
        assert!(matches!(mirror(&m), Err(CrmdpError::NotMirrorClosed(r)) if r == 0.3));
    }
}
