//! Likelihoods and a Bayesian agent for the two-hypothesis CIRL example.

use rand::Rng;
use serde::Serialize;

use super::DecoupledError;
use crate::crmdp::sample_index;
use crate::envs::cirl::{CirlExample, A1, A2, S1, S2, WAIT};
use crate::rng::{derive_seed, rng_from_seed, AGENT_STREAM, ENV_STREAM};

/// One joint step: the agent acts, the human acts, the agent sees the
/// (possibly corrupted) human action and the next state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CirlStep {
    pub state: usize,
    pub action: usize,
    pub observed_human: usize,
    pub next_state: usize,
}

fn step_probability(ex: &CirlExample, h: usize, step: &CirlStep) -> f64 {
    let hyp = &ex.hypotheses[h];
    (0..2)
        .map(|human| {
            hyp.human_policy[step.state][human]
                * ex.observation(h, step.state, human)[step.observed_human]
                * ex.transition(h, step.state, step.action, human)[step.next_state]
        })
        .sum()
}

/// `(P(trajectory | H1), P(trajectory | H2))`, conditioned on the agent's
/// actions.
pub fn cirl_likelihoods(ex: &CirlExample, trajectory: &[CirlStep]) -> Result<(f64, f64), DecoupledError> {
    let mut like = (1.0, 1.0);
    for (i, step) in trajectory.iter().enumerate() {
        let p = (step_probability(ex, 0, step), step_probability(ex, 1, step));
        if p.0 == 0.0 && p.1 == 0.0 {
            return Err(DecoupledError::ZeroLikelihood { step: i });
        }
        like.0 *= p.0;
        like.1 *= p.1;
    }
    Ok(like)
}

/// Samples `t` joint steps from `s1` under hypothesis `truth`, with actions
/// chosen by `policy(state, history)`.
pub fn simulate_cirl(
    ex: &CirlExample,
    truth: usize,
    t: usize,
    seed: u64,
    mut policy: impl FnMut(usize, &[CirlStep]) -> usize,
) -> Vec<CirlStep> {
    let mut rng = rng_from_seed(derive_seed(seed, ENV_STREAM));
    let hyp = &ex.hypotheses[truth];
    let mut steps: Vec<CirlStep> = Vec::with_capacity(t);
    let mut state = S1;
    for _ in 0..t {
        let action = policy(state, &steps);
        let human = sample_index(&hyp.human_policy[state], &mut rng);
        let observed_human = sample_index(&ex.observation(truth, state, human), &mut rng);
        let next_state = sample_index(&ex.transition(truth, state, action, human), &mut rng);
        steps.push(CirlStep { state, action, observed_human, next_state });
        state = next_state;
    }
    steps
}

/// Uniformly random agent actions; used to probe the likelihoods.
pub fn random_cirl_trajectory(ex: &CirlExample, truth: usize, t: usize, seed: u64) -> Vec<CirlStep> {
    let mut rng = rng_from_seed(derive_seed(seed, AGENT_STREAM));
    simulate_cirl(ex, truth, t, seed, |_, _| rng.gen_range(0..3))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CirlRun {
    pub truth: usize,
    pub prior_h2: f64,
    pub likelihoods: (f64, f64),
    pub posterior_h2: f64,
    pub committed_state: usize,
    /// Mean true reward over the `t + 1` visited states.
    pub mean_true_reward: f64,
    pub min_true_reward: f64,
}

/// Bayesian agent with prior `P(H2) = prior_h2`: alternates `a2` and `w` for
/// `explore_steps` steps, then moves to and stays in the state with the
/// highest posterior-expected true reward.
pub fn run_cirl_cr(
    ex: &CirlExample,
    truth: usize,
    prior_h2: f64,
    explore_steps: usize,
    t: usize,
    seed: u64,
) -> Result<CirlRun, DecoupledError> {
    if !(0.0..=1.0).contains(&prior_h2) {
        return Err(DecoupledError::Prior(prior_h2));
    }
    let mut committed: Option<usize> = None;
    let mut error = None;
    let steps = simulate_cirl(ex, truth, t, seed, |_, history| {
        if history.len() < explore_steps {
            return if history.len() % 2 == 0 { A2 } else { WAIT };
        }
        let target = *committed.get_or_insert_with(|| match posterior_h2(ex, prior_h2, history) {
            Ok(p2) => preferred_state(ex, p2),
            Err(e) => {
                error = Some(e);
                S1
            }
        });
        if target == S1 { A1 } else { A2 }
    });
    if let Some(e) = error {
        return Err(e);
    }
    let likelihoods = cirl_likelihoods(ex, &steps)?;
    let p2 = posterior_h2(ex, prior_h2, &steps)?;
    let committed_state = committed.unwrap_or_else(|| preferred_state(ex, p2));
    let reward = ex.hypotheses[truth].true_reward;
    let visited = std::iter::once(S1).chain(steps.iter().map(|s| s.next_state));
    let total: f64 = visited.map(|s| reward[s]).sum();
    Ok(CirlRun {
        truth,
        prior_h2,
        likelihoods,
        posterior_h2: p2,
        committed_state,
        mean_true_reward: total / (t + 1) as f64,
        min_true_reward: reward[S1].min(reward[S2]),
    })
}

fn posterior_h2(ex: &CirlExample, prior_h2: f64, history: &[CirlStep]) -> Result<f64, DecoupledError> {
    let (l1, l2) = cirl_likelihoods(ex, history)?;
    let w1 = (1.0 - prior_h2) * l1;
    let w2 = prior_h2 * l2;
    Ok(w2 / (w1 + w2))
}

fn preferred_state(ex: &CirlExample, p2: f64) -> usize {
    let expected = |s: usize| (1.0 - p2) * ex.hypotheses[0].true_reward[s] + p2 * ex.hypotheses[1].true_reward[s];
    if expected(S2) > expected(S1) { S2 } else { S1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::cirl_example;

    #[test]
    fn empty_trajectory_has_unit_likelihood() {
        assert_eq!(cirl_likelihoods(&cirl_example(), &[]).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn likelihoods_agree_exactly() {
        let ex = cirl_example();
        for seed in 0..50 {
            let tr = random_cirl_trajectory(&ex, (seed % 2) as usize, 20, seed);
            let (a, b) = cirl_likelihoods(&ex, &tr).unwrap();
            assert_eq!(a, b);
            assert!(a > 0.0);
        }
    }

    #[test]
    fn impossible_step_is_an_error() {
        let ex = cirl_example();
        let bad = CirlStep { state: S1, action: A1, observed_human: 0, next_state: S2 };
        assert!(matches!(cirl_likelihoods(&ex, &[bad]), Err(DecoupledError::ZeroLikelihood { step: 0 })));
    }

    #[test]
    fn cr_agent_commits_to_s2_and_suffers() {
        let run = run_cirl_cr(&cirl_example(), 0, 0.6, 20, 10_000, 3).unwrap();
        assert_eq!(run.committed_state, S2);
        assert!((run.posterior_h2 - 0.6).abs() < 1e-12);
        assert!((run.mean_true_reward - run.min_true_reward).abs() < 0.02);
    }
}
