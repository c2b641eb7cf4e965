use crate::crmdp::{Crmdp, REWARD_TOL};

use super::AgentError;

const PRIOR_TOL: f64 = 1e-12;

/// Belief over a finite class of CRMDPs sharing `S` and `A`.
///
/// Observed rewards are deterministic functions of the state, so conditioning
/// on an observation only removes members whose `R̂(s)` disagrees; the
/// posterior is the renormalised prior on the surviving members.
#[derive(Debug, Clone)]
pub struct BeliefState {
    members: Vec<Crmdp>,
    prior: Vec<f64>,
    posterior: Vec<f64>,
    consistent: Vec<bool>,
    observations: Vec<Option<f64>>,
}

impl BeliefState {
    /// `prior` is normalised; every weight must be positive.
    pub fn new(members: Vec<Crmdp>, prior: Vec<f64>) -> Result<Self, AgentError> {
        let first = members.first().ok_or(AgentError::EmptyClass)?;
        let (n, k) = (first.n_states(), first.n_actions());
        if members.iter().any(|m| m.n_states() != n) {
            return Err(AgentError::ClassMismatch("state count"));
        }
        if members.iter().any(|m| m.n_actions() != k) {
            return Err(AgentError::ClassMismatch("action count"));
        }
        if prior.len() != members.len() || prior.iter().any(|&p| p.is_nan() || p <= 0.0 || p.is_infinite()) {
            return Err(AgentError::BadPrior);
        }
        let total: f64 = prior.iter().sum();
        let prior: Vec<f64> = prior.iter().map(|p| p / total).collect();
        debug_assert!((prior.iter().sum::<f64>() - 1.0).abs() <= PRIOR_TOL * members.len() as f64);
        Ok(Self {
            posterior: prior.clone(),
            consistent: vec![true; members.len()],
            observations: vec![None; n],
            members,
            prior,
        })
    }

    pub fn uniform(members: Vec<Crmdp>) -> Result<Self, AgentError> {
        let prior = vec![1.0; members.len()];
        Self::new(members, prior)
    }

    pub fn members(&self) -> &[Crmdp] {
        &self.members
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn observations(&self) -> &[Option<f64>] {
        &self.observations
    }

    pub fn n_states(&self) -> usize {
        self.observations.len()
    }

    /// Conditions on `R̂(state) = reward`. If no remaining member agrees the
    /// belief is left untouched and an error is returned.
    pub fn update(&mut self, state: usize, reward: f64) -> Result<(), AgentError> {
        let agrees = |m: &Crmdp| (m.observed_reward(state) - reward).abs() <= REWARD_TOL;
        let next: Vec<bool> = self
            .members
            .iter()
            .zip(&self.consistent)
            .map(|(m, &ok)| ok && agrees(m))
            .collect();
        let mass: f64 = self.prior.iter().zip(&next).filter(|(_, &ok)| ok).map(|(p, _)| p).sum();
        if mass <= 0.0 {
            return Err(AgentError::Inconsistent { state, reward });
        }
        self.posterior = self
            .prior
            .iter()
            .zip(&next)
            .map(|(&p, &ok)| if ok { p / mass } else { 0.0 })
            .collect();
        self.consistent = next;
        self.observations[state] = Some(reward);
        Ok(())
    }

    /// `E_b[Ṙ(s) | h]`: the members' hypothesised true rewards, not the environment's.
    pub fn expected_true_reward(&self, state: usize) -> f64 {
        self.expect(|m| m.true_reward(state))
    }

    pub fn expected_observed_reward(&self, state: usize) -> f64 {
        self.expect(|m| m.observed_reward(state))
    }

    fn expect(&self, f: impl Fn(&Crmdp) -> f64) -> f64 {
        self.members
            .iter()
            .zip(&self.posterior)
            .filter(|(_, &p)| p > 0.0)
            .map(|(m, &p)| p * f(m))
            .sum()
    }

    /// Back to the prior with no observations.
    pub fn reset(&mut self) {
        self.posterior.clone_from(&self.prior);
        self.consistent.fill(true);
        self.observations.fill(None);
    }
}
