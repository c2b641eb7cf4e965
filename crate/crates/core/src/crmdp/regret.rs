use serde::Serialize;

use super::{informed_optimum, run_episode, Crmdp, CrmdpError, OptimumEstimate, PolicyKind, Result, DEFAULT_DP_BUDGET};
use crate::rng::derive_seed;

/// Regret of a policy against the informed optimum, estimated by Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretReport {
    /// `max_π' G_t(μ, π', s0)`.
    pub informed_optimum: f64,
    /// Whether the optimum was extrapolated rather than computed exactly.
    pub optimum_approximate: bool,
    /// Mean of `Σ_{k=0}^t ṙ_k` over runs.
    pub agent_return: f64,
    pub regret: f64,
    pub time_averaged: f64,
    pub horizon: usize,
    pub runs: usize,
    /// Standard error of `agent_return` (zero for a single run).
    pub std_error: f64,
}

/// Regret with the exact finite-horizon optimum; propagates
/// [`CrmdpError::BudgetExceeded`].
pub fn regret(m: &Crmdp, policy: &mut PolicyKind, s0: usize, t: usize, runs: usize, seed: u64) -> Result<RegretReport> {
    let optimum = informed_optimum(m, s0, t, DEFAULT_DP_BUDGET)?;
    regret_against(
        m,
        policy,
        s0,
        t,
        runs,
        seed,
        OptimumEstimate { value: optimum, approximate: false },
    )
}

/// Regret against a caller-supplied optimum (e.g. an extrapolated one).
/// Run `i` uses seed `derive_seed(seed, i)`.
pub fn regret_against(
    m: &Crmdp,
    policy: &mut PolicyKind,
    s0: usize,
    t: usize,
    runs: usize,
    seed: u64,
    optimum: OptimumEstimate,
) -> Result<RegretReport> {
    if runs == 0 {
        return Err(CrmdpError::NoRuns);
    }
    let mut returns = Vec::with_capacity(runs);
    for run in 0..runs {
        let mut total = 0.0;
        run_episode(m, policy, s0, t, derive_seed(seed, run as u64), |step| total += step.true_reward)?;
        returns.push(total);
    }
    let mean = returns.iter().sum::<f64>() / runs as f64;
    let std_error = if runs > 1 {
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
        (var / runs as f64).sqrt()
    } else {
        0.0
    };
    let regret = optimum.value - mean;
    Ok(RegretReport {
        informed_optimum: optimum.value,
        optimum_approximate: optimum.approximate,
        agent_return: mean,
        regret,
        time_averaged: if t == 0 { 0.0 } else { regret / t as f64 },
        horizon: t,
        runs,
        std_error,
    })
}
