//! Exact planning on known models: finite-horizon optima, average-reward
//! optima, expected hitting times and the diameter.

use std::collections::VecDeque;

use super::{Crmdp, CrmdpError, Dynamics, Result};

/// Default cap on `nnz(T) · t` for backward induction.
pub const DEFAULT_DP_BUDGET: u128 = 500_000_000;

const HITTING_TOL: f64 = 1e-9;
const SPAN_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-9;
const APERIODICITY: f64 = 0.5;
const MAX_SWEEPS: usize = 10_000_000;

/// `V_t(s) = max_π E[Σ_{k=0}^t r(s_k) | s_0 = s]` by backward induction.
pub fn finite_horizon_values(dynamics: &Dynamics, reward: &[f64], t: usize) -> Vec<f64> {
    let n = dynamics.n_states();
    let mut values = reward.to_vec();
    let mut next = vec![0.0; n];
    for _ in 0..t {
        for (s, v) in next.iter_mut().enumerate() {
            *v = reward[s] + best_action(dynamics, s, &values).1;
        }
        std::mem::swap(&mut values, &mut next);
    }
    values
}

/// Lowest-index action maximising `Σ T(s'|s,a) values[s']`.
fn best_action(dynamics: &Dynamics, state: usize, values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for a in 0..dynamics.n_actions() {
        let q = dynamics.expect(state, a, values);
        if q > best.1 {
            best = (a, q);
        }
    }
    best
}

/// Exact `max_π G_t(μ, π, s0)` for the true reward, or
/// [`CrmdpError::BudgetExceeded`] when `nnz(T) · t` exceeds `budget`.
pub fn informed_optimum(m: &Crmdp, s0: usize, t: usize, budget: u128) -> Result<f64> {
    m.check_state(s0)?;
    let needed = m.dynamics().nnz() as u128 * t as u128;
    if needed > budget {
        return Err(CrmdpError::BudgetExceeded { needed, budget });
    }
    Ok(finite_horizon_values(m.dynamics(), m.true_rewards(), t)[s0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimumEstimate {
    pub value: f64,
    /// `true` when the value was extrapolated with the optimal gain.
    pub approximate: bool,
}

/// The informed optimum, falling back to `V_K(s0) + (t − K) · g*` when exact
/// backward induction over `t` stages exceeds `budget`. `K` is the largest
/// horizon the budget allows and `g*` the optimal average reward; the error is
/// bounded by the span of the optimal bias.
pub fn informed_value(m: &Crmdp, s0: usize, t: usize, budget: u128) -> Result<OptimumEstimate> {
    match informed_optimum(m, s0, t, budget) {
        Ok(value) => Ok(OptimumEstimate { value, approximate: false }),
        Err(CrmdpError::BudgetExceeded { .. }) => {
            let nnz = m.dynamics().nnz().max(1) as u128;
            let k = (budget / nnz).min(t as u128) as usize;
            let head = finite_horizon_values(m.dynamics(), m.true_rewards(), k)[s0];
            let gain = average_reward_optimum(m.dynamics(), m.true_rewards()).gain;
            Ok(OptimumEstimate {
                value: head + (t - k) as f64 * gain,
                approximate: true,
            })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageRewardSolution {
    /// Optimal long-run average reward per step.
    pub gain: f64,
    /// Relative values (bias), normalised to `bias[0] = 0`.
    pub bias: Vec<f64>,
    /// A gain-optimal stationary deterministic policy (lowest index on ties).
    pub policy: Vec<usize>,
    pub iterations: usize,
    /// `false` if the span criterion was not met (e.g. a multichain model).
    pub converged: bool,
}

/// Relative value iteration on the aperiodic transform
/// `T' = τI + (1 − τ)T`, which has the same stationary distributions and
/// therefore the same gain-optimal policies. Stops when the span of the
/// per-step increments drops below `1e-9`.
pub fn average_reward_optimum(dynamics: &Dynamics, reward: &[f64]) -> AverageRewardSolution {
    let n = dynamics.n_states();
    let mut w = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut gain = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    let max_iter = (MAX_SWEEPS * 10 / dynamics.nnz().max(1)).clamp(10_000, 2_000_000);
    while iterations < max_iter {
        iterations += 1;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in 0..n {
            let q = best_action(dynamics, s, &w).1;
            next[s] = reward[s] + APERIODICITY * w[s] + (1.0 - APERIODICITY) * q;
            let diff = next[s] - w[s];
            lo = lo.min(diff);
            hi = hi.max(diff);
        }
        let anchor = next[0];
        for (dst, &src) in w.iter_mut().zip(&next) {
            *dst = src - anchor;
        }
        gain = 0.5 * (lo + hi);
        if hi - lo < SPAN_TOL {
            converged = true;
            break;
        }
    }
    let bias: Vec<f64> = w.iter().map(|&x| (1.0 - APERIODICITY) * x).collect();
    let policy = (0..n)
        .map(|s| argmax_with_ties(dynamics, s, &bias))
        .collect();
    AverageRewardSolution {
        gain,
        bias,
        policy,
        iterations,
        converged,
    }
}

fn argmax_with_ties(dynamics: &Dynamics, state: usize, values: &[f64]) -> usize {
    let qs: Vec<f64> = (0..dynamics.n_actions())
        .map(|a| dynamics.expect(state, a, values))
        .collect();
    let best = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    qs.iter().position(|&q| q >= best - TIE_TOL).unwrap_or(0)
}

/// Minimal expected number of steps to reach `target` from each state, by
/// stochastic-shortest-path value iteration (Gauss–Seidel sweeps until the
/// largest change is below `1e-9`). States that cannot reach `target` get
/// `f64::INFINITY`.
pub fn hitting_times(dynamics: &Dynamics, target: usize) -> Vec<f64> {
    let n = dynamics.n_states();
    let can_reach = can_reach(dynamics, target);
    let mut h: Vec<f64> = can_reach
        .iter()
        .map(|&r| if r { 0.0 } else { f64::INFINITY })
        .collect();
    for _ in 0..MAX_SWEEPS {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if s == target || !can_reach[s] {
                continue;
            }
            let best = (0..dynamics.n_actions())
                .map(|a| 1.0 + dynamics.expect(s, a, &h))
                .fold(f64::INFINITY, f64::min);
            delta = delta.max((best - h[s]).abs());
            h[s] = best;
        }
        if delta < HITTING_TOL {
            break;
        }
    }
    h
}

/// States from which `target` is reachable.
fn can_reach(dynamics: &Dynamics, target: usize) -> Vec<bool> {
    let n = dynamics.n_states();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        for a in 0..dynamics.n_actions() {
            for &(t, _) in dynamics.row(s, a) {
                preds[t].push(s);
            }
        }
    }
    let mut seen = vec![false; n];
    seen[target] = true;
    let mut queue = VecDeque::from([target]);
    while let Some(s) = queue.pop_front() {
        for &p in &preds[s] {
            if !seen[p] {
                seen[p] = true;
                queue.push_back(p);
            }
        }
    }
    seen
}

/// A shortest-expected-time policy towards one target state.
#[derive(Debug, Clone, PartialEq)]
pub struct Navigation {
    pub target: usize,
    pub times: Vec<f64>,
    /// Action to take in each state. At the target this is its stay action
    /// when one exists.
    pub actions: Vec<usize>,
}

pub fn navigation_policy(dynamics: &Dynamics, target: usize) -> Navigation {
    let times = hitting_times(dynamics, target);
    let actions = (0..dynamics.n_states())
        .map(|s| {
            if s == target {
                if let Some(stay) = dynamics.stay_action(s) {
                    return stay;
                }
            }
            let qs: Vec<f64> = (0..dynamics.n_actions())
                .map(|a| dynamics.expect(s, a, &times))
                .collect();
            let best = qs.iter().copied().fold(f64::INFINITY, f64::min);
            if best.is_infinite() {
                return 0;
            }
            qs.iter().position(|&q| q <= best + TIE_TOL).unwrap_or(0)
        })
        .collect();
    Navigation {
        target,
        times,
        actions,
    }
}

/// `max_{s,s'} min_π E[time(s' | s, π)]`; errors on the first unreachable pair.
pub fn diameter(dynamics: &Dynamics) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for target in 0..dynamics.n_states() {
        let h = hitting_times(dynamics, target);
        for (from, &time) in h.iter().enumerate() {
            if time.is_infinite() {
                return Err(CrmdpError::NotCommunicating { from, to: target });
            }
            worst = worst.max(time);
        }
    }
    Ok(worst)
}

impl Crmdp {
    pub fn diameter(&self) -> Result<f64> {
        diameter(self.dynamics())
    }
}
