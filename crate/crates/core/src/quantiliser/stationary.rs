use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::QuantileError;
use crate::crmdp::{Dynamics, ObservedMdp};

const RESIDUAL_TOL: f64 = 1e-9;
const SUPPORT_TOL: f64 = 1e-9;

/// Recurrent classes of the chain induced by a deterministic stationary
/// policy, each sorted, ordered by smallest member.
pub fn recurrent_classes(dynamics: &Dynamics, policy: &[usize]) -> Vec<Vec<usize>> {
    let n = dynamics.n_states();
    let reach: Vec<Vec<bool>> = (0..n).map(|s| chain_reachable(dynamics, policy, s)).collect();
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for s in 0..n {
        if assigned[s] {
            continue;
        }
        // `s` is recurrent iff everything it reaches can reach it back.
        if (0..n).all(|t| !reach[s][t] || reach[t][s]) {
            let class: Vec<usize> = (0..n).filter(|&t| reach[s][t]).collect();
            for &t in &class {
                assigned[t] = true;
            }
            classes.push(class);
        }
    }
    classes
}

fn chain_reachable(dynamics: &Dynamics, policy: &[usize], from: usize) -> Vec<bool> {
    let mut seen = vec![false; dynamics.n_states()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(s) = stack.pop() {
        for &(t, _) in dynamics.row(s, policy[s]) {
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

/// The unique `d` with `d P_π = d`, `Σ d = 1`, or an error if the chain has
/// more than one recurrent class.
///
/// Transient states get probability zero; on the recurrent class the balance
/// equations with one row replaced by the normalisation are solved by LU.
pub fn stationary_distribution(dynamics: &Dynamics, policy: &[usize]) -> Result<Vec<f64>, QuantileError> {
    let n = dynamics.n_states();
    if policy.len() != n || policy.iter().any(|&a| a >= dynamics.n_actions()) {
        return Err(QuantileError::BadPolicy);
    }
    let classes = recurrent_classes(dynamics, policy);
    if classes.len() > 1 {
        return Err(QuantileError::Multichain {
            first: classes[0].clone(),
            second: classes[1].clone(),
        });
    }
    let class = &classes[0];
    let k = class.len();
    let mut local = vec![usize::MAX; n];
    for (i, &s) in class.iter().enumerate() {
        local[s] = i;
    }
    // Rows of A are balance equations: Σ_s d(s) P(s, t) − d(t) = 0.
    let mut a = DMatrix::<f64>::zeros(k, k);
    for (i, &s) in class.iter().enumerate() {
        a[(i, i)] -= 1.0;
        for &(t, p) in dynamics.row(s, policy[s]) {
            a[(local[t], i)] += p;
        }
    }
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(k);
    b[k - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or(QuantileError::Singular)?;
    let mut d = vec![0.0; n];
    for (i, &s) in class.iter().enumerate() {
        d[s] = x[i].max(0.0);
    }
    let residual = balance_residual(dynamics, policy, &d);
    if residual >= RESIDUAL_TOL {
        return Err(QuantileError::Residual(residual));
    }
    Ok(d)
}

/// `‖d P_π − d‖∞`.
pub fn balance_residual(dynamics: &Dynamics, policy: &[usize], d: &[f64]) -> f64 {
    let mut next = vec![0.0; d.len()];
    for (s, &mass) in d.iter().enumerate() {
        for &(t, p) in dynamics.row(s, policy[s]) {
            next[t] += mass * p;
        }
    }
    next.iter().zip(d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// A policy's stationary distribution, per-state value contributions
/// `vc(s) = d(s) R̂(s)` and its canonical δ-value-supporting set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueSupport {
    pub policy: Vec<usize>,
    pub stationary: Vec<f64>,
    pub contribution: Vec<f64>,
    /// Sorted ascending; empty when no non-empty set qualifies.
    pub support: Vec<usize>,
}

/// The largest `k` such that the `k` states with the highest contribution all
/// have `vc ≥ δ/k` (ties in contribution broken by state index).
pub fn value_supports(mdp: &ObservedMdp, policy: &[usize], delta: f64) -> Result<ValueSupport, QuantileError> {
    let stationary = stationary_distribution(&mdp.dynamics, policy)?;
    Ok(support_from(policy.to_vec(), stationary, &mdp.observed_reward, delta))
}

pub(crate) fn support_from(policy: Vec<usize>, stationary: Vec<f64>, observed: &[f64], delta: f64) -> ValueSupport {
    let contribution: Vec<f64> = stationary.iter().zip(observed).map(|(d, r)| d * r).collect();
    let mut order: Vec<usize> = (0..contribution.len()).collect();
    order.sort_by(|&a, &b| contribution[b].total_cmp(&contribution[a]).then(a.cmp(&b)));
    let size = (1..=order.len())
        .rev()
        .find(|&k| contribution[order[k - 1]] >= delta / k as f64 - SUPPORT_TOL)
        .unwrap_or(0);
    let mut support = order[..size].to_vec();
    support.sort_unstable();
    ValueSupport { policy, stationary, contribution, support }
}
