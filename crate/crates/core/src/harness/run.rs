use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::registry::{build_agent, build_environment, Environment};
use super::HarnessError;
use crate::crmdp::{run_episode, PolicyKind};
use crate::rng::derive_seed;

/// Environment variable that fixes the worker thread count.
pub const THREADS_ENV: &str = "CRMDP_LAB_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub run: usize,
    pub seed: u64,
    /// Mean observed reward over the `t + 1` visited states.
    pub mean_observed: f64,
    /// Mean true reward over the `t + 1` visited states.
    pub mean_true: f64,
    pub snapshot: serde_json::Value,
}

/// Running means at one curve sample, aggregated across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub time: usize,
    pub mean_observed: f64,
    pub std_observed: f64,
    pub mean_true: f64,
    pub std_true: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub runs: Vec<RunStats>,
    pub mean_observed: f64,
    /// Standard deviation over runs (population form, divides by the run count).
    pub std_observed: f64,
    pub mean_true: f64,
    pub std_true: f64,
    pub curve: Vec<CurvePoint>,
}

/// `(mean, population std)`, summed in order so results are reproducible.
pub fn mean_std(values: impl IntoIterator<Item = f64> + Clone) -> (f64, f64) {
    let (mut n, mut sum) = (0usize, 0.0);
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = sum / n as f64;
    let ss: f64 = values.into_iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / n as f64).sqrt())
}

/// Thread count from [`THREADS_ENV`], if set to a positive integer.
pub fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f(i)` for `i in 0..n` on the configured pool, results in index order.
pub fn parallel_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = configured_threads() {
        builder = builder.num_threads(threads);
    }
    let pool = builder.build().map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

struct Trace {
    stats: RunStats,
    /// Running `(observed, true)` means at each curve sample.
    curve: Vec<(f64, f64)>,
}

fn single_run(cfg: &ExperimentConfig, env: &Environment, run: usize) -> Result<Trace, HarnessError> {
    let seed = derive_seed(cfg.seed, run as u64);
    let mut policy = PolicyKind::HistoryBased(build_agent(&cfg.agent, env)?);
    let (mut observed, mut truth) = (0.0, 0.0);
    let mut curve = Vec::new();
    run_episode(&env.crmdp, &mut policy, env.start, cfg.cycles, seed, |step| {
        observed += step.observed_reward;
        truth += step.true_reward;
        if cfg.report_every > 0 && step.time > 0 && step.time % cfg.report_every == 0 {
            curve.push((observed / (step.time + 1) as f64, truth / (step.time + 1) as f64));
        }
    })?;
    let snapshot = match &policy {
        PolicyKind::HistoryBased(agent) => agent.snapshot(),
        _ => serde_json::Value::Null,
    };
    let steps = (cfg.cycles + 1) as f64;
    Ok(Trace {
        stats: RunStats { run, seed, mean_observed: observed / steps, mean_true: truth / steps, snapshot },
        curve,
    })
}

/// Executes every run of `cfg` (in parallel) and aggregates them in run order.
/// Run `i` uses seed `derive_seed(cfg.seed, i)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult, HarnessError> {
    cfg.validate()?;
    let env = build_environment(&cfg.environment)?;
    // Surface agent construction errors once, before spawning runs.
    build_agent(&cfg.agent, &env)?;
    let traces = parallel_map(cfg.runs, |run| single_run(cfg, &env, run))?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let (mean_observed, std_observed) = mean_std(traces.iter().map(|t| t.stats.mean_observed));
    let (mean_true, std_true) = mean_std(traces.iter().map(|t| t.stats.mean_true));
    let samples = traces.first().map_or(0, |t| t.curve.len());
    let curve = (0..samples)
        .map(|i| {
            let (mo, so) = mean_std(traces.iter().map(|t| t.curve[i].0));
            let (mt, st) = mean_std(traces.iter().map(|t| t.curve[i].1));
            CurvePoint { time: (i + 1) * cfg.report_every, mean_observed: mo, std_observed: so, mean_true: mt, std_true: st }
        })
        .collect();
    Ok(RunResult {
        config: cfg.clone(),
        runs: traces.into_iter().map(|t| t.stats).collect(),
        mean_observed,
        std_observed,
        mean_true,
        std_true,
        curve,
    })
}
