//! Property suites behind `crmdp-lab check <id>`.

use serde::Serialize;

use super::run::parallel_map;
use super::HarnessError;
use crate::agents::{Agent, BeliefState, EtcAgent, EtcMode, Exploration, QLearningAgent, RandomAgent};
use crate::crmdp::{
    informed_value, mirror, regret_against, run_episode, Crmdp, Dynamics, PolicyKind,
    DEFAULT_DP_BUDGET,
};
use crate::decoupled::cirl::{cirl_likelihoods, random_cirl_trajectory, run_cirl_cr};
use crate::decoupled::fixtures::{random_learnable_fixture, rich_graph_fixture, teleport_fixture};
use crate::decoupled::{explore, reconstruct, run_reconstruct_then_plan, DecoupledCrmdp, ObservationGraph};
use crate::envs::random::{easy_fixture, random_symmetric_crmdp, unichain_fixture};
use crate::envs::{adversarial_class, cirl_example, softmax_counterexample, AdversarialClassSpec};
use crate::quantiliser::{general_bound, plan_general, policy_from_index, stationary_distribution, quantile_bound, GeneralQuantiliser, SimpleQuantiliser};
use crate::rng::{derive_seed, rng_from_seed};

pub const CHECK_IDS: &[&str] = &["nfl", "thm11", "thm16", "thm19", "thm24", "ce51", "ex23"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub passed: bool,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub id: String,
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    fn new(id: &str) -> Self {
        Self { id: id.to_string(), lines: Vec::new() }
    }

    fn push(&mut self, passed: bool, text: String) {
        self.lines.push(CheckLine { passed, text });
    }

    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn render(&self) -> String {
        self.lines
            .iter()
            .map(|l| format!("[{}] {}: {}\n", if l.passed { "PASS" } else { "FAIL" }, self.id, l.text))
            .collect()
    }
}

pub fn run_check(id: &str) -> Result<CheckReport, HarnessError> {
    match id {
        "nfl" => check_nfl(),
        "thm11" => check_thm11(),
        "thm16" => check_thm16(),
        "thm19" => check_thm19(),
        "thm24" => check_thm24(),
        "ce51" => check_ce51(),
        "ex23" => check_ex23(),
        other => Err(HarnessError::UnknownCheck(other.to_string())),
    }
}

const SEED: u64 = 0x5eed;

/// `(state, action, observed, true)` for one step.
type StepRecord = (usize, Option<usize>, f64, f64);
type AgentFactory<'a> = Box<dyn Fn() -> Result<Box<dyn Agent>, HarnessError> + 'a>;

/// Observed histories coincide between a model and its mirror, and their
/// true rewards over cycles `1..=t` add up to `t`.
fn check_nfl() -> Result<CheckReport, HarnessError> {
    let mut report = CheckReport::new("nfl");
    let t = 200;
    let mut rng = rng_from_seed(SEED);
    let (mut equal, mut sums_ok, mut total) = (true, true, 0);
    for _ in 0..50 {
        let n = 2 + (total % 5);
        let m = random_symmetric_crmdp(&mut rng, n, 3, 4);
        let mm = mirror(&m)?;
        for seed in 0..20 {
            let run = |model: &Crmdp| -> Result<Vec<StepRecord>, HarnessError> {
                let mut steps = Vec::new();
                let mut policy = PolicyKind::HistoryBased(Box::new(RandomAgent::new(3)));
                run_episode(model, &mut policy, 0, t, seed, |s| {
                    steps.push((s.state, s.action, s.observed_reward, s.true_reward))
                })?;
                Ok(steps)
            };
            let (a, b) = (run(&m)?, run(&mm)?);
            equal &= a.iter().zip(&b).all(|(x, y)| (x.0, x.1, x.2) == (y.0, y.1, y.2));
            let sum: f64 = a.iter().zip(&b).skip(1).map(|(x, y)| x.3 + y.3).sum();
            sums_ok &= (sum - t as f64).abs() <= 1e-9;
        }
        total += 1;
    }
    report.push(equal, format!("observed trajectories identical on {total} models x 20 seeds"));
    report.push(sums_ok, format!("true rewards of a model and its mirror sum to t = {t}"));
    Ok(report)
}

fn check_thm11() -> Result<CheckReport, HarnessError> {
    let mut report = CheckReport::new("thm11");
    let class = adversarial_class(&AdversarialClassSpec::new(8))?;
    let worst = &class.planted_worst().crmdp;
    let t = 10_000;
    for mode in [EtcMode::Cr, EtcMode::Rl] {
        let belief = BeliefState::new(class.crmdps(), class.reference_prior(0.9))?;
        let agent = EtcAgent::new(belief, mode)?;
        let rep = crate::crmdp::regret(worst, &mut PolicyKind::HistoryBased(Box::new(agent)), 0, t, 1, SEED)?;
        let floor = 1.0 - 1.0 / 8.0 - 0.05;
        report.push(
            rep.time_averaged >= floor,
            format!("{mode:?} time-averaged regret {:.4} >= {floor:.3} on the planted member", rep.time_averaged),
        );
    }
    Ok(report)
}

fn check_thm16() -> Result<CheckReport, HarnessError> {
    let mut report = CheckReport::new("thm16");
    let mut rng = rng_from_seed(SEED);
    let mut exact = 0;
    for i in 0..500 {
        let f = random_learnable_fixture(&mut rng, 3 + i % 8, (i % 3).min((2 + i % 8) / 2));
        let obs: Vec<_> = f
            .graph
            .edges
            .iter()
            .map(|&(s, t)| (s, t, f.decoupled.observe(s, t).expect("edge")))
            .collect();
        if reconstruct(&obs, &f.graph)?.reward().as_deref() == Some(f.decoupled.base().true_rewards()) {
            exact += 1;
        }
    }
    report.push(exact == 500, format!("exact reconstruction on {exact}/500 learnable instances"));

    let mut sharp = 0;
    for q in 1..=5 {
        let n = 2 * q;
        let g = ObservationGraph::new(n, (0..n).map(|s| (s, 0)), [], q)?;
        let obs: Vec<_> = (0..n).map(|s| (s, 0, if s < q { 0.25 } else { 0.75 })).collect();
        if reconstruct(&obs, &g)?.outcomes[0].value().is_none() {
            sharp += 1;
        }
    }
    report.push(sharp == 5, format!("2q observers split q/q left unresolved on {sharp}/5 instances"));

    let fixtures = [
        ("1-state teleport", teleport_fixture(1).decoupled),
        ("2-state teleport", teleport_fixture(2).decoupled),
        ("3-state teleport", teleport_fixture(3).decoupled),
        ("5-state ring", fully_observed_ring(5)?),
    ];
    for (name, dm) in &fixtures {
        let steps: Vec<u64> =
            (0..100).map(|seed| explore(dm, 0, seed, None).map(|r| r.steps)).collect::<Result<_, _>>()?;
        let mean = steps.iter().sum::<u64>() as f64 / 100.0;
        let bound = explore(dm, 0, 0, None)?.bound;
        let ok = mean <= bound.value || bound.degenerate;
        report.push(
            ok,
            format!("{name} (D = {}): mean exploration steps {mean:.1} vs bound {}", bound.diameter, bound.value),
        );
    }

    let rich = rich_graph_fixture();
    let run = run_reconstruct_then_plan(&rich.decoupled, &rich.graph, 0, 100_000, SEED)?;
    let exact = run.reconstructed.as_deref() == Some(rich.decoupled.base().true_rewards());
    report.push(exact, "rich-graph fixture reconstructed exactly".into());
    report.push(
        run.time_averaged_regret < 0.05,
        format!("reconstruct-then-plan time-averaged regret {:.4} < 0.05 at t = 1e5", run.time_averaged_regret),
    );
    Ok(report)
}

/// Ring with stay/forward/back moves where every state sees every reward.
fn fully_observed_ring(n: usize) -> Result<DecoupledCrmdp, HarnessError> {
    let d = Dynamics::deterministic(n, 3, |s, a| [s, (s + 1) % n, (s + n - 1) % n][a])?;
    let truth: Vec<f64> = (0..n).map(|s| s as f64 / n as f64).collect();
    let base = Crmdp::uncorrupted(d, truth.clone())?;
    Ok(DecoupledCrmdp::new(base, vec![truth.into_iter().map(Some).collect(); n])?)
}

fn check_thm19() -> Result<CheckReport, HarnessError> {
    let mut report = CheckReport::new("thm19");
    let t = 10_000;
    for q in [1, 2, 5] {
        let (delta, bound) = quantile_bound(q, 25);
        let regrets = parallel_map(100, |i| -> Result<f64, HarnessError> {
            let mut rng = rng_from_seed(derive_seed(SEED + q as u64, i as u64));
            let f = easy_fixture(&mut rng, 25, q, 2);
            let agent = SimpleQuantiliser::new(f.crmdp.dynamics().clone(), delta)?;
            let optimum = informed_value(&f.crmdp, 0, t, DEFAULT_DP_BUDGET)?;
            let mut policy = PolicyKind::HistoryBased(Box::new(agent));
            Ok(regret_against(&f.crmdp, &mut policy, 0, t, 1, i as u64, optimum)?.time_averaged)
        })?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        let mean = regrets.iter().sum::<f64>() / regrets.len() as f64;
        report.push(
            mean <= bound + 0.05,
            format!("|S| = 25, q = {q}: mean regret {mean:.4} <= bound {bound:.4} + 0.05 over 100 fixtures"),
        );
    }

    let t = 500_000;
    let (delta, bound) = quantile_bound(1, 1000);
    let regrets = parallel_map(4, |i| -> Result<f64, HarnessError> {
        let mut rng = rng_from_seed(derive_seed(SEED, 1000 + i as u64));
        let f = easy_fixture(&mut rng, 1000, 1, 3);
        let agent = SimpleQuantiliser::new(f.crmdp.dynamics().clone(), delta)?;
        let optimum = informed_value(&f.crmdp, 0, t, DEFAULT_DP_BUDGET)?;
        let mut policy = PolicyKind::HistoryBased(Box::new(agent));
        Ok(regret_against(&f.crmdp, &mut policy, 0, t, 1, i as u64, optimum)?.time_averaged)
    })?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mean = regrets.iter().sum::<f64>() / regrets.len() as f64;
    report.push(mean <= 0.11, format!("q/|S| = 0.001: mean regret {mean:.4} <= 0.11 (bound {bound:.4})"));
    Ok(report)
}

/// First δ in 0.5, 0.4, …, 0.1 for which the general quantiliser has a plan.
pub fn first_feasible_delta(m: &Crmdp) -> Option<f64> {
    [0.5, 0.4, 0.3, 0.2, 0.1]
        .into_iter()
        .find(|&d| plan_general(&m.observed_mdp(), d, 1_000_000).is_ok())
}

/// Highest long-run true reward over all deterministic stationary policies.
fn best_stationary_gain(m: &Crmdp) -> Result<f64, HarnessError> {
    let (n, k) = (m.n_states(), m.n_actions());
    let mut best = f64::NEG_INFINITY;
    for index in 0..(k as u64).pow(n as u32) {
        let policy = policy_from_index(index, n, k);
        let d = stationary_distribution(m.dynamics(), &policy)?;
        best = best.max(d.iter().zip(m.true_rewards()).map(|(p, r)| p * r).sum());
    }
    Ok(best)
}

fn check_thm24() -> Result<CheckReport, HarnessError> {
    let mut report = CheckReport::new("thm24");
    let t = 10_000;
    let mut rng = rng_from_seed(SEED);
    let (mut ok, mut total) = (0, 0);
    let mut worst_margin = f64::INFINITY;
    while total < 20 {
        let n = 3 + total % 4;
        let f = unichain_fixture(&mut rng, n, 2 + total % 2, 1);
        let Some(delta) = first_feasible_delta(&f.crmdp) else { continue };
        total += 1;
        let plan = plan_general(&f.crmdp.observed_mdp(), delta, 1_000_000)?;
        let bound = general_bound(delta, f.q, plan.union.len());
        let gain = best_stationary_gain(&f.crmdp)?;
        let mut regret = 0.0;
        for seed in 0..20 {
            let mut policy = PolicyKind::HistoryBased(Box::new(GeneralQuantiliser::from_plan(plan.clone())));
            let mut sum = 0.0;
            run_episode(&f.crmdp, &mut policy, 0, t, seed, |s| {
                if s.time > 0 {
                    sum += s.true_reward
                }
            })?;
            regret += gain - sum / t as f64;
        }
        regret /= 20.0;
        worst_margin = worst_margin.min(bound + 0.05 - regret);
        if regret <= bound + 0.05 {
            ok += 1;
        }
    }
    report.push(ok == total, format!("regret within bound + 0.05 on {ok}/{total} unichain fixtures (min slack {worst_margin:.4})"));
    Ok(report)
}

fn check_ce51() -> Result<CheckReport, HarnessError> {
    let mut report = CheckReport::new("ce51");
    let eps = 0.05;
    let m = softmax_counterexample(10, eps)?;
    let t = 100_000;
    let optimum = informed_value(&m, 0, t, DEFAULT_DP_BUDGET)?;
    let agents: [(&str, AgentFactory); 3] = [
        ("quantile(0.5)", Box::new(|| Ok(Box::new(SimpleQuantiliser::new(m.dynamics().clone(), 0.5)?) as Box<dyn Agent>))),
        ("softmax", Box::new(|| Ok(Box::new(QLearningAgent::new(2, 10, 0.1, 0.9, Exploration::softmax_beta(2.0))?) as Box<dyn Agent>))),
        ("qlearn", Box::new(|| Ok(Box::new(QLearningAgent::new(2, 10, 0.1, 0.9, Exploration::EpsilonGreedy { epsilon: 0.1 })?) as Box<dyn Agent>))),
    ];
    for (name, make) in &agents {
        let mut regret = 0.0;
        for seed in 0..30 {
            let mut policy = PolicyKind::HistoryBased(make()?);
            regret += regret_against(&m, &mut policy, 0, t, 1, derive_seed(SEED, seed), optimum)?.time_averaged;
        }
        regret /= 30.0;
        let (ok, target) = if name.starts_with("quantile") {
            ((regret - (1.0 - eps) / 2.0).abs() <= 0.05, format!("within 0.05 of {:.3}", (1.0 - eps) / 2.0))
        } else {
            (regret >= 1.0 - eps - 0.1, format!(">= {:.3}", 1.0 - eps - 0.1))
        };
        report.push(ok, format!("{name}: time-averaged regret {regret:.4} {target}"));
    }
    Ok(report)
}

fn check_ex23() -> Result<CheckReport, HarnessError> {
    let mut report = CheckReport::new("ex23");
    let ex = cirl_example();
    let mut equal = 0;
    for i in 0..1000u64 {
        let tr = random_cirl_trajectory(&ex, (i % 2) as usize, (i % 21) as usize, derive_seed(SEED, i));
        let (a, b) = cirl_likelihoods(&ex, &tr)?;
        if a == b {
            equal += 1;
        }
    }
    report.push(equal == 1000, format!("likelihoods exactly equal on {equal}/1000 trajectories"));
    let run = run_cirl_cr(&ex, 0, 0.6, 20, 10_000, SEED)?;
    report.push(run.committed_state == 1, format!("CR agent with P(H2) = 0.6 commits to s{}", run.committed_state + 1));
    let gap = (run.mean_true_reward - run.min_true_reward).abs();
    report.push(gap <= 0.02, format!("under H1 its mean true reward {:.4} is within 0.02 of the minimum", run.mean_true_reward));
    Ok(report)
}
