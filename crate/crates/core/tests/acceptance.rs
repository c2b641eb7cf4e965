//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any line fails.

use std::process::Command;

use crmdp_lab::crmdp::{mirror, run_episode, Crmdp, PolicyKind};
use crmdp_lab::envs::random::{random_symmetric_crmdp, unichain_fixture};
use crmdp_lab::harness::{
    build_environment, run_check, run_experiment, table1, ExperimentConfig, NamedSpec, Scale, SummaryRow,
};
use crmdp_lab::quantiliser::{plan_general, GeneralQuantiliser};
use crmdp_lab::rng::rng_from_seed;

struct Outcome {
    id: usize,
    passed: bool,
    detail: String,
}

fn outcome(id: usize, passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { id, passed, detail: detail.into() }
}

fn row<'a>(rows: &'a [SummaryRow], env: &str, agent: &str, params: &str) -> &'a SummaryRow {
    rows.iter()
        .find(|r| r.env == env && r.agent == agent && r.params == params)
        .unwrap_or_else(|| panic!("missing row {env}/{agent}/{params}"))
}

/// Separation of two run means in pooled standard errors.
fn separation(a: &SummaryRow, b: &SummaryRow) -> f64 {
    let se = (a.std_true.powi(2) / a.runs as f64 + b.std_true.powi(2) / b.runs as f64).sqrt();
    (a.mean_true - b.mean_true) / se
}

fn check_suite(id: usize, name: &str, extra: impl FnOnce() -> Result<String, String>) -> Outcome {
    let report = run_check(name).expect("suite runs");
    print!("{}", report.render());
    match extra() {
        Ok(note) => outcome(id, report.passed(), format!("suite `{name}` ({note})")),
        Err(why) => outcome(id, false, format!("suite `{name}`: {why}")),
    }
}

fn criterion_1(rows: &[SummaryRow]) -> Outcome {
    let q = row(rows, "gridworld-1g", "qlearn", "{}");
    let mut ok = (0.89..=0.95).contains(&q.mean_observed) && q.mean_true < 0.05;
    let mut detail = format!("small: observed {:.4} in [0.89, 0.95], true {:.5} < 0.05", q.mean_observed, q.mean_true);
    let cfg = ExperimentConfig {
        cycles: 1_000_000,
        runs: 100,
        seed: crmdp_lab::harness::TABLE1_SEED,
        ..ExperimentConfig::new(NamedSpec::new("gridworld-1g"), NamedSpec::new("qlearn"))
    };
    let full = run_experiment(&cfg).unwrap();
    ok &= (full.mean_observed - 0.923).abs() <= 0.01;
    detail += &format!("; full: observed {:.4} within 0.01 of 0.923", full.mean_observed);
    outcome(1, ok, detail)
}

fn criterion_2(rows: &[SummaryRow]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for env in ["gridworld-1g", "gridworld-2g", "gridworld-4g"] {
        let s = row(rows, env, "softmax", r#"{"beta":2.0}"#);
        let q = row(rows, env, "qlearn", "{}");
        let sep = separation(s, q);
        ok &= (0.62..=0.72).contains(&s.mean_observed) && sep >= 3.0;
        parts.push(format!("{env}: observed {:.3}, true {:.4} vs {:.4} ({sep:.1} SE)", s.mean_observed, s.mean_true, q.mean_true));
    }
    outcome(2, ok, parts.join("; "))
}

/// Expected committed true reward when the target is drawn uniformly from
/// `{s : R̂(s) ≥ δ}`.
fn uniform_commit_oracle(m: &Crmdp, delta: f64) -> f64 {
    let set: Vec<usize> = (0..m.n_states()).filter(|&s| m.observed_reward(s) >= delta).collect();
    set.iter().map(|&s| m.true_reward(s)).sum::<f64>() / set.len() as f64
}

fn criterion_3(rows: &[SummaryRow]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for env in ["gridworld-1g", "gridworld-2g", "gridworld-4g"] {
        let crmdp = build_environment(&NamedSpec::new(env)).unwrap().crmdp;
        for delta in [0.2, 0.5, 0.8] {
            let cfg = ExperimentConfig {
                cycles: 100_000,
                runs: 100,
                seed: 11,
                ..ExperimentConfig::new(NamedSpec::new(env), NamedSpec::new("quantile").with("delta", delta))
            };
            let r = run_experiment(&cfg).unwrap();
            let expected = uniform_commit_oracle(&crmdp, delta);
            let se = r.std_true / (r.runs.len() as f64).sqrt();
            let within = (r.mean_true - expected).abs() <= 3.0 * se;
            ok &= within;
            parts.push(format!("{env} δ={delta}: {:.3} vs {expected:.3} ± {:.3}", r.mean_true, 3.0 * se));
        }
    }
    for env in ["gridworld-2g", "gridworld-4g"] {
        let q = row(rows, env, "qlearn", "{}").mean_true;
        for delta in ["0.2", "0.5", "0.8"] {
            let quant = row(rows, env, "quantile", &format!(r#"{{"delta":{delta}}}"#)).mean_true;
            ok &= quant >= 5.0 * q;
        }
        parts.push(format!("{env}: quantiliser >= 5x Q-learning ({q:.4})"));
    }
    outcome(3, ok, parts.join("; "))
}

fn criterion_4() -> Outcome {
    // Oracle: mirrored true rewards are 1 - Ṙ, observed rewards unchanged.
    let mut rng = rng_from_seed(4);
    let mut ok = true;
    for i in 0..50 {
        let m = random_symmetric_crmdp(&mut rng, 1 + i % 6, 2, 3);
        let mm = mirror(&m).unwrap();
        for s in 0..m.n_states() {
            ok &= m.observed_reward(s) == mm.observed_reward(s);
            ok &= (m.true_reward(s) + mm.true_reward(s) - 1.0).abs() <= 1e-12;
        }
        let t = 50;
        for seed in 0..20 {
            let mut total = 0.0;
            let mut states = (Vec::new(), Vec::new());
            let mut p = PolicyKind::StationaryStochastic(vec![vec![0.5, 0.5]; m.n_states()]);
            run_episode(&m, &mut p, 0, t, seed, |s| {
                states.0.push(s.state);
                if s.time > 0 {
                    total += s.true_reward
                }
            })
            .unwrap();
            run_episode(&mm, &mut p, 0, t, seed, |s| {
                states.1.push(s.state);
                if s.time > 0 {
                    total += s.true_reward
                }
            })
            .unwrap();
            ok &= states.0 == states.1 && (total - t as f64).abs() <= 1e-9;
        }
    }
    let suite = check_suite(4, "nfl", || Ok("independent mirror oracle".into()));
    outcome(4, ok && suite.passed, format!("{}; test-side mirror identity {}", suite.detail, if ok { "holds" } else { "broken" }))
}

fn criterion_5() -> Outcome {
    let floor = 1.0 - 1.0 / 8.0 - 0.05;
    check_suite(5, "thm11", || Ok(format!("floor {floor:.3}")))
}

fn criterion_6() -> Outcome {
    let bounds: Vec<String> = [1usize, 2, 5]
        .iter()
        .map(|&q| format!("q={q}: {:.4}", 1.0 - (1.0 - (q as f64 / 25.0).sqrt()).powi(2)))
        .collect();
    check_suite(6, "thm19", || Ok(format!("bounds {}", bounds.join(", "))))
}

/// Long-run true reward of a deterministic policy, by power iteration on the
/// (lazy) chain.
fn policy_gain(m: &Crmdp, policy: &[usize]) -> f64 {
    let n = m.n_states();
    let mut d = vec![1.0 / n as f64; n];
    for _ in 0..20_000 {
        let mut next = vec![0.0; n];
        for s in 0..n {
            next[s] += 0.5 * d[s];
            for &(t, p) in m.dynamics().row(s, policy[s]) {
                next[t] += 0.5 * d[s] * p;
            }
        }
        let diff: f64 = next.iter().zip(&d).map(|(a, b)| (a - b).abs()).sum();
        d = next;
        if diff < 1e-15 {
            break;
        }
    }
    d.iter().enumerate().map(|(s, p)| p * m.true_reward(s)).sum()
}

fn exhaustive_gain(m: &Crmdp) -> f64 {
    let (n, k) = (m.n_states(), m.n_actions());
    let mut best = f64::NEG_INFINITY;
    let mut policy = vec![0; n];
    loop {
        best = best.max(policy_gain(m, &policy));
        let mut i = 0;
        while i < n && policy[i] == k - 1 {
            policy[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
        policy[i] += 1;
    }
}

fn criterion_7() -> Outcome {
    let mut rng = rng_from_seed(7);
    let t = 10_000;
    let (mut fixtures, mut ok_count, mut attempts) = (0, 0, 0);
    let mut worst: f64 = f64::INFINITY;
    while fixtures < 20 && attempts < 200 {
        attempts += 1;
        let f = unichain_fixture(&mut rng, 3 + attempts % 4, 2 + attempts % 2, 1);
        let mdp = f.crmdp.observed_mdp();
        let Some((delta, plan)) =
            [0.5, 0.4, 0.3, 0.2, 0.1].into_iter().find_map(|d| plan_general(&mdp, d, 1_000_000).ok().map(|p| (d, p)))
        else {
            continue;
        };
        fixtures += 1;
        let bound = 1.0 - delta * (1.0 - f.q as f64 / plan.union.len() as f64);
        let gain = exhaustive_gain(&f.crmdp);
        let mut earned = 0.0;
        for seed in 0..20 {
            let mut p = PolicyKind::HistoryBased(Box::new(GeneralQuantiliser::from_plan(plan.clone())));
            run_episode(&f.crmdp, &mut p, 0, t, seed, |s| earned += s.true_reward).unwrap();
        }
        let regret = gain - earned / (20.0 * (t + 1) as f64);
        worst = worst.min(bound + 0.05 - regret);
        if regret <= bound + 0.05 {
            ok_count += 1;
        }
    }
    print!("{}", run_check("thm24").unwrap().render());
    outcome(
        7,
        fixtures >= 20 && ok_count == fixtures,
        format!("{ok_count}/{fixtures} fixtures within bound + 0.05 (min slack {worst:.3}), exhaustive power-iteration optimum"),
    )
}

fn criterion_8() -> Outcome {
    let formula = |d: f64, a: f64, s: f64| 4.0 * d * a.powf(2.0 * d) * s.powi(3);
    let bound = crmdp_lab::decoupled::exploration_bound(5, 3, 2.0).value;
    check_suite(8, "thm16", || {
        if bound == formula(2.0, 3.0, 5.0) {
            Ok(format!("exploration bound for |S|=5, |A|=3, D=2 is {bound}"))
        } else {
            Err(format!("exploration bound {bound} disagrees with {}", formula(2.0, 3.0, 5.0)))
        }
    })
}

fn criterion_9() -> Outcome {
    check_suite(9, "ce51", || Ok("target (1 - ε)/2 = 0.475".into()))
}

fn criterion_10() -> Outcome {
    check_suite(10, "ex23", || Ok("1000 trajectories".into()))
}

fn table1_csv(threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_crmdp-lab"))
        .args(["table1", "--scale", "small"])
        .env("CRMDP_LAB_THREADS", threads)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_11() -> Outcome {
    let a = table1_csv("1");
    let b = table1_csv("4");
    let c = table1_csv("4");
    let ok = a == b && b == c && !a.is_empty();
    outcome(11, ok, format!("{} bytes, identical across 1/4 threads and repeated runs: {ok}", a.len()))
}

#[test]
fn acceptance() {
    let rows = table1(Scale::Small).unwrap();
    let outcomes = vec![
        criterion_1(&rows),
        criterion_2(&rows),
        criterion_3(&rows),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
        criterion_11(),
    ];
    println!();
    for o in &outcomes {
        println!("criterion {:>2}: {} | {}", o.id, if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
