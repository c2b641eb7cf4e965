use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crmdp_lab::agents::{epsilon_greedy_act, Agent, Exploration, QLearningAgent, QTable, RandomAgent};
use crmdp_lab::crmdp::{mirror, run_episode, simulate, Crmdp, Dynamics, PolicyKind};
use crmdp_lab::decoupled::fixtures::random_learnable_fixture;
use crmdp_lab::decoupled::{
    explore, exploration_bound, learnability_check, reconstruct, DecoupledCrmdp, ObservationGraph,
};
use crmdp_lab::envs::random::{random_symmetric_crmdp, unichain_fixture};
use crmdp_lab::harness::{
    emit_csv, parse_summary, run_experiment, ExperimentConfig, NamedSpec, SummaryRow, THREADS_ENV,
};
use crmdp_lab::quantiliser::{stationary_distribution, value_supports, SimpleQuantiliser};
use crmdp_lab::rng::rng_from_seed;

fn model(seed: u64, n: usize, k: usize) -> Crmdp {
    random_symmetric_crmdp(&mut rng_from_seed(seed), n, k, 4)
}

fn actions(m: &Crmdp, agent: Box<dyn Agent>, t: usize, seed: u64) -> Vec<(usize, Option<usize>)> {
    let mut out = Vec::new();
    let mut p = PolicyKind::HistoryBased(agent);
    run_episode(m, &mut p, 0, t, seed, |s| out.push((s.state, s.action))).unwrap();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_values_stay_within_discounted_range(
        updates in prop::collection::vec((0usize..4, 0usize..3, 0.0f64..=1.0, 0usize..4), 1..400),
        gamma in 0.0f64..0.99,
        alpha in 0.01f64..=1.0,
        start in 0.0f64..=1.0,
    ) {
        let cap = 1.0 / (1.0 - gamma);
        let mut q = QTable::new(4, 3, alpha, gamma).unwrap();
        q.fill(start * cap);
        for (s, a, r, next) in updates {
            q.update(s, a, r, next);
        }
        prop_assert!(q.values().iter().all(|&v| (-1e-12..=cap + 1e-9).contains(&v)));
    }

    #[test]
    fn greedy_choice_ignores_rng_and_picks_first_maximum(row in prop::collection::vec(0u8..4, 1..6), seed in any::<u64>()) {
        let mut q = QTable::new(1, row.len(), 0.5, 0.5).unwrap();
        for (a, &v) in row.iter().enumerate() {
            q.set(0, a, v as f64);
        }
        let max = *row.iter().max().unwrap();
        let first = row.iter().position(|&v| v == max).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(epsilon_greedy_act(&q, 0, 0.0, &mut rng), first);
    }

    #[test]
    fn agents_see_only_observed_rewards(seed in any::<u64>(), n in 2usize..6, run_seed in any::<u64>()) {
        // The mirror has the same dynamics and observed rewards but different
        // true rewards, so any agent must behave identically on both.
        let m = model(seed, n, 3);
        let mm = mirror(&m).unwrap();
        let make: [fn(usize, usize, &Crmdp) -> Box<dyn Agent>; 4] = [
            |n, k, _| Box::new(QLearningAgent::new(n, k, 0.1, 0.9, Exploration::EpsilonGreedy { epsilon: 0.2 }).unwrap()),
            |n, k, _| Box::new(QLearningAgent::new(n, k, 0.1, 0.9, Exploration::softmax_beta(2.0)).unwrap()),
            |_, _, m| Box::new(SimpleQuantiliser::new(m.dynamics().clone(), 0.5).unwrap()),
            |_, k, _| Box::new(RandomAgent::new(k)),
        ];
        for f in make {
            prop_assert_eq!(actions(&m, f(n, 3, &m), 300, run_seed), actions(&mm, f(n, 3, &mm), 300, run_seed));
        }
    }

    #[test]
    fn trajectories_follow_transition_support(seed in any::<u64>(), n in 1usize..6, run_seed in any::<u64>()) {
        let m = model(seed, n, 2);
        let mut p = PolicyKind::HistoryBased(Box::new(RandomAgent::new(2)));
        let tr = simulate(&m, &mut p, 0, 200, run_seed).unwrap();
        for w in tr.steps.windows(2) {
            let a = w[1].action.unwrap();
            prop_assert!(m.dynamics().prob(w[0].state, a, w[1].state) > 0.0);
        }
        for s in &tr.steps {
            prop_assert_eq!(s.true_reward, m.true_reward(s.state));
            prop_assert_eq!(s.observed_reward, m.observed_reward(s.state));
        }
    }

    #[test]
    fn mirror_is_an_involution(seed in any::<u64>(), n in 1usize..7) {
        let m = model(seed, n, 2);
        let back = mirror(&mirror(&m).unwrap()).unwrap();
        prop_assert_eq!(back.true_rewards(), m.true_rewards());
        prop_assert_eq!(back.observed_rewards(), m.observed_rewards());
    }

    #[test]
    fn stationary_distribution_and_supports(seed in any::<u64>(), n in 2usize..7, delta in 0.0f64..0.9) {
        let mut rng = rng_from_seed(seed);
        let f = unichain_fixture(&mut rng, n, 2, 1);
        let policy: Vec<usize> = (0..n).map(|s| (seed as usize >> s) & 1).collect();
        let d = stationary_distribution(f.crmdp.dynamics(), &policy).unwrap();
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let vs = value_supports(&f.crmdp.observed_mdp(), &policy, delta).unwrap();
        let k = vs.support.len() as f64;
        for &s in &vs.support {
            prop_assert!(vs.contribution[s] >= delta / k - 1e-9);
        }
    }

    #[test]
    fn summary_csv_roundtrip(
        values in prop::collection::vec((any::<f64>(), 0.0f64..1.0, -1e300f64..1e300, 0.0f64..1e-300), 1..8),
        runs in 1usize..1000,
        seed in any::<u64>(),
    ) {
        let rows: Vec<SummaryRow> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.0.is_finite())
            .map(|(i, &(a, b, c, d))| SummaryRow {
                env: format!("env,\"{i}\""),
                agent: "qlearn".into(),
                params: r#"{"beta":2.0}"#.into(),
                runs,
                cycles: i,
                mean_observed: a,
                std_observed: b,
                mean_true: c,
                std_true: d,
                seed,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        emit_csv(&rows, &path).unwrap();
        prop_assert_eq!(parse_summary(&path).unwrap(), rows);
    }

    #[test]
    fn reconstruction_is_exact_on_learnable_graphs(seed in any::<u64>(), n in 3usize..10) {
        let mut rng = rng_from_seed(seed);
        let q = (n - 1) / 2;
        let f = random_learnable_fixture(&mut rng, n, q.min(2));
        let obs: Vec<_> =
            f.graph.edges.iter().map(|&(s, t)| (s, t, f.decoupled.observe(s, t).unwrap())).collect();
        let r = reconstruct(&obs, &f.graph).unwrap();
        prop_assert_eq!(r.reward(), Some(f.decoupled.base().true_rewards().to_vec()));
    }

    #[test]
    fn learnability_flags_exactly_the_stripped_target(seed in any::<u64>(), n in 3usize..9, pick in any::<usize>()) {
        let mut rng = rng_from_seed(seed);
        let f = random_learnable_fixture(&mut rng, n, 1);
        let target = pick % n;
        // Keep at most two non-safe observers of `target` (2q with q = 1).
        let mut kept = 0;
        let edges: BTreeSet<_> = f
            .graph
            .edges
            .iter()
            .copied()
            .filter(|&(s, t)| {
                if t != target {
                    return true;
                }
                if f.graph.safe.contains(&s) || kept == 2 {
                    return false;
                }
                kept += 1;
                true
            })
            .collect();
        let g = ObservationGraph { edges, ..f.graph.clone() };
        prop_assert_eq!(learnability_check(&g).failing_targets(), vec![target]);
    }

    #[test]
    fn exploration_bound_formula(n in 1usize..30, k in 1usize..5, d in 0.0f64..4.0) {
        let b = exploration_bound(n, k, d);
        let dd = d.ceil();
        prop_assert_eq!(b.value, 4.0 * dd * (k as f64).powf(2.0 * dd) * (n as f64).powi(3));
        prop_assert_eq!(b.degenerate, dd == 0.0);
    }
}

#[test]
fn self_observing_feedback_reduces_to_the_plain_model() {
    let m = model(3, 5, 2);
    let dm = DecoupledCrmdp::self_observing(m.clone());
    for s in 0..5 {
        for t in 0..5 {
            assert_eq!(dm.observe(s, t), (s == t).then(|| m.true_reward(t)));
        }
    }
    let g = dm.graph(BTreeSet::new(), 0);
    let obs: Vec<_> = (0..5).map(|s| (s, s, dm.observe(s, s).unwrap())).collect();
    assert_eq!(reconstruct(&obs, &g).unwrap().reward().as_deref(), Some(m.true_rewards()));
}

#[test]
fn exploration_collects_every_edge_within_the_bound() {
    let d = Dynamics::deterministic(4, 3, |s, a| [s, (s + 1) % 4, (s + 3) % 4][a]).unwrap();
    let truth = vec![0.0, 0.25, 0.5, 1.0];
    let base = Crmdp::uncorrupted(d, truth.clone()).unwrap();
    let dm = DecoupledCrmdp::new(base, vec![truth.into_iter().map(Some).collect(); 4]).unwrap();
    for seed in 0..20 {
        let r = explore(&dm, 0, seed, None).unwrap();
        assert_eq!(r.observations.len(), 16);
        assert!(r.steps as f64 <= r.bound.value);
    }
}

/// Chi-square test that the committed state is uniform over `{s : R̂(s) ≥ δ}`.
#[test]
fn quantiliser_commits_uniformly() {
    let observed = vec![0.2, 0.6, 0.7, 0.9, 1.0];
    let d = Dynamics::deterministic(5, 5, |_, a| a).unwrap();
    let m = Crmdp::uncorrupted(d, observed).unwrap();
    let trials = 4000;
    let mut counts = [0usize; 5];
    for seed in 0..trials {
        let mut p = PolicyKind::HistoryBased(Box::new(SimpleQuantiliser::new(m.dynamics().clone(), 0.5).unwrap()));
        let mut last = 0;
        run_episode(&m, &mut p, 0, 200, seed, |s| last = s.state).unwrap();
        counts[last] += 1;
    }
    assert_eq!(counts[0], 0);
    let expected = trials as f64 / 4.0;
    let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9% quantile of chi-square with 3 degrees of freedom.
    assert!(chi2 < 16.27, "chi2 = {chi2}, counts {counts:?}");
}

/// Long-run visit frequencies match the computed stationary distribution.
#[test]
fn visit_frequencies_match_stationary_distribution() {
    let f = unichain_fixture(&mut rng_from_seed(9), 5, 2, 1);
    let policy = vec![0, 1, 0, 1, 1];
    let d = stationary_distribution(f.crmdp.dynamics(), &policy).unwrap();
    let t = 400_000;
    let mut visits = [0usize; 5];
    let mut p = PolicyKind::StationaryDeterministic(policy);
    run_episode(&f.crmdp, &mut p, 0, t, 1, |s| visits[s.state] += 1).unwrap();
    for s in 0..5 {
        let freq = visits[s] as f64 / (t + 1) as f64;
        assert!((freq - d[s]).abs() < 0.01, "state {s}: {freq} vs {}", d[s]);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = ExperimentConfig {
        cycles: 5_000,
        runs: 12,
        seed: 5,
        report_every: 1_000,
        ..ExperimentConfig::new(NamedSpec::new("gridworld-2g"), NamedSpec::new("softmax"))
    };
    std::env::set_var(THREADS_ENV, "1");
    let a = run_experiment(&cfg).unwrap();
    std::env::set_var(THREADS_ENV, "3");
    let b = run_experiment(&cfg).unwrap();
    std::env::remove_var(THREADS_ENV);
    assert_eq!(a, b);
}
