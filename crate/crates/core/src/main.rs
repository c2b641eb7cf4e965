use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use crmdp_lab::decoupled::cirl::run_cirl_cr;
use crmdp_lab::decoupled::fixtures::{rich_graph_fixture, rl_graph_fixture, teleport_fixture};
use crmdp_lab::decoupled::{explore, learnability_check, reconstruct, ObservationGraph, ObservationTriple};
use crmdp_lab::envs::cirl::HUMAN_1;
use crmdp_lab::envs::cirl_example;
use crmdp_lab::harness::{
    build_environment, describe, emit_csv, emit_curves, run_check, run_experiment, summarize, summary_csv, table1,
    ExperimentConfig, NamedSpec, Scale, CHECK_IDS,
};

#[derive(Parser)]
#[command(name = "crmdp-lab", version, about = "Experiments on MDPs with corrupted reward channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Summary CSV path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Curve CSV path; needs `report_every` in the config.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// The three-layout gridworld comparison.
    Table1 {
        #[arg(long, default_value = "small")]
        scale: Scale,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite; exits non-zero if any line fails.
    Check {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(CHECK_IDS))]
        id: String,
    },
    /// Inspect a named environment.
    Env {
        #[command(subcommand)]
        action: EnvAction,
    },
    /// Report which targets of an observation graph are learnable.
    CheckLearnability { graph: PathBuf },
    /// Reconstruct rewards from a graph and a JSON list of `[observer, target, value]`.
    Reconstruct {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        observations: PathBuf,
    },
    /// Random-walk exploration on a built-in decoupled fixture.
    ExploreDemo {
        /// rich, rl or teleport-<n>.
        #[arg(long, default_value = "rich")]
        fixture: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The cooperative IRL example with a Bayesian commit-after-exploring agent.
    CirlDemo {
        #[arg(long, default_value_t = 0.6)]
        prior_h2: f64,
        #[arg(long, default_value_t = 20)]
        explore_steps: usize,
        #[arg(long, default_value_t = 10_000)]
        cycles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum EnvAction {
    /// Print the environment in the JSON model format.
    Dump { name: String },
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, out, curves } => {
            let cfg = ExperimentConfig::load(&config)?;
            let result = run_experiment(&cfg)?;
            let rows = summarize(std::slice::from_ref(&result));
            match out {
                Some(path) => emit_csv(&rows, path)?,
                None => print!("{}", summary_csv(&rows)?),
            }
            if let Some(path) = curves {
                if cfg.report_every == 0 {
                    bail!("--curves needs report_every > 0 in the config");
                }
                emit_curves(&result, path)?;
            }
        }
        Command::Table1 { scale, out } => {
            let rows = table1(scale)?;
            match out {
                Some(path) => emit_csv(&rows, path)?,
                None => {
                    let mut stdout = std::io::stdout().lock();
                    stdout.write_all(summary_csv(&rows)?.as_bytes())?;
                }
            }
        }
        Command::Check { id } => {
            let report = run_check(&id)?;
            print!("{}", report.render());
            return Ok(report.passed());
        }
        Command::Env { action: EnvAction::Dump { name } } => {
            if name == "cirl-ex23" {
                print_json(&cirl_example())?;
            } else {
                let env = build_environment(&NamedSpec::new(&name))?;
                eprintln!("{}", describe(&env));
                println!("{}", env.crmdp.to_json()?);
            }
        }
        Command::CheckLearnability { graph } => {
            let g = ObservationGraph::load(&graph)?;
            let report = learnability_check(&g);
            print_json(&report)?;
            return Ok(report.overall);
        }
        Command::Reconstruct { graph, observations } => {
            let g = ObservationGraph::load(&graph)?;
            let text = std::fs::read_to_string(&observations)
                .with_context(|| format!("reading {}", observations.display()))?;
            let obs: Vec<ObservationTriple> = serde_json::from_str(&text)?;
            print_json(&reconstruct(&obs, &g)?)?;
        }
        Command::ExploreDemo { fixture, seed } => {
            let f = match fixture.as_str() {
                "rich" => rich_graph_fixture(),
                "rl" => rl_graph_fixture(),
                other => match other.strip_prefix("teleport-").and_then(|n| n.parse().ok()) {
                    Some(n) if n > 0 => teleport_fixture(n),
                    _ => bail!("unknown fixture `{other}` (rich, rl or teleport-<n>)"),
                },
            };
            let record = explore(&f.decoupled, 0, seed, None)?;
            let outcome = reconstruct(&record.observations, &f.graph)?;
            print_json(&serde_json::json!({
                "steps": record.steps,
                "bound": record.bound,
                "edges": record.observations.len(),
                "learnable": learnability_check(&f.graph).overall,
                "reconstruction": outcome,
                "true_reward": f.decoupled.base().true_rewards(),
            }))?;
        }
        Command::CirlDemo { prior_h2, explore_steps, cycles, seed } => {
            print_json(&run_cirl_cr(&cirl_example(), HUMAN_1, prior_h2, explore_steps, cycles, seed)?)?;
        }
    }
    Ok(true)
}
