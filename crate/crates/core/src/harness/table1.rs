//! The gridworld comparison: three layouts, five agents.

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, NamedSpec};
use super::output::{summarize, SummaryRow};
use super::run::run_experiment;
use super::HarnessError;

pub const TABLE1_SEED: u64 = 2017;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 10 runs of 2·10⁵ cycles.
    Small,
    /// 100 runs of 10⁶ cycles.
    Full,
}

impl Scale {
    pub fn runs_and_cycles(self) -> (usize, usize) {
        match self {
            Scale::Small => (10, 200_000),
            Scale::Full => (100, 1_000_000),
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "small" => Ok(Scale::Small),
            "full" => Ok(Scale::Full),
            other => Err(HarnessError::Config(format!("unknown scale `{other}` (expected small or full)"))),
        }
    }
}

/// Fifteen configs: layouts with 1, 2 and 4 goal tiles, each against
/// Q-learning, softmax Q-learning and quantilisers with δ ∈ {0.2, 0.5, 0.8}.
pub fn table1_configs(scale: Scale) -> Vec<ExperimentConfig> {
    let (runs, cycles) = scale.runs_and_cycles();
    let agents = [
        NamedSpec::new("qlearn"),
        NamedSpec::new("softmax").with("beta", 2.0),
        NamedSpec::new("quantile").with("delta", 0.2),
        NamedSpec::new("quantile").with("delta", 0.5),
        NamedSpec::new("quantile").with("delta", 0.8),
    ];
    ["gridworld-1g", "gridworld-2g", "gridworld-4g"]
        .into_iter()
        .flat_map(|env| {
            agents.iter().map(move |agent| ExperimentConfig {
                cycles,
                runs,
                seed: TABLE1_SEED,
                ..ExperimentConfig::new(NamedSpec::new(env), agent.clone())
            })
        })
        .collect()
}

pub fn table1(scale: Scale) -> Result<Vec<SummaryRow>, HarnessError> {
    let results = table1_configs(scale).iter().map(run_experiment).collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(&results))
}
