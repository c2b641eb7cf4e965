use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::HarnessError;

/// A registry name plus free-form parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSpec {
    pub name: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl NamedSpec {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), params: Map::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Parameters as compact JSON with sorted keys.
    pub fn params_json(&self) -> String {
        Value::Object(self.params.clone()).to_string()
    }
}

fn default_cycles() -> usize {
    1_000_000
}

fn default_runs() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub environment: NamedSpec,
    pub agent: NamedSpec,
    #[serde(default = "default_cycles")]
    pub cycles: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Stride for curve samples; 0 disables curves.
    #[serde(default)]
    pub report_every: usize,
}

impl ExperimentConfig {
    pub fn new(environment: NamedSpec, agent: NamedSpec) -> Self {
        Self { environment, agent, cycles: default_cycles(), runs: default_runs(), seed: 0, report_every: 0 }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.cycles == 0 {
            return Err(HarnessError::Config("cycles must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(HarnessError::Config("runs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Typed access to a parameter map that rejects unknown keys.
pub(crate) struct Params<'a> {
    owner: &'a str,
    map: &'a Map<String, Value>,
}

impl<'a> Params<'a> {
    pub fn new(owner: &'a str, map: &'a Map<String, Value>, allowed: &[&str]) -> Result<Self, HarnessError> {
        if let Some(key) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(HarnessError::Param {
                owner: owner.to_string(),
                name: key.clone(),
                reason: format!("unknown parameter (allowed: {})", allowed.join(", ")),
            });
        }
        Ok(Self { owner, map })
    }

    fn bad(&self, name: &str, reason: &str) -> HarnessError {
        HarnessError::Param { owner: self.owner.to_string(), name: name.to_string(), reason: reason.to_string() }
    }

    pub fn f64_opt(&self, name: &str) -> Result<Option<f64>, HarnessError> {
        match self.map.get(name) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| self.bad(name, "expected a number")),
        }
    }

    pub fn f64_or(&self, name: &str, default: f64) -> Result<f64, HarnessError> {
        Ok(self.f64_opt(name)?.unwrap_or(default))
    }

    pub fn f64_req(&self, name: &str) -> Result<f64, HarnessError> {
        self.f64_opt(name)?.ok_or_else(|| self.bad(name, "required"))
    }

    pub fn usize_or(&self, name: &str, default: usize) -> Result<usize, HarnessError> {
        match self.map.get(name) {
            None | Some(Value::Null) => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| self.bad(name, "expected a non-negative integer")),
        }
    }

    pub fn str_opt(&self, name: &str) -> Result<Option<&'a str>, HarnessError> {
        match self.map.get(name) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v.as_str().map(Some).ok_or_else(|| self.bad(name, "expected a string")),
        }
    }

    pub fn f64_list_opt(&self, name: &str) -> Result<Option<Vec<f64>>, HarnessError> {
        match self.map.get(name) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| self.bad(name, "expected numbers")))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(self.bad(name, "expected an array")),
        }
    }

    pub fn value(&self, name: &str) -> Option<&'a Value> {
        self.map.get(name)
    }
}
