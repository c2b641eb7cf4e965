use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Crmdp, CrmdpError, Dynamics, Result};

pub const DOCUMENT_VERSION: u32 = 1;

/// On-disk form of a [`Crmdp`].
///
/// `transition[s][a][s']` is dense. Corruption is listed as
/// `[state, r_in, r_out]` triples; unlisted pairs are the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrmdpDocument {
    pub version: u32,
    pub states: usize,
    pub actions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<Vec<f64>>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub true_reward: Vec<f64>,
    #[serde(default)]
    pub corruption_pairs: Vec<(usize, f64, f64)>,
}

impl From<&Crmdp> for CrmdpDocument {
    fn from(m: &Crmdp) -> Self {
        let d = m.dynamics();
        let transition = (0..d.n_states())
            .map(|s| {
                (0..d.n_actions())
                    .map(|a| {
                        let mut dense = vec![0.0; d.n_states()];
                        for &(t, p) in d.row(s, a) {
                            dense[t] = p;
                        }
                        dense
                    })
                    .collect()
            })
            .collect();
        Self {
            version: DOCUMENT_VERSION,
            states: d.n_states(),
            actions: d.n_actions(),
            rewards: Some(m.rewards().to_vec()),
            transition,
            true_reward: m.true_rewards().to_vec(),
            corruption_pairs: m.corruption_pairs(),
        }
    }
}

impl TryFrom<CrmdpDocument> for Crmdp {
    type Error = CrmdpError;

    fn try_from(doc: CrmdpDocument) -> Result<Self> {
        if doc.version != DOCUMENT_VERSION {
            return Err(CrmdpError::UnsupportedVersion(doc.version));
        }
        if doc.transition.len() != doc.states {
            return Err(CrmdpError::Shape { what: "transition states", expected: doc.states, got: doc.transition.len() });
        }
        if let Some(row) = doc.transition.first() {
            if row.len() != doc.actions {
                return Err(CrmdpError::Shape { what: "transition actions", expected: doc.actions, got: row.len() });
            }
        }
        let dynamics = Dynamics::from_dense(&doc.transition)?;
        Crmdp::new(dynamics, doc.rewards, doc.true_reward, &doc.corruption_pairs)
    }
}

impl Crmdp {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CrmdpDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<CrmdpDocument>(text)?.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|source| CrmdpError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CrmdpError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}
