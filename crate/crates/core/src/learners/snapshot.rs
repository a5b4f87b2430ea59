//! Versioned learner snapshots (JSON).

use super::{FeatureLayout, LearnerConfig, LinearPg, TabularQ};
use crate::error::{Error, Result};
use crate::solvers::{Goal, Scripted};
use crate::umdp::Policy;
use serde::{Deserialize, Serialize};

pub const SNAPSHOT_FORMAT: &str = "regret-lab-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySnapshot {
    TabularQ { config: LearnerConfig, updates: u64, table: Vec<(u64, [f64; 4])> },
    LinearPg { config: LearnerConfig, channels: usize, updates: u64, weights: Vec<f64> },
    Scripted { goal: Goal, gamma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotFile {
    pub format: String,
    pub version: u32,
    pub policy: PolicySnapshot,
}

impl SnapshotFile {
    pub fn new(policy: PolicySnapshot) -> SnapshotFile {
        SnapshotFile { format: SNAPSHOT_FORMAT.to_string(), version: SNAPSHOT_VERSION, policy }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<SnapshotFile> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let h: Header = serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        if h.format != SNAPSHOT_FORMAT || h.version != SNAPSHOT_VERSION {
            return Err(Error::Version(format!("{} v{}", h.format, h.version)));
        }
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
    }

    pub fn into_policy(self) -> Result<Box<dyn Policy + Send>> {
        Ok(match self.policy {
            PolicySnapshot::TabularQ { config, updates, table } => {
                Box::new(TabularQ::from_table(config, table.into_iter().collect(), updates))
            }
            PolicySnapshot::LinearPg { config, channels, updates, weights } => {
                Box::new(LinearPg::from_weights(config, channels, weights, updates)?)
            }
            PolicySnapshot::Scripted { goal, gamma } => Box::new(Scripted { goal, gamma }),
        })
    }
}

/// Layout recorded in a snapshot, if it has one.
pub fn layout_of(s: &PolicySnapshot) -> Option<FeatureLayout> {
    match s {
        PolicySnapshot::LinearPg { config, .. } => Some(config.layout),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::Learner;

    #[test]
    fn round_trip_and_version_check() {
        let mut pg = LinearPg::new(LearnerConfig::default(), 3);
        pg.weights[5] = 0.1 + 0.2;
        let f = SnapshotFile::new(pg.snapshot());
        let text = f.to_json().unwrap();
        assert!(text.starts_with("{\"format\":\"regret-lab-snapshot\",\"version\":1"));
        assert_eq!(SnapshotFile::from_json(&text).unwrap(), f);
        let bad = text.replace("\"version\":1", "\"version\":2");
        assert!(matches!(SnapshotFile::from_json(&bad), Err(Error::Version(_))));
    }
}
