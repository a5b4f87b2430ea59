//! Run configuration: one strict JSON document.

use crate::env::{EnvKind, GRID, MAX_STEPS};
use crate::error::{Error, Result};
use crate::learners::{EvalProtocol, LearnerConfig};
use crate::levelgen::{GenClass, GeneratorSpec, MixtureSpec};
use crate::rng::Seed;
use crate::ued::{AdversaryConfig, TrainSpec};
use crate::umdp::{DiscountSpec, RewardSelector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const CONFIG_FORMAT: &str = "regret-lab-config";
pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentSection {
    pub kind: EnvKind,
    pub gamma: f64,
    pub max_steps: u16,
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        EnvironmentSection { kind: EnvKind::Corner, gamma: 0.999, max_steps: MAX_STEPS }
    }
}

/// Knobs shared by the non-distinguishing and distinguishing generators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSection {
    /// Probability of drawing from the distinguishing generator.
    pub alpha: f64,
    pub wall_probability: f64,
    pub active_region: usize,
    pub corner_region: usize,
    pub dish_channels: u8,
    pub keys_counts: Option<(usize, usize)>,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        let g = GeneratorSpec::default();
        GeneratorSection {
            alpha: 0.0,
            wall_probability: g.wall_probability,
            active_region: GRID,
            corner_region: g.corner_region,
            dish_channels: g.dish_channels,
            keys_counts: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    /// Held-out levels per evaluation set during training; zero disables evaluation.
    pub levels: usize,
    /// Levels drawn per set by the standalone `eval` command.
    pub eval_batch_size: usize,
    pub eval_steps: usize,
    pub reward: RewardSelector,
}

impl Default for EvalSection {
    fn default() -> Self {
        let p = EvalProtocol::default();
        EvalSection { levels: 64, eval_batch_size: p.eval_batch_size, eval_steps: p.eval_steps, reward: p.reward }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    /// Adversary steps (generate or replay cycles).
    pub steps: u64,
    /// Stop once the learner has made this many updates.
    pub max_updates: Option<u64>,
    pub log_every: u64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection { steps: 1000, max_updates: None, log_every: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedsSection {
    /// One independent run per root seed.
    pub runs: Vec<u64>,
}

impl Default for SeedsSection {
    fn default() -> Self {
        SeedsSection { runs: vec![0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub metrics: String,
    pub snapshot: String,
    pub manifest: String,
    pub theory_report: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "runs/default".into(),
            metrics: "metrics.csv".into(),
            snapshot: "policy.json".into(),
            manifest: "manifest.json".into(),
            theory_report: "theory.json".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheorySection {
    /// Comma-separated suite names or `all`.
    pub suites: String,
    pub instances: usize,
    pub seed: u64,
}

impl Default for TheorySection {
    fn default() -> Self {
        TheorySection { suites: "all".into(), instances: 100, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default)]
    pub environment: EnvironmentSection,
    #[serde(default)]
    pub generator: GeneratorSection,
    #[serde(default)]
    pub adversary: AdversaryConfig,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub seeds: SeedsSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Also run the theory suites when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheorySection>,
}

fn default_format() -> String {
    CONFIG_FORMAT.into()
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format: default_format(),
            version: default_version(),
            environment: EnvironmentSection::default(),
            generator: GeneratorSection::default(),
            adversary: AdversaryConfig::default(),
            learner: LearnerConfig::default(),
            eval: EvalSection::default(),
            training: TrainingSection::default(),
            seeds: SeedsSection::default(),
            output: OutputSection::default(),
            theory: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        if cfg.format != CONFIG_FORMAT || cfg.version != CONFIG_VERSION {
            return Err(Error::Version(format!("{} v{}", cfg.format, cfg.version)));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        RunConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the compact serialisation, hex encoded.
    pub fn sha256(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(hex(&Sha256::digest(&bytes)))
    }

    pub fn discount(&self) -> DiscountSpec {
        DiscountSpec { gamma: self.environment.gamma, max_steps: self.environment.max_steps }
    }

    pub fn generator(&self, class: GenClass) -> GeneratorSpec {
        let g = &self.generator;
        GeneratorSpec {
            env: self.environment.kind,
            class,
            wall_probability: g.wall_probability,
            active_region: g.active_region,
            corner_region: g.corner_region,
            dish_channels: g.dish_channels,
            keys_counts: g.keys_counts,
        }
    }

    pub fn mixture(&self) -> MixtureSpec {
        MixtureSpec::from_base(self.generator.alpha, self.generator(GenClass::NonDistinguishing))
    }

    pub fn protocol(&self) -> EvalProtocol {
        EvalProtocol { eval_batch_size: self.eval.eval_batch_size, eval_steps: self.eval.eval_steps, reward: self.eval.reward, gamma: self.environment.gamma }
    }

    pub fn train_spec(&self) -> TrainSpec {
        TrainSpec {
            mixture: self.mixture(),
            adversary: self.adversary,
            discount: self.discount(),
            eval: self.protocol(),
            eval_levels: self.eval.levels,
            steps: self.training.steps,
            max_updates: self.training.max_updates,
            log_every: self.training.log_every,
        }
    }

    /// Observation channels of this configuration's levels.
    pub fn channels(&self) -> usize {
        match self.environment.kind {
            EnvKind::Corner => 3,
            EnvKind::Dish => 3 + self.generator.dish_channels as usize,
            EnvKind::Keys => 5,
        }
    }

    pub fn seeds(&self) -> Vec<Seed> {
        self.seeds.runs.iter().map(|&s| Seed(s)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.train_spec().validate()?;
        self.learner.validate()?;
        if self.learner.gamma != self.environment.gamma {
            return Err(Error::Config(format!(
                "learner gamma {} differs from environment gamma {}",
                self.learner.gamma, self.environment.gamma
            )));
        }
        if self.eval.eval_steps < self.environment.max_steps as usize {
            return Err(Error::Config(format!(
                "eval_steps {} shorter than an episode ({} steps)",
                self.eval.eval_steps, self.environment.max_steps
            )));
        }
        if self.seeds.runs.is_empty() {
            return Err(Error::Config("seeds.runs must list at least one seed".into()));
        }
        let mut sorted = self.seeds.runs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.runs.len() {
            return Err(Error::Config("seeds.runs contains duplicates".into()));
        }
        for name in [&self.output.metrics, &self.output.snapshot, &self.output.manifest, &self.output.theory_report] {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(Error::Config(format!("output file name `{name}` must be a plain file name")));
            }
        }
        if let Some(t) = &self.theory {
            crate::theory::Suite::parse_list(&t.suites)?;
        }
        Ok(())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ued::Method;

    #[test]
    fn defaults_follow_the_hyperparameter_table() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c.environment.gamma, 0.999);
        assert_eq!(c.adversary.capacity, 4096);
        assert_eq!(c.adversary.temperature, 0.1);
        assert_eq!(c.adversary.staleness_coeff, 0.1);
        assert_eq!(c.adversary.batch_size, 256);
        assert_eq!(c.adversary.rollout_steps, 128);
        assert_eq!(c.adversary.n_edits, 12);
        assert_eq!(c.adversary.replay_rate(), 0.33);
        let accel = AdversaryConfig { method: Method::Accel, ..c.adversary };
        assert_eq!(accel.replay_rate(), 0.5);
    }

    #[test]
    fn round_trip_is_identity() {
        let mut c = RunConfig::default();
        c.generator.alpha = 0.01;
        c.training.max_updates = Some(7);
        c.theory = Some(TheorySection::default());
        let back = RunConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.sha256().unwrap(), c.sha256().unwrap());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(RunConfig::from_json(r#"{"bogus": 1}"#), Err(Error::Config(_))));
        assert!(RunConfig::from_json(r#"{"adversary": {"temprature": 0.2}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"generator": {"alpha": 1.5}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"generator": {"alpha": -0.1}}"#).is_err());
        assert!(matches!(RunConfig::from_json(r#"{"version": 2}"#), Err(Error::Version(_))));
        assert!(RunConfig::from_json(r#"{"environment": {"gamma": 0.99}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"seeds": {"runs": []}}"#).is_err());
    }
}
