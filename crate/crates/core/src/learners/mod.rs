//! Desk-scale learners and the evaluation protocol.

pub mod eval;
pub mod features;
pub mod linear_pg;
pub mod snapshot;
pub mod tabular_q;

pub use eval::{evaluate, EvalProtocol};
pub use features::FeatureLayout;
pub use linear_pg::LinearPg;
pub use snapshot::{PolicySnapshot, SnapshotFile};
pub use tabular_q::TabularQ;

use crate::env::{Action, Level, Observation};
use crate::error::{Error, Result};
use crate::rng::Seed;
use crate::solvers::Scripted;
use crate::umdp::{Policy, Trajectory};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    TabularQ,
    LinearPg,
    /// A fixed scripted policy pursuing the proxy goal; updates are counted and ignored.
    ScriptedProxy,
    /// A fixed scripted policy pursuing the true goal.
    ScriptedTrue,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub learning_rate: f64,
    /// Exploration rate for tabular Q-learning.
    pub epsilon: f64,
    /// Entropy bonus coefficient for the policy-gradient learner.
    pub entropy_bonus: f64,
    pub gamma: f64,
    pub layout: FeatureLayout,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            kind: LearnerKind::LinearPg,
            learning_rate: 0.1,
            epsilon: 0.1,
            entropy_bonus: 0.01,
            gamma: 0.999,
            layout: FeatureLayout::Flat,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if !(self.entropy_bonus >= 0.0) {
            return Err(Error::Config("entropy bonus must be non-negative".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct UpdateStats {
    pub episodes: usize,
    pub transitions: usize,
    pub mean_return: f64,
    /// Learner-specific objective (negative surrogate for policy gradient, TD error for Q).
    pub loss: f64,
}

/// A policy that can be trained on batches of episodes.
pub trait Learner: Policy + Send {
    /// One learning step on a batch of completed episodes. Empty batches are an error.
    fn update(&mut self, batch: &[(&Level, &Trajectory)]) -> Result<UpdateStats>;

    /// Number of successful `update` calls so far.
    fn update_count(&self) -> u64;

    fn snapshot(&self) -> PolicySnapshot;

    /// Act on a raw observation.
    fn act(&self, obs: &Observation, seed: Seed) -> Result<Action>;
}

pub(crate) fn batch_mean_return(batch: &[(&Level, &Trajectory)], gamma: f64) -> f64 {
    let n = batch.len().max(1) as f64;
    batch.iter().map(|(_, t)| t.discounted_return(crate::umdp::RewardSelector::True, gamma)).sum::<f64>() / n
}

/// A scripted policy behind the learner interface.
#[derive(Clone, Debug)]
pub struct Frozen {
    pub policy: Scripted,
    updates: u64,
}

impl Frozen {
    pub fn new(policy: Scripted) -> Frozen {
        Frozen { policy, updates: 0 }
    }
}

impl Policy for Frozen {
    fn action_probs(&self, level: &Level, state: &crate::env::EnvState) -> [f64; 4] {
        self.policy.action_probs(level, state)
    }
}

impl Learner for Frozen {
    fn update(&mut self, batch: &[(&Level, &Trajectory)]) -> Result<UpdateStats> {
        if batch.is_empty() {
            return Err(Error::Empty("update batch"));
        }
        self.updates += 1;
        Ok(UpdateStats {
            episodes: batch.len(),
            transitions: batch.iter().map(|(_, t)| t.len()).sum(),
            mean_return: batch_mean_return(batch, self.policy.gamma),
            loss: 0.0,
        })
    }

    fn update_count(&self) -> u64 {
        self.updates
    }

    fn snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::Scripted { goal: self.policy.goal, gamma: self.policy.gamma }
    }

    fn act(&self, _: &Observation, _: Seed) -> Result<Action> {
        Err(Error::Contract("scripted policies act on full states, not observations".into()))
    }
}

pub fn build_learner(cfg: &LearnerConfig, channels: usize) -> Result<Box<dyn Learner>> {
    cfg.validate()?;
    Ok(match cfg.kind {
        LearnerKind::TabularQ => Box::new(TabularQ::new(*cfg)),
        LearnerKind::LinearPg => Box::new(LinearPg::new(*cfg, channels)),
        LearnerKind::ScriptedProxy => Box::new(Frozen::new(Scripted { gamma: cfg.gamma, ..Scripted::proxy_goal() })),
        LearnerKind::ScriptedTrue => Box::new(Frozen::new(Scripted { gamma: cfg.gamma, ..Scripted::true_goal() })),
    })
}
