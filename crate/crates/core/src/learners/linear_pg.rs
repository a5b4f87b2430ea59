//! Linear softmax policy trained with REINFORCE, a per-level baseline and an
//! entropy bonus.
//!
//! Scores are `z_a = sum_{i in F(s)} w[a][i]` over the active Boolean features
//! `F(s)`. The surrogate maximised per batch is
//! `J(w) = (1/N) sum_episodes sum_t [A_t log pi(a_t|s_t) + beta H(pi(.|s_t))]`
//! with advantages `A_t = G_t - b` held fixed.

use super::features::{active_features, observation_features};
use super::{Learner, LearnerConfig, PolicySnapshot, UpdateStats};
use crate::env::{Action, EnvState, Level, Observation};
use crate::error::{Error, Result};
use crate::rng::Seed;
use crate::umdp::{sample_index, Policy, RewardSelector, Trajectory};
use fnv::FnvHashMap;

#[derive(Clone, Debug)]
pub struct LinearPg {
    pub config: LearnerConfig,
    pub channels: usize,
    /// Row-major `[action][feature]`.
    pub weights: Vec<f64>,
    updates: u64,
}

fn softmax(z: [f64; 4]) -> [f64; 4] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn entropy(p: &[f64; 4]) -> f64 {
    -p.iter().filter(|&&q| q > 0.0).map(|&q| q * q.ln()).sum::<f64>()
}

/// Per-step advantages `G_t - b` for each episode in the batch.
///
/// The baseline is the mean episode return over the episodes of the same
/// level when the batch holds at least two of them, otherwise the batch mean.
pub fn advantages(batch: &[(&Level, &Trajectory)], gamma: f64) -> Vec<Vec<f64>> {
    let togo: Vec<Vec<f64>> = batch
        .iter()
        .map(|(_, t)| {
            let mut g = vec![0.0; t.len()];
            let mut acc = 0.0;
            for (i, s) in t.steps.iter().enumerate().rev() {
                acc = s.true_reward + gamma * acc;
                g[i] = acc;
            }
            g
        })
        .collect();
    let first = |g: &Vec<f64>| g.first().copied().unwrap_or(0.0);
    let batch_mean = togo.iter().map(first).sum::<f64>() / togo.len().max(1) as f64;
    let mut per_level: FnvHashMap<u64, (f64, usize)> = FnvHashMap::default();
    for ((_, t), g) in batch.iter().zip(&togo) {
        let e = per_level.entry(t.level_id).or_default();
        e.0 += first(g);
        e.1 += 1;
    }
    batch
        .iter()
        .zip(togo)
        .map(|((_, t), g)| {
            let (sum, n) = per_level[&t.level_id];
            let b = if n >= 2 { sum / n as f64 } else { batch_mean };
            g.into_iter().map(|x| x - b).collect()
        })
        .collect()
}

impl LinearPg {
    pub fn new(config: LearnerConfig, channels: usize) -> LinearPg {
        let dim = config.layout.dim(channels);
        LinearPg { config, channels, weights: vec![0.0; 4 * dim], updates: 0 }
    }

    pub fn from_weights(config: LearnerConfig, channels: usize, weights: Vec<f64>, updates: u64) -> Result<LinearPg> {
        let dim = config.layout.dim(channels);
        if weights.len() != 4 * dim {
            return Err(Error::Shape { expected: 4 * dim, got: weights.len() });
        }
        Ok(LinearPg { config, channels, weights, updates })
    }

    pub fn dim(&self) -> usize {
        self.config.layout.dim(self.channels)
    }

    fn check_level(&self, level: &Level) -> Result<()> {
        if level.channels() != self.channels {
            return Err(Error::Shape { expected: self.channels, got: level.channels() });
        }
        Ok(())
    }

    pub fn probs_from_features(&self, f: &[u32]) -> [f64; 4] {
        let dim = self.dim();
        let mut z = [0.0; 4];
        for (a, za) in z.iter_mut().enumerate() {
            let row = &self.weights[a * dim..(a + 1) * dim];
            *za = f.iter().map(|&i| row[i as usize]).sum();
        }
        softmax(z)
    }

    fn features(&self, level: &Level, s: &EnvState) -> Vec<u32> {
        let mut f = Vec::with_capacity(64);
        active_features(self.config.layout, level, s, &mut f);
        f
    }

    /// Surrogate objective `J(w)` for fixed advantages.
    pub fn surrogate(&self, batch: &[(&Level, &Trajectory)], adv: &[Vec<f64>]) -> f64 {
        let beta = self.config.entropy_bonus;
        let mut j = 0.0;
        for ((level, t), a) in batch.iter().zip(adv) {
            for (step, &at) in t.steps.iter().zip(a) {
                let p = self.probs_from_features(&self.features(level, &step.state));
                j += at * p[step.action.index()].ln() + beta * entropy(&p);
            }
        }
        j / batch.len() as f64
    }

    /// Analytic gradient of [`LinearPg::surrogate`] with respect to the weights.
    pub fn gradient(&self, batch: &[(&Level, &Trajectory)], adv: &[Vec<f64>]) -> Vec<f64> {
        let dim = self.dim();
        let beta = self.config.entropy_bonus;
        let mut g = vec![0.0; self.weights.len()];
        let scale = 1.0 / batch.len() as f64;
        for ((level, t), a) in batch.iter().zip(adv) {
            for (step, &at) in t.steps.iter().zip(a) {
                let f = self.features(level, &step.state);
                let p = self.probs_from_features(&f);
                let h = entropy(&p);
                for b in 0..4 {
                    let ind = if b == step.action.index() { 1.0 } else { 0.0 };
                    let logp_term = at * (ind - p[b]);
                    let ent_term = if p[b] > 0.0 { -beta * p[b] * (p[b].ln() + h) } else { 0.0 };
                    let coef = scale * (logp_term + ent_term);
                    let row = &mut g[b * dim..(b + 1) * dim];
                    for &i in &f {
                        row[i as usize] += coef;
                    }
                }
            }
        }
        g
    }
}

impl Policy for LinearPg {
    fn action_probs(&self, level: &Level, state: &EnvState) -> [f64; 4] {
        self.probs_from_features(&self.features(level, state))
    }
}

impl Learner for LinearPg {
    fn update(&mut self, batch: &[(&Level, &Trajectory)]) -> Result<UpdateStats> {
        if batch.is_empty() {
            return Err(Error::Empty("update batch"));
        }
        for (l, _) in batch {
            self.check_level(l)?;
        }
        let adv = advantages(batch, self.config.gamma);
        let g = self.gradient(batch, &adv);
        let j = self.surrogate(batch, &adv);
        let lr = self.config.learning_rate;
        for (w, d) in self.weights.iter_mut().zip(&g) {
            *w += lr * d;
        }
        self.updates += 1;
        let n = batch.len() as f64;
        Ok(UpdateStats {
            episodes: batch.len(),
            transitions: batch.iter().map(|(_, t)| t.len()).sum(),
            mean_return: batch.iter().map(|(_, t)| t.discounted_return(RewardSelector::True, self.config.gamma)).sum::<f64>() / n,
            loss: -j,
        })
    }

    fn update_count(&self) -> u64 {
        self.updates
    }

    fn snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::LinearPg { config: self.config, channels: self.channels, updates: self.updates, weights: self.weights.clone() }
    }

    fn act(&self, obs: &Observation, seed: Seed) -> Result<Action> {
        if obs.channels() != self.channels {
            return Err(Error::Shape { expected: self.channels, got: obs.channels() });
        }
        let f = observation_features(self.config.layout, obs)?;
        Ok(sample_index(&self.probs_from_features(&f), &mut seed.rng()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CornerLevel, Pos, Walls};
    use crate::learners::LearnerKind;

    #[test]
    fn zero_weights_are_uniform() {
        let pg = LinearPg::new(LearnerConfig { kind: LearnerKind::LinearPg, ..Default::default() }, 3);
        let l = Level::Corner(CornerLevel { walls: Walls::empty(), mouse_spawn: Pos::new(3, 3), cheese_pos: Pos::CORNER });
        assert_eq!(pg.action_probs(&l, &l.initial_state()), [0.25; 4]);
    }

    #[test]
    fn shape_mismatch() {
        let pg = LinearPg::new(LearnerConfig::default(), 3);
        assert!(matches!(pg.act(&Observation::zeros(5), Seed(0)), Err(Error::Shape { .. })));
        assert!(LinearPg::from_weights(LearnerConfig::default(), 3, vec![0.0; 3], 0).is_err());
    }

    #[test]
    fn softmax_is_stable() {
        let p = softmax([1000.0, 0.0, 0.0, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!((entropy(&[0.25; 4]) - 4f64.ln()).abs() < 1e-12);
    }
}
