//! One-step Q-learning over hashed observations.

use super::{batch_mean_return, Learner, LearnerConfig, PolicySnapshot, UpdateStats};
use crate::env::{Action, EnvState, Level, Observation};
use crate::error::{Error, Result};
use crate::rng::Seed;
use crate::umdp::{sample_index, Policy, Trajectory};
use fnv::{FnvHashMap, FnvHasher};
use std::hash::Hasher;

#[derive(Clone, Debug)]
pub struct TabularQ {
    pub config: LearnerConfig,
    pub table: FnvHashMap<u64, [f64; 4]>,
    updates: u64,
}

/// 64-bit FNV-1a hash of the canonical bit serialisation.
pub fn observation_key(obs: &Observation) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&obs.to_bytes());
    h.finish()
}

impl TabularQ {
    pub fn new(config: LearnerConfig) -> TabularQ {
        TabularQ { config, table: FnvHashMap::default(), updates: 0 }
    }

    pub fn from_table(config: LearnerConfig, table: FnvHashMap<u64, [f64; 4]>, updates: u64) -> TabularQ {
        TabularQ { config, table, updates }
    }

    /// ε-greedy distribution for one table row; uniform for unseen keys.
    pub fn probs_for_key(&self, key: u64, epsilon: f64) -> [f64; 4] {
        let Some(q) = self.table.get(&key) else { return [0.25; 4] };
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties = q.iter().filter(|&&v| v == best).count() as f64;
        let mut p = [epsilon / 4.0; 4];
        for (i, &v) in q.iter().enumerate() {
            if v == best {
                p[i] += (1.0 - epsilon) / ties;
            }
        }
        p
    }

    /// The same table acted on greedily.
    pub fn greedy(&self) -> TabularQ {
        TabularQ { config: LearnerConfig { epsilon: 0.0, ..self.config }, table: self.table.clone(), updates: self.updates }
    }

    fn max_q(&self, key: u64) -> f64 {
        self.table.get(&key).map_or(0.0, |q| q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }
}

impl Policy for TabularQ {
    fn action_probs(&self, level: &Level, state: &EnvState) -> [f64; 4] {
        self.probs_for_key(observation_key(&level.observe(state)), self.config.epsilon)
    }
}

impl Learner for TabularQ {
    fn update(&mut self, batch: &[(&Level, &Trajectory)]) -> Result<UpdateStats> {
        if batch.is_empty() {
            return Err(Error::Empty("update batch"));
        }
        let (lr, gamma) = (self.config.learning_rate, self.config.gamma);
        let mut td_total = 0.0;
        let mut n = 0;
        for (level, traj) in batch {
            for t in &traj.steps {
                let k = observation_key(&level.observe(&t.state));
                let k2 = observation_key(&level.observe(&t.next_state));
                let boot = if level.goal_done(&t.next_state) { 0.0 } else { gamma * self.max_q(k2) };
                let target = t.true_reward + boot;
                let row = self.table.entry(k).or_insert([0.0; 4]);
                let td = target - row[t.action.index()];
                row[t.action.index()] += lr * td;
                td_total += td.abs();
                n += 1;
            }
        }
        self.updates += 1;
        Ok(UpdateStats {
            episodes: batch.len(),
            transitions: n,
            mean_return: batch_mean_return(batch, gamma),
            loss: if n > 0 { td_total / n as f64 } else { 0.0 },
        })
    }

    fn update_count(&self) -> u64 {
        self.updates
    }

    fn snapshot(&self) -> PolicySnapshot {
        let mut rows: Vec<(u64, [f64; 4])> = self.table.iter().map(|(&k, &v)| (k, v)).collect();
        rows.sort_by_key(|r| r.0);
        PolicySnapshot::TabularQ { config: self.config, updates: self.updates, table: rows }
    }

    fn act(&self, obs: &Observation, seed: Seed) -> Result<Action> {
        Ok(sample_index(&self.probs_for_key(observation_key(obs), self.config.epsilon), &mut seed.rng()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CornerLevel, Pos, Walls};
    use crate::learners::LearnerKind;

    fn cfg(eps: f64) -> LearnerConfig {
        LearnerConfig { kind: LearnerKind::TabularQ, epsilon: eps, learning_rate: 0.5, ..Default::default() }
    }

    #[test]
    fn unseen_is_uniform_and_greedy_is_dominant() {
        let mut q = TabularQ::new(cfg(0.0));
        assert_eq!(q.probs_for_key(7, 0.0), [0.25; 4]);
        q.table.insert(7, [0.0, 2.0, 1.0, 0.0]);
        assert_eq!(q.probs_for_key(7, 0.0), [0.0, 1.0, 0.0, 0.0]);
        q.table.insert(8, [1.0, 1.0, 0.0, 0.0]);
        assert_eq!(q.probs_for_key(8, 0.0), [0.5, 0.5, 0.0, 0.0]);
        let p = q.probs_for_key(7, 0.2);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[1] - 0.85).abs() < 1e-15);
    }

    #[test]
    fn empty_batch_rejected() {
        let mut q = TabularQ::new(cfg(0.1));
        assert!(matches!(q.update(&[]), Err(Error::Empty(_))));
        let l = Level::Corner(CornerLevel { walls: Walls::empty(), mouse_spawn: Pos::new(1, 1), cheese_pos: Pos::CORNER });
        assert!(q.act(&l.observe(&l.initial_state()), Seed(1)).is_ok());
    }
}
