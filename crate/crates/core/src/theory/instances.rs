//! Random tabular instances and proxy-distinguishing shifts.
//!
//! Rewards are drawn in `[0, 1/H]` per step, so every return lies in `[0, 1]`.

use super::sets::{classify_all, LevelClass};
use super::tabular::{check_distribution, PolicyTable, TabularLevel, TabularUmdp};
use crate::error::{Error, Result};
use crate::rng::Rng;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceShape {
    pub levels: usize,
    pub states: usize,
    pub actions: usize,
    pub horizon: usize,
    pub gamma: f64,
}

impl InstanceShape {
    /// Number of deterministic level-conditioned policies.
    pub fn policy_count(&self) -> u128 {
        (self.actions as u128).pow((self.states * self.levels) as u32)
    }

    /// A random shape with at most `max_policies` level-conditioned policies.
    pub fn random(rng: &mut Rng, max_policies: u128) -> InstanceShape {
        loop {
            let s = InstanceShape {
                levels: rng.gen_range(2..=4),
                states: rng.gen_range(1..=3),
                actions: rng.gen_range(2..=3),
                horizon: rng.gen_range(1..=4),
                gamma: if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(0.5..1.0) },
            };
            if s.policy_count() <= max_policies {
                return s;
            }
        }
    }
}

fn simplex(rng: &mut Rng, n: usize) -> Vec<f64> {
    let x: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = x.iter().sum();
    x.into_iter().map(|v| v / s).collect()
}

fn point(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn rewards(rng: &mut Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| if rng.gen_bool(0.5) { 0.0 } else { scale * rng.gen::<f64>() }).collect()
}

pub fn random_umdp(shape: &InstanceShape, rng: &mut Rng) -> TabularUmdp {
    let (s, a) = (shape.states, shape.actions);
    let scale = 1.0 / shape.horizon as f64;
    let levels = (0..shape.levels)
        .map(|_| {
            let initial = if rng.gen_bool(0.5) { point(s, rng.gen_range(0..s)) } else { simplex(rng, s) };
            let transition = (0..s * a)
                .flat_map(|_| if rng.gen_bool(0.5) { point(s, rng.gen_range(0..s)) } else { simplex(rng, s) })
                .collect();
            let true_reward = if rng.gen_bool(0.15) { vec![0.0; s * a * s] } else { rewards(rng, s * a * s, scale) };
            let proxy_reward = if rng.gen_bool(0.5) { true_reward.clone() } else { rewards(rng, s * a * s, scale) };
            TabularLevel { initial, transition, true_reward, proxy_reward }
        })
        .collect();
    TabularUmdp { states: s, actions: a, horizon: shape.horizon, gamma: shape.gamma, levels }
}

/// A proxy-distinguishing distribution shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub d_train: Vec<f64>,
    pub d_test: Vec<f64>,
}

impl ShiftSpec {
    pub fn validate(&self, table: &PolicyTable) -> Result<()> {
        if !(0.0 <= self.alpha && self.alpha < self.beta && self.beta <= 1.0) || !(self.c >= 0.0) {
            return Err(Error::Config(format!("shift needs 0 <= alpha < beta <= 1 and C >= 0 (alpha {}, beta {}, C {})", self.alpha, self.beta, self.c)));
        }
        check_distribution(&self.d_train, table.n_levels())?;
        check_distribution(&self.d_test, table.n_levels())?;
        let classes = classify_all(table, self.c);
        for (name, d, mass) in [("d_train", &self.d_train, self.alpha), ("d_test", &self.d_test, self.beta)] {
            let on = |k: LevelClass| d.iter().zip(&classes).filter(|(_, c)| **c == k).map(|(w, _)| w).sum::<f64>();
            if (on(LevelClass::Distinguishing) - mass).abs() > 1e-9 || (on(LevelClass::NonDistinguishing) - (1.0 - mass)).abs() > 1e-9 {
                return Err(Error::Config(format!("{name} does not split {mass} / {} over distinguishing / non-distinguishing levels", 1.0 - mass)));
            }
        }
        Ok(())
    }
}

fn spread(rng: &mut Rng, members: &[usize], mass: f64, out: &mut [f64]) {
    if mass == 0.0 {
        return;
    }
    for (w, &i) in simplex(rng, members.len()).into_iter().zip(members) {
        out[i] += mass * w;
    }
}

/// A random shift over the levels of `table`, or `None` when the instance
/// lacks a distinguishing or a non-distinguishing level.
pub fn random_shift(table: &PolicyTable, c: f64, rng: &mut Rng) -> Option<ShiftSpec> {
    let classes = classify_all(table, c);
    let pick = |k| (0..classes.len()).filter(|&i| classes[i] == k).collect::<Vec<_>>();
    let (d, nd) = (pick(LevelClass::Distinguishing), pick(LevelClass::NonDistinguishing));
    if d.is_empty() || nd.is_empty() {
        return None;
    }
    let alpha = if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.0..0.5) };
    let beta = if rng.gen_bool(0.25) { 1.0 } else { rng.gen_range(alpha..1.0_f64).max(alpha + 1e-3) };
    let n = classes.len();
    let (mut d_train, mut d_test) = (vec![0.0; n], vec![0.0; n]);
    spread(rng, &d, alpha, &mut d_train);
    spread(rng, &nd, 1.0 - alpha, &mut d_train);
    spread(rng, &d, beta, &mut d_test);
    spread(rng, &nd, 1.0 - beta, &mut d_test);
    Some(ShiftSpec { alpha, beta, c, d_train, d_test })
}

/// Rejection-samples an instance whose full table admits a shift with the given `C`.
pub fn random_shift_instance(rng: &mut Rng, max_policies: u128, c: f64) -> Result<(TabularUmdp, PolicyTable, ShiftSpec)> {
    const ATTEMPTS: usize = 10_000;
    for _ in 0..ATTEMPTS {
        let shape = InstanceShape::random(rng, max_policies);
        let umdp = random_umdp(&shape, rng);
        let table = PolicyTable::full(&umdp)?;
        if let Some(shift) = random_shift(&table, c, rng) {
            return Ok((umdp, table, shift));
        }
    }
    Err(Error::Placement { what: "proxy-distinguishing shift instance".into(), attempts: ATTEMPTS })
}

pub fn random_distribution(rng: &mut Rng, n: usize) -> Vec<f64> {
    match rng.gen_range(0..3) {
        0 => point(n, rng.gen_range(0..n)),
        _ => simplex(rng, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    #[test]
    fn generated_instances_are_valid_and_normalized() {
        let mut rng = Seed(3).rng();
        for _ in 0..50 {
            let (u, t, s) = random_shift_instance(&mut rng, 4096, 0.1).unwrap();
            u.validate().unwrap();
            s.validate(&t).unwrap();
            for v in t.true_values.iter().chain(&t.proxy_values).flatten() {
                assert!((-1e-12..=1.0 + 1e-12).contains(v));
            }
        }
    }

    #[test]
    fn zero_c_classification_is_exhaustive() {
        let mut rng = Seed(4).rng();
        for _ in 0..100 {
            let shape = InstanceShape::random(&mut rng, 4096);
            let t = PolicyTable::full(&random_umdp(&shape, &mut rng)).unwrap();
            assert!(classify_all(&t, 0.0).iter().all(|c| *c != LevelClass::Neither));
        }
    }
}
