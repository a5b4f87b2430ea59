use crate::env::Level;
use crate::error::{Error, Result};
use crate::rng::Seed;
use crate::umdp::{Estimate, Policy, RewardSelector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalProtocol {
    /// Number of levels drawn for an evaluation set.
    pub eval_batch_size: usize,
    /// Environment steps per level, resetting whenever an episode ends.
    pub eval_steps: usize,
    pub reward: RewardSelector,
    pub gamma: f64,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        EvalProtocol { eval_batch_size: 256, eval_steps: 512, reward: RewardSelector::True, gamma: 0.999 }
    }
}

impl EvalProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.eval_batch_size == 0 || self.eval_steps == 0 {
            return Err(Error::Config("evaluation sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Average return over the episodes completed within the step budget on one
/// level; the episode still running when the budget ends is discarded.
pub fn evaluate_level(policy: &dyn Policy, level: &Level, p: &EvalProtocol, seed: Seed) -> Result<f64> {
    let mut rng = seed.rng();
    let mut s = level.reset()?;
    let (mut ret, mut disc) = (0.0, 1.0);
    let (mut total, mut episodes) = (0.0, 0usize);
    for _ in 0..p.eval_steps {
        let a = policy.sample_action(level, &s, &mut rng);
        let out = level.step(&s, a)?;
        ret += disc * match p.reward {
            RewardSelector::True => out.true_reward,
            RewardSelector::Proxy => out.proxy_reward,
        };
        disc *= p.gamma;
        s = out.state;
        if out.done {
            total += ret;
            episodes += 1;
            s = level.initial_state();
            ret = 0.0;
            disc = 1.0;
        }
    }
    if episodes == 0 {
        return Err(Error::Contract(format!("no episode completed within {} steps", p.eval_steps)));
    }
    Ok(total / episodes as f64)
}

pub fn evaluate_per_level(policy: &dyn Policy, levels: &[Level], p: &EvalProtocol, seed: Seed) -> Result<Vec<f64>> {
    if levels.is_empty() {
        return Err(Error::Empty("evaluation level set"));
    }
    levels.par_iter().enumerate().map(|(i, l)| evaluate_level(policy, l, p, seed.index(i as u64))).collect()
}

/// Mean over levels of the per-level average episode return, with its standard error.
pub fn evaluate(policy: &dyn Policy, levels: &[Level], p: &EvalProtocol, seed: Seed) -> Result<Estimate> {
    let v = evaluate_per_level(policy, levels, p, seed)?;
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok(Estimate { mean, std_error: (var / n).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CornerLevel, Pos, Walls};
    use crate::solvers::{Scripted, Uniform};

    #[test]
    fn scripted_optimal_is_exact() {
        let l = Level::Corner(CornerLevel { walls: Walls::empty(), mouse_spawn: Pos::new(4, 4), cheese_pos: Pos::new(4, 7) });
        let v = evaluate_level(&Scripted::true_goal(), &l, &EvalProtocol::default(), Seed(0)).unwrap();
        assert!((v - 0.999f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn unsolvable_is_zero() {
        let mut w = Walls::empty();
        w.set(Pos::new(0, 1), true);
        w.set(Pos::new(1, 0), true);
        let l = Level::Corner(CornerLevel { walls: w, mouse_spawn: Pos::new(4, 4), cheese_pos: Pos::CORNER });
        let e = evaluate(&Uniform, &[l.clone(), l], &EvalProtocol::default(), Seed(1)).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!(evaluate(&Uniform, &[], &EvalProtocol::default(), Seed(1)).is_err());
    }
}
