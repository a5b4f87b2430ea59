//! Rollouts, exact finite-horizon evaluation, and expected return/regret over
//! levels and level distributions.
//!
//! Episodes end at the goal condition or after `max_steps`; an ended episode
//! is treated as an absorbing zero-reward state, so the discounted sum is
//! finite without any infinite-horizon solve.

use crate::env::{Action, EnvState, Level, MAX_STEPS};
use crate::error::{Error, Result};
use crate::rng::Seed;
use fnv::FnvHashMap;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Default bound on the number of augmented states enumerated per level.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscountSpec {
    pub gamma: f64,
    pub max_steps: u16,
}

impl Default for DiscountSpec {
    fn default() -> Self {
        DiscountSpec { gamma: 0.999, max_steps: MAX_STEPS }
    }
}

impl DiscountSpec {
    pub fn new(gamma: f64) -> Result<DiscountSpec> {
        let d = DiscountSpec { gamma, max_steps: MAX_STEPS };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        if self.max_steps == 0 || self.max_steps > MAX_STEPS {
            return Err(Error::Config(format!("max_steps {} outside 1..={MAX_STEPS}", self.max_steps)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardSelector {
    True,
    Proxy,
}

impl std::str::FromStr for RewardSelector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true" => Ok(RewardSelector::True),
            "proxy" => Ok(RewardSelector::Proxy),
            other => Err(Error::Config(format!("unknown reward selector `{other}`"))),
        }
    }
}

/// A stationary stochastic policy over grid-environment states.
pub trait Policy: Sync {
    fn action_probs(&self, level: &Level, state: &EnvState) -> [f64; 4];

    fn sample_action(&self, level: &Level, state: &EnvState, rng: &mut crate::rng::Rng) -> Action {
        sample_index(&self.action_probs(level, state), rng)
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn action_probs(&self, level: &Level, state: &EnvState) -> [f64; 4] {
        (**self).action_probs(level, state)
    }
}

impl<P: Policy + ?Sized + Send> Policy for Box<P> {
    fn action_probs(&self, level: &Level, state: &EnvState) -> [f64; 4] {
        (**self).action_probs(level, state)
    }
}

pub(crate) fn sample_index(p: &[f64; 4], rng: &mut crate::rng::Rng) -> Action {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &q) in p.iter().enumerate() {
        acc += q;
        if u < acc {
            return Action::ALL[i];
        }
    }
    // Rounding left a sliver of mass: fall back to the last action with support.
    let i = p.iter().rposition(|&q| q > 0.0).unwrap_or(0);
    Action::ALL[i]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub state: EnvState,
    pub action: Action,
    pub next_state: EnvState,
    pub true_reward: f64,
    pub proxy_reward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub level_id: u64,
    pub steps: Vec<Transition>,
    /// Whether the episode ended on the goal condition rather than the horizon.
    pub terminal: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn discounted_return(&self, reward: RewardSelector, gamma: f64) -> f64 {
        let mut g = 0.0;
        let mut disc = 1.0;
        for t in &self.steps {
            g += disc * select(reward, t.true_reward, t.proxy_reward);
            disc *= gamma;
        }
        g
    }
}

fn select(reward: RewardSelector, t: f64, p: f64) -> f64 {
    match reward {
        RewardSelector::True => t,
        RewardSelector::Proxy => p,
    }
}

/// Run one episode from the level's spawn.
pub fn rollout(level: &Level, policy: &dyn Policy, discount: DiscountSpec, seed: Seed) -> Result<Trajectory> {
    let mut rng = seed.rng();
    let mut s = level.reset()?;
    let mut steps = Vec::with_capacity(32);
    let mut terminal = false;
    while (steps.len() as u16) < discount.max_steps {
        let a = policy.sample_action(level, &s, &mut rng);
        let out = level.step(&s, a)?;
        steps.push(Transition {
            state: s,
            action: a,
            next_state: out.state,
            true_reward: out.true_reward,
            proxy_reward: out.proxy_reward,
        });
        s = out.state;
        if level.goal_done(&s) {
            terminal = true;
            break;
        }
        if out.done {
            break;
        }
    }
    Ok(Trajectory { level_id: level.id(), steps, terminal })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub next: u32,
    pub true_reward: f64,
    pub proxy_reward: f64,
    /// The goal condition holds after this transition.
    pub terminal: bool,
}

/// Reachable augmented states (step counter stripped) with a full transition table.
#[derive(Clone, Debug)]
pub struct StateGraph {
    pub states: Vec<EnvState>,
    pub edges: Vec<[Edge; 4]>,
    index: FnvHashMap<EnvState, u32>,
}

impl StateGraph {
    /// Breadth-first enumeration of every state reachable within the horizon.
    pub fn build(level: &Level, horizon: u16, cap: usize) -> Result<StateGraph> {
        let s0 = level.reset()?.untimed();
        let mut states = vec![s0];
        let mut depth = vec![0u16];
        let mut index = FnvHashMap::default();
        index.insert(s0, 0u32);
        let mut edges = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        let placeholder = Edge { next: 0, true_reward: 0.0, proxy_reward: 0.0, terminal: true };
        while let Some(i) = queue.pop_front() {
            let s = states[i];
            if edges.len() <= i {
                edges.resize(i + 1, [placeholder; 4]);
            }
            if level.goal_done(&s) || depth[i] >= horizon {
                continue;
            }
            for a in Action::ALL {
                let out = level.transition(&s, a);
                let n = out.state.untimed();
                let j = match index.get(&n) {
                    Some(&j) => j,
                    None => {
                        if states.len() >= cap {
                            return Err(Error::Capacity { what: "augmented states", count: states.len() + 1, cap });
                        }
                        let j = states.len() as u32;
                        index.insert(n, j);
                        states.push(n);
                        depth.push(depth[i] + 1);
                        queue.push_back(j as usize);
                        j
                    }
                };
                edges[i][a.index()] = Edge {
                    next: j,
                    true_reward: out.true_reward,
                    proxy_reward: out.proxy_reward,
                    terminal: level.goal_done(&out.state),
                };
            }
        }
        edges.resize(states.len(), [placeholder; 4]);
        Ok(StateGraph { states, edges, index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: &EnvState) -> Option<usize> {
        self.index.get(&s.untimed()).map(|&i| i as usize)
    }

    /// Value of a fixed stationary policy with `horizon` steps to go, from every state.
    pub fn evaluate(&self, probs: &[[f64; 4]], reward: RewardSelector, gamma: f64, horizon: u16) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        let mut next = vec![0.0; self.len()];
        for _ in 0..horizon {
            for (i, row) in self.edges.iter().enumerate() {
                let mut acc = 0.0;
                for (a, e) in row.iter().enumerate() {
                    let p = probs[i][a];
                    if p == 0.0 {
                        continue;
                    }
                    let cont = if e.terminal { 0.0 } else { v[e.next as usize] };
                    acc += p * (select(reward, e.true_reward, e.proxy_reward) + gamma * cont);
                }
                next[i] = acc;
            }
            std::mem::swap(&mut v, &mut next);
        }
        v
    }

    /// Optimal finite-horizon value from every state.
    pub fn optimal(&self, reward: RewardSelector, gamma: f64, horizon: u16) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        let mut next = vec![0.0; self.len()];
        for _ in 0..horizon {
            for (i, row) in self.edges.iter().enumerate() {
                next[i] = row
                    .iter()
                    .map(|e| {
                        let cont = if e.terminal { 0.0 } else { v[e.next as usize] };
                        select(reward, e.true_reward, e.proxy_reward) + gamma * cont
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
            }
            std::mem::swap(&mut v, &mut next);
        }
        v
    }

    fn probs_of(&self, level: &Level, policy: &dyn Policy) -> Vec<[f64; 4]> {
        self.states.iter().map(|s| policy.action_probs(level, s)).collect()
    }
}

/// Exact expected discounted return of `policy` from the level's spawn.
pub fn exact_return(
    level: &Level,
    policy: &dyn Policy,
    reward: RewardSelector,
    discount: DiscountSpec,
    cap: usize,
) -> Result<f64> {
    let g = StateGraph::build(level, discount.max_steps, cap)?;
    let probs = g.probs_of(level, policy);
    Ok(g.evaluate(&probs, reward, discount.gamma, discount.max_steps)[0])
}

/// Maximum expected return by exhaustive backward induction.
pub fn optimal_return(level: &Level, reward: RewardSelector, discount: DiscountSpec, cap: usize) -> Result<f64> {
    let g = StateGraph::build(level, discount.max_steps, cap)?;
    Ok(g.optimal(reward, discount.gamma, discount.max_steps)[0])
}

/// `max_return - exact_return`, with the maximum supplied by an oracle.
pub fn expected_regret(
    level: &Level,
    policy: &dyn Policy,
    discount: DiscountSpec,
    oracle: &dyn Fn(&Level, f64) -> Result<f64>,
    cap: usize,
) -> Result<f64> {
    let max = oracle(level, discount.gamma)?;
    let v = exact_return(level, policy, RewardSelector::True, discount, cap)?;
    Ok(max - v)
}

/// A finite level distribution: explicit weights, or an i.i.d. sample for estimation.
#[derive(Clone, Debug)]
pub enum LevelDistribution {
    Explicit(Vec<(Level, f64)>),
    Sampled(Vec<Level>),
}

impl LevelDistribution {
    pub fn explicit(support: Vec<(Level, f64)>) -> Result<LevelDistribution> {
        if support.is_empty() {
            return Err(Error::Empty("level distribution support"));
        }
        if support.iter().any(|(_, w)| !(*w >= 0.0)) {
            return Err(Error::Config("negative or NaN level weight".into()));
        }
        let total: f64 = support.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("level weights sum to {total}, not 1")));
        }
        Ok(LevelDistribution::Explicit(support))
    }

    pub fn sampled(levels: Vec<Level>) -> Result<LevelDistribution> {
        if levels.is_empty() {
            return Err(Error::Empty("level sample"));
        }
        Ok(LevelDistribution::Sampled(levels))
    }

    fn levels(&self) -> Vec<&Level> {
        match self {
            LevelDistribution::Explicit(s) => s.iter().map(|(l, _)| l).collect(),
            LevelDistribution::Sampled(s) => s.iter().collect(),
        }
    }
}

/// Mean with its standard error (zero in exact mode).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Weighted mean of a per-level quantity; sample mean and standard error in estimate mode.
pub fn aggregate(dist: &LevelDistribution, per_level: &[f64]) -> Estimate {
    match dist {
        LevelDistribution::Explicit(s) => {
            let mean = s.iter().zip(per_level).map(|((_, w), v)| w * v).sum();
            Estimate { mean, std_error: 0.0 }
        }
        LevelDistribution::Sampled(_) => {
            let n = per_level.len() as f64;
            let mean = per_level.iter().sum::<f64>() / n;
            let var = if per_level.len() > 1 {
                per_level.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            Estimate { mean, std_error: (var / n).sqrt() }
        }
    }
}

pub fn distribution_return(
    dist: &LevelDistribution,
    policy: &dyn Policy,
    reward: RewardSelector,
    discount: DiscountSpec,
    cap: usize,
) -> Result<Estimate> {
    let vals = dist
        .levels()
        .par_iter()
        .map(|l| exact_return(l, policy, reward, discount, cap))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(dist, &vals))
}

pub fn distribution_regret(
    dist: &LevelDistribution,
    policy: &dyn Policy,
    discount: DiscountSpec,
    oracle: &(dyn Fn(&Level, f64) -> Result<f64> + Sync),
    cap: usize,
) -> Result<Estimate> {
    let vals = dist
        .levels()
        .par_iter()
        .map(|l| expected_regret(l, policy, discount, oracle, cap))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(dist, &vals))
}
