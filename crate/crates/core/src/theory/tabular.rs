//! Small tabular UMDPs with finite-horizon exact evaluation and enumerated
//! deterministic policy classes.
//!
//! A policy in a class is a deterministic stationary map from (level, state)
//! to an action. Its return on a level only depends on its restriction to
//! that level (its *local* policy), so returns are tabulated once per level
//! and local policy and looked up from there.

use crate::error::{Error, Result};
use crate::umdp::RewardSelector;
use serde::{Deserialize, Serialize};

/// Tolerance used when comparing returns for ties.
pub const TIE: f64 = 1e-12;
pub const DEFAULT_POLICY_CAP: usize = 1 << 18;

pub const MAX_LEVELS: usize = 6;
pub const MAX_STATES: usize = 8;
pub const MAX_ACTIONS: usize = 4;
pub const MAX_HORIZON: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularLevel {
    /// `[s]`
    pub initial: Vec<f64>,
    /// `[s][a][s']`, flattened.
    pub transition: Vec<f64>,
    /// `[s][a][s']`, flattened.
    pub true_reward: Vec<f64>,
    pub proxy_reward: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularUmdp {
    pub states: usize,
    pub actions: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub levels: Vec<TabularLevel>,
}

impl TabularUmdp {
    pub fn validate(&self) -> Result<()> {
        let (s, a) = (self.states, self.actions);
        if !(1..=MAX_LEVELS).contains(&self.levels.len())
            || !(1..=MAX_STATES).contains(&s)
            || !(1..=MAX_ACTIONS).contains(&a)
            || !(1..=MAX_HORIZON).contains(&self.horizon)
        {
            return Err(Error::Config(format!(
                "tabular sizes (levels {}, states {s}, actions {a}, horizon {}) out of range",
                self.levels.len(),
                self.horizon
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        for (i, l) in self.levels.iter().enumerate() {
            let n = s * a * s;
            if l.initial.len() != s || l.transition.len() != n || l.true_reward.len() != n || l.proxy_reward.len() != n {
                return Err(Error::Shape { expected: n, got: l.transition.len() });
            }
            let ok = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x >= 0.0) && (v.iter().sum::<f64>() - 1.0).abs() <= TIE;
            if !ok(&l.initial) {
                return Err(Error::InvalidLevel(format!("level {i}: initial distribution does not sum to 1")));
            }
            for row in l.transition.chunks(s) {
                if !ok(row) {
                    return Err(Error::InvalidLevel(format!("level {i}: transition row does not sum to 1")));
                }
            }
            if l.true_reward.iter().chain(&l.proxy_reward).any(|r| !r.is_finite()) {
                return Err(Error::InvalidLevel(format!("level {i}: non-finite reward")));
            }
        }
        Ok(())
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Number of deterministic stationary policies on one level.
    pub fn local_count(&self) -> usize {
        self.actions.pow(self.states as u32)
    }

    /// Action taken in each state by local policy `idx` (base-`actions` digits, state 0 least significant).
    pub fn decode_local(&self, mut idx: usize) -> Vec<usize> {
        (0..self.states)
            .map(|_| {
                let a = idx % self.actions;
                idx /= self.actions;
                a
            })
            .collect()
    }

    pub fn encode_local(&self, actions: &[usize]) -> usize {
        actions.iter().rev().fold(0, |acc, &a| acc * self.actions + a)
    }

    /// Finite-horizon discounted return of a deterministic local policy.
    pub fn local_return(&self, level: usize, policy: &[usize], reward: RewardSelector) -> f64 {
        let (s, a) = (self.states, self.actions);
        let l = &self.levels[level];
        let r = match reward {
            RewardSelector::True => &l.true_reward,
            RewardSelector::Proxy => &l.proxy_reward,
        };
        let mut v = vec![0.0; s];
        let mut next = vec![0.0; s];
        for _ in 0..self.horizon {
            for x in 0..s {
                let base = (x * a + policy[x]) * s;
                next[x] = (0..s).map(|y| l.transition[base + y] * (r[base + y] + self.gamma * v[y])).sum();
            }
            std::mem::swap(&mut v, &mut next);
        }
        l.initial.iter().zip(&v).map(|(p, x)| p * x).sum()
    }

    /// Returns of every local policy on every level.
    pub fn values(&self, reward: RewardSelector) -> Vec<Vec<f64>> {
        (0..self.n_levels())
            .map(|l| (0..self.local_count()).map(|i| self.local_return(l, &self.decode_local(i), reward)).collect())
            .collect()
    }
}

/// Partition of (level, state) pairs into information sets; policies must
/// act identically within a set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyRestriction {
    /// Information set of pair `(level, state)` at `level * states + state`.
    pub info_set: Vec<usize>,
}

impl PolicyRestriction {
    /// Every pair on its own: full observability.
    pub fn full(umdp: &TabularUmdp) -> PolicyRestriction {
        PolicyRestriction { info_set: (0..umdp.n_levels() * umdp.states).collect() }
    }

    /// The level is hidden in the given states and visible elsewhere.
    pub fn hide_level_in(umdp: &TabularUmdp, hidden: &[bool]) -> PolicyRestriction {
        let (l, s) = (umdp.n_levels(), umdp.states);
        let mut ids = vec![0; l * s];
        let mut next = 0;
        for x in 0..s {
            if hidden[x] {
                for t in 0..l {
                    ids[t * s + x] = next;
                }
                next += 1;
            } else {
                for t in 0..l {
                    ids[t * s + x] = next;
                    next += 1;
                }
            }
        }
        PolicyRestriction { info_set: ids }
    }

    pub fn n_sets(&self) -> usize {
        self.info_set.iter().max().map_or(0, |m| m + 1)
    }

    pub fn validate(&self, umdp: &TabularUmdp) -> Result<()> {
        if self.info_set.len() != umdp.n_levels() * umdp.states {
            return Err(Error::Shape { expected: umdp.n_levels() * umdp.states, got: self.info_set.len() });
        }
        let k = self.n_sets();
        let mut seen = vec![false; k];
        for &i in &self.info_set {
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Config("information set ids must be contiguous from 0".into()));
        }
        Ok(())
    }
}

/// An enumerated set of deterministic policies, stored as local policy indices per level.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyClass {
    n_levels: usize,
    locals: Vec<u32>,
}

fn check_cap(count: u128, cap: usize) -> Result<usize> {
    if count > cap as u128 {
        return Err(Error::Capacity { what: "deterministic policies", count: count.min(usize::MAX as u128) as usize, cap });
    }
    Ok(count as usize)
}

impl PolicyClass {
    /// All level-conditioned deterministic policies.
    pub fn full(umdp: &TabularUmdp, cap: usize) -> Result<PolicyClass> {
        let (l, b) = (umdp.n_levels(), umdp.local_count());
        let n = check_cap((b as u128).pow(l as u32), cap)?;
        let mut locals = Vec::with_capacity(n * l);
        for mut p in 0..n {
            for _ in 0..l {
                locals.push((p % b) as u32);
                p /= b;
            }
        }
        Ok(PolicyClass { n_levels: l, locals })
    }

    /// Deterministic policies respecting `restriction`.
    pub fn restricted(umdp: &TabularUmdp, restriction: &PolicyRestriction, cap: usize) -> Result<PolicyClass> {
        restriction.validate(umdp)?;
        let (l, s, a) = (umdp.n_levels(), umdp.states, umdp.actions);
        let k = restriction.n_sets();
        let n = check_cap((a as u128).pow(k as u32), cap)?;
        let mut locals = Vec::with_capacity(n * l);
        let mut assign = vec![0usize; k];
        for p in 0..n {
            let mut q = p;
            for x in assign.iter_mut() {
                *x = q % a;
                q /= a;
            }
            for t in 0..l {
                let acts: Vec<usize> = (0..s).map(|x| assign[restriction.info_set[t * s + x]]).collect();
                locals.push(umdp.encode_local(&acts) as u32);
            }
        }
        Ok(PolicyClass { n_levels: l, locals })
    }

    pub fn len(&self) -> usize {
        self.locals.len() / self.n_levels
    }

    pub fn is_empty(&self) -> bool {
        self.locals.is_empty()
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn local(&self, policy: usize, level: usize) -> usize {
        self.locals[policy * self.n_levels + level] as usize
    }

    /// Index of the policy with these local policies, if the class contains it.
    pub fn find(&self, locals: &[usize]) -> Option<usize> {
        (0..self.len()).find(|&p| (0..self.n_levels).all(|t| self.local(p, t) == locals[t]))
    }
}

/// A policy class together with the returns of its members.
#[derive(Clone, Debug)]
pub struct PolicyTable {
    pub class: PolicyClass,
    pub true_values: Vec<Vec<f64>>,
    pub proxy_values: Vec<Vec<f64>>,
    /// Best true return per level within the class.
    pub best_true: Vec<f64>,
}

impl PolicyTable {
    pub fn new(umdp: &TabularUmdp, class: PolicyClass) -> Result<PolicyTable> {
        umdp.validate()?;
        let true_values = umdp.values(RewardSelector::True);
        let proxy_values = umdp.values(RewardSelector::Proxy);
        let best_true = (0..umdp.n_levels())
            .map(|t| (0..class.len()).map(|p| true_values[t][class.local(p, t)]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Ok(PolicyTable { class, true_values, proxy_values, best_true })
    }

    pub fn full(umdp: &TabularUmdp) -> Result<PolicyTable> {
        PolicyTable::new(umdp, PolicyClass::full(umdp, DEFAULT_POLICY_CAP)?)
    }

    pub fn len(&self) -> usize {
        self.class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class.is_empty()
    }

    pub fn n_levels(&self) -> usize {
        self.class.n_levels()
    }

    pub fn ret(&self, policy: usize, level: usize, reward: RewardSelector) -> f64 {
        let v = match reward {
            RewardSelector::True => &self.true_values,
            RewardSelector::Proxy => &self.proxy_values,
        };
        v[level][self.class.local(policy, level)]
    }

    /// Expected return under a level distribution.
    pub fn dist_return(&self, policy: usize, dist: &[f64], reward: RewardSelector) -> f64 {
        dist.iter().enumerate().map(|(t, w)| w * self.ret(policy, t, reward)).sum()
    }

    /// Best expected return under `dist` over the class, by enumeration.
    pub fn best_dist_return(&self, dist: &[f64], reward: RewardSelector) -> f64 {
        (0..self.len()).map(|p| self.dist_return(p, dist, reward)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Class-relative regret of `policy` on a level.
    pub fn regret(&self, policy: usize, level: usize) -> f64 {
        self.best_true[level] - self.ret(policy, level, RewardSelector::True)
    }

    pub fn dist_regret(&self, policy: usize, dist: &[f64]) -> f64 {
        dist.iter().enumerate().map(|(t, w)| w * self.regret(policy, t)).sum()
    }

    pub fn max_regret(&self, policy: usize) -> f64 {
        (0..self.n_levels()).map(|t| self.regret(policy, t)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A distribution over levels, validated.
pub fn check_distribution(dist: &[f64], levels: usize) -> Result<()> {
    if dist.len() != levels {
        return Err(Error::Shape { expected: levels, got: dist.len() });
    }
    if dist.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (dist.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config("level distribution must be non-negative and sum to 1".into()));
    }
    Ok(())
}
