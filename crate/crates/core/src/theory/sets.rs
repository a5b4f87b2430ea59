//! Level classification and the policy sets compared by the checkers.
//!
//! Maxima over level distributions are taken over pure levels: expected
//! return and regret are linear in the distribution.

use super::game::{lp, solve_regret_game, GameOptions, GameSolution, RegretMatrix};
use super::tabular::{check_distribution, PolicyTable, TabularUmdp, DEFAULT_POLICY_CAP, TIE};
use crate::error::{Error, Result};
use crate::umdp::RewardSelector;
use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

/// Slack added to every set threshold so exact boundary members survive rounding.
pub const SET_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelClass {
    NonDistinguishing,
    Distinguishing,
    Neither,
}

fn argmax(values: &[f64], slack: f64) -> Vec<usize> {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..values.len()).filter(|&i| values[i] >= m - slack - TIE).collect()
}

/// Classification from the returns of every local policy on one level.
pub fn classify_values(true_values: &[f64], proxy_values: &[f64], c: f64) -> LevelClass {
    let proxy_best = argmax(proxy_values, 0.0);
    let true_best = argmax(true_values, 0.0);
    let true_c = argmax(true_values, c);
    if proxy_best.iter().all(|i| true_best.contains(i)) {
        LevelClass::NonDistinguishing
    } else if proxy_best.iter().any(|i| !true_c.contains(i)) {
        LevelClass::Distinguishing
    } else {
        LevelClass::Neither
    }
}

pub fn classify_tabular(umdp: &TabularUmdp, level: usize, c: f64) -> Result<LevelClass> {
    umdp.validate()?;
    if level >= umdp.n_levels() {
        return Err(Error::Contract(format!("level {level} not in instance with {} levels", umdp.n_levels())));
    }
    if umdp.local_count() > DEFAULT_POLICY_CAP {
        return Err(Error::Capacity { what: "deterministic policies", count: umdp.local_count(), cap: DEFAULT_POLICY_CAP });
    }
    let locals: Vec<Vec<usize>> = (0..umdp.local_count()).map(|i| umdp.decode_local(i)).collect();
    let t: Vec<f64> = locals.iter().map(|p| umdp.local_return(level, p, RewardSelector::True)).collect();
    let p: Vec<f64> = locals.iter().map(|p| umdp.local_return(level, p, RewardSelector::Proxy)).collect();
    Ok(classify_values(&t, &p, c))
}

/// Classification of every level, from a table's per-level value tables.
pub fn classify_all(table: &PolicyTable, c: f64) -> Vec<LevelClass> {
    (0..table.n_levels()).map(|t| classify_values(&table.true_values[t], &table.proxy_values[t], c)).collect()
}

/// `{π : V(dist, π) ≥ max − ε}` within the table's class.
pub fn mev_set(table: &PolicyTable, dist: &[f64], epsilon: f64, reward: RewardSelector) -> Result<Vec<usize>> {
    check_distribution(dist, table.n_levels())?;
    let v: Vec<f64> = (0..table.len()).map(|p| table.dist_return(p, dist, reward)).collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((0..v.len()).filter(|&p| v[p] >= m - epsilon - SET_TOL).collect())
}

/// Deterministic policies whose worst-case regret is within `epsilon` of the
/// mixed minimax value `value`.
pub fn mmer1_filter(m: &RegretMatrix, value: f64, epsilon: f64) -> Vec<usize> {
    (0..m.policies).filter(|&p| m.row(p).iter().all(|&r| r <= value + epsilon + SET_TOL)).collect()
}

pub fn mmer1_set(table: &PolicyTable, epsilon: f64, opts: &GameOptions) -> Result<(Vec<usize>, GameSolution)> {
    let m = RegretMatrix::from_table(table);
    let g = solve_regret_game(&m, opts)?;
    Ok((mmer1_filter(&m, g.value, epsilon), g))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mmer2Membership {
    pub member: bool,
    /// A level distribution in equilibrium with the policy, when one exists.
    pub distribution: Option<Vec<f64>>,
}

/// Whether some level distribution `d` makes `(policy, d)` an
/// `(ε, δ)`-equilibrium, decided by a feasibility LP over the simplex with
/// best-response constraints added lazily.
pub fn mmer2_membership(m: &RegretMatrix, policy: usize, epsilon: f64, delta: f64) -> Result<Mmer2Membership> {
    if policy >= m.policies {
        return Err(Error::Contract(format!("policy {policy} out of range")));
    }
    let row = m.row(policy);
    let worst = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cuts: Vec<usize> = Vec::new();
    loop {
        let mut prob = Problem::new(OptimizationDirection::Minimize);
        let d: Vec<_> = (0..m.levels).map(|_| prob.add_var(0.0, (0.0, 1.0))).collect();
        prob.add_constraint(d.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
        prob.add_constraint(d.iter().zip(row).map(|(&v, &r)| (v, r)).collect::<Vec<_>>(), ComparisonOp::Ge, worst - delta - SET_TOL);
        for &c in &cuts {
            let other = m.row(c);
            let terms: Vec<_> = d.iter().enumerate().map(|(t, &v)| (v, row[t] - other[t])).collect();
            prob.add_constraint(terms, ComparisonOp::Le, epsilon + SET_TOL);
        }
        let sol = match lp(&prob) {
            Ok(s) => s,
            Err(Error::Contract(_)) => return Ok(Mmer2Membership { member: false, distribution: None }),
            Err(e) => return Err(e),
        };
        let mut dist: Vec<f64> = d.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
        let s: f64 = dist.iter().sum();
        dist.iter_mut().for_each(|x| *x /= s);
        let (br, val) = m.best_response(&dist);
        if m.against(policy, &dist) - val > epsilon + 2.0 * SET_TOL && !cuts.contains(&br) {
            cuts.push(br);
        } else {
            return Ok(Mmer2Membership { member: true, distribution: Some(dist) });
        }
    }
}

/// The exact adversarial map: each policy's first worst pure level.
pub fn exact_adversarial_map(m: &RegretMatrix) -> Vec<Vec<f64>> {
    (0..m.policies)
        .map(|p| {
            let row = m.row(p);
            let t = (0..m.levels).fold(0, |b, t| if row[t] > row[b] { t } else { b });
            let mut d = vec![0.0; m.levels];
            d[t] = 1.0;
            d
        })
        .collect()
}

/// `ε`-argmin of `Regret(λ(π), π)` for an `η`-approximate adversarial map `λ`.
pub fn mmer3_set(m: &RegretMatrix, epsilon: f64, eta: f64, map: &[Vec<f64>]) -> Result<Vec<usize>> {
    if map.len() != m.policies {
        return Err(Error::Shape { expected: m.policies, got: map.len() });
    }
    let mut scores = Vec::with_capacity(m.policies);
    for (p, d) in map.iter().enumerate() {
        check_distribution(d, m.levels)?;
        let s = m.against(p, d);
        let worst = m.row(p).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if s < worst - eta - SET_TOL {
            return Err(Error::Config(format!("adversarial map is not {eta}-approximate at policy {p} ({s} < {worst} - {eta})")));
        }
        scores.push(s);
    }
    let best = scores.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((0..m.policies).filter(|&p| scores[p] <= best + epsilon + SET_TOL).collect())
}

/// Expected regret relative to the best policy of the table's class on each level.
pub fn restricted_regret(table: &PolicyTable, dist: &[f64], policy: usize) -> Result<f64> {
    check_distribution(dist, table.n_levels())?;
    Ok(table.dist_regret(policy, dist))
}

/// Smallest expected restricted regret any class member attains on `dist`.
pub fn irreducible_regret(table: &PolicyTable, dist: &[f64]) -> Result<f64> {
    check_distribution(dist, table.n_levels())?;
    Ok((0..table.len()).map(|p| table.dist_regret(p, dist)).fold(f64::INFINITY, f64::min))
}

/// Class members with the best worst-case restricted regret, up to `epsilon`.
pub fn restricted_mmer_set(table: &PolicyTable, epsilon: f64) -> (Vec<usize>, f64) {
    let best = (0..table.len()).map(|p| table.max_regret(p)).fold(f64::INFINITY, f64::min);
    ((0..table.len()).filter(|&p| table.max_regret(p) <= best + epsilon + SET_TOL).collect(), best)
}

/// `argmax_π min_θ V(θ, π)` up to `epsilon`, with the maximin value.
pub fn mmev_set(table: &PolicyTable, epsilon: f64) -> (Vec<usize>, f64) {
    let worst = |p: usize| (0..table.n_levels()).map(|t| table.ret(p, t, RewardSelector::True)).fold(f64::INFINITY, f64::min);
    let best = (0..table.len()).map(worst).fold(f64::NEG_INFINITY, f64::max);
    ((0..table.len()).filter(|&p| worst(p) >= best - epsilon - SET_TOL).collect(), best)
}

/// Smallest true return at least `alpha` that some local policy achieves on
/// `level`; `None` when no policy reaches `alpha`.
pub fn c_alpha(table: &PolicyTable, level: usize, alpha: f64) -> Option<f64> {
    table.true_values[level].iter().copied().filter(|&v| v >= alpha - TIE).reduce(f64::min)
}
