//! The two-player zero-sum regret game between an agent choosing a mixture
//! over a policy class and an adversary choosing a level distribution.

use super::tabular::PolicyTable;
use crate::error::{Error, Result};
use microlp::{ComparisonOp, OptimizationDirection, Problem, Solution, SolveOutcome};
use serde::{Deserialize, Serialize};

/// Row-major `[policy][level]` payoff to the adversary.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretMatrix {
    pub policies: usize,
    pub levels: usize,
    pub data: Vec<f64>,
}

impl RegretMatrix {
    pub fn from_table(table: &PolicyTable) -> RegretMatrix {
        let (p, l) = (table.len(), table.n_levels());
        let data = (0..p).flat_map(|i| (0..l).map(move |t| (i, t))).map(|(i, t)| table.regret(i, t)).collect();
        RegretMatrix { policies: p, levels: l, data }
    }

    pub fn row(&self, policy: usize) -> &[f64] {
        &self.data[policy * self.levels..(policy + 1) * self.levels]
    }

    pub fn at(&self, policy: usize, level: usize) -> f64 {
        self.data[policy * self.levels + level]
    }

    /// Expected regret of a pure policy against a level mixture.
    pub fn against(&self, policy: usize, level_mix: &[f64]) -> f64 {
        self.row(policy).iter().zip(level_mix).map(|(m, q)| m * q).sum()
    }

    /// Worst-case regret of a policy mixture.
    pub fn worst_case(&self, policy_mix: &[f64]) -> f64 {
        (0..self.levels)
            .map(|t| (0..self.policies).filter(|&p| policy_mix[p] > 0.0).map(|p| policy_mix[p] * self.at(p, t)).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pure policy minimising regret against a level mixture.
    pub fn best_response(&self, level_mix: &[f64]) -> (usize, f64) {
        (0..self.policies)
            .map(|p| (p, self.against(p, level_mix)))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
    }

    /// `min over pure policies of max over levels`.
    pub fn pure_minimax(&self) -> (usize, f64) {
        (0..self.policies)
            .map(|p| (p, self.row(p).iter().copied().fold(f64::NEG_INFINITY, f64::max)))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameMethod {
    Lp,
    FictitiousPlay,
}

impl std::str::FromStr for GameMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lp" => Ok(GameMethod::Lp),
            "fictitious-play" | "fp" => Ok(GameMethod::FictitiousPlay),
            other => Err(Error::Config(format!("unknown game method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub policy_mix: Vec<f64>,
    pub level_mix: Vec<f64>,
    pub value: f64,
    /// Worst-case regret of `policy_mix` minus the best-response regret against `level_mix`.
    pub duality_gap: f64,
    /// Pure-policy minimax regret minus the game value; zero when a single
    /// deterministic policy attains the mixed optimum.
    pub minimax_gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameOptions {
    pub method: GameMethod,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for GameOptions {
    fn default() -> Self {
        GameOptions { method: GameMethod::Lp, tol: 1e-6, max_iterations: 200_000 }
    }
}

pub(crate) fn lp(problem: &Problem) -> Result<Solution> {
    match problem.solve() {
        Ok(SolveOutcome::Solution(s)) => Ok(s),
        Ok(SolveOutcome::Interrupted(_)) => Err(Error::NoConvergence { iterations: 0, gap: f64::INFINITY, tol: 0.0 }),
        Err(microlp::Error::Infeasible) => Err(Error::Contract("linear program is infeasible".into())),
        Err(e) => Err(Error::Contract(format!("linear program failed: {e}"))),
    }
}

pub fn solve_regret_game(m: &RegretMatrix, opts: &GameOptions) -> Result<GameSolution> {
    if m.policies == 0 || m.levels == 0 {
        return Err(Error::Empty("regret matrix"));
    }
    let sol = match opts.method {
        GameMethod::Lp => solve_lp(m)?,
        GameMethod::FictitiousPlay => fictitious_play(m, opts)?,
    };
    if sol.duality_gap > opts.tol {
        return Err(Error::NoConvergence { iterations: opts.max_iterations, gap: sol.duality_gap, tol: opts.tol });
    }
    Ok(sol)
}

fn finish(m: &RegretMatrix, policy_mix: Vec<f64>, level_mix: Vec<f64>) -> GameSolution {
    let upper = m.worst_case(&policy_mix);
    let lower = m.best_response(&level_mix).1;
    let value = 0.5 * (upper + lower);
    GameSolution { duality_gap: upper - lower, minimax_gap: m.pure_minimax().1 - value, policy_mix, level_mix, value }
}

/// Adversary LP with lazily added policy constraints, then the agent LP over
/// the policies that were generated.
fn solve_lp(m: &RegretMatrix) -> Result<GameSolution> {
    let l = m.levels;
    let mut active = vec![m.pure_minimax().0];
    let mut level_mix;
    loop {
        let mut prob = Problem::new(OptimizationDirection::Maximize);
        let q: Vec<_> = (0..l).map(|_| prob.add_var(0.0, (0.0, 1.0))).collect();
        let w = prob.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
        for &p in &active {
            let mut terms: Vec<_> = q.iter().zip(m.row(p)).map(|(&v, &c)| (v, c)).collect();
            terms.push((w, -1.0));
            prob.add_constraint(&terms, ComparisonOp::Ge, 0.0);
        }
        let ones: Vec<_> = q.iter().map(|&v| (v, 1.0)).collect();
        prob.add_constraint(&ones, ComparisonOp::Eq, 1.0);
        let s = lp(&prob)?;
        level_mix = q.iter().map(|&v| s.var_value(v).max(0.0)).collect::<Vec<_>>();
        let total: f64 = level_mix.iter().sum();
        level_mix.iter_mut().for_each(|x| *x /= total);
        let (br, val) = m.best_response(&level_mix);
        if val < s.var_value(w) - 1e-12 && !active.contains(&br) {
            active.push(br);
        } else {
            break;
        }
    }
    let mut prob = Problem::new(OptimizationDirection::Minimize);
    let x: Vec<_> = active.iter().map(|_| prob.add_var(0.0, (0.0, 1.0))).collect();
    let v = prob.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for t in 0..l {
        let mut terms: Vec<_> = x.iter().zip(&active).map(|(&xv, &p)| (xv, m.at(p, t))).collect();
        terms.push((v, -1.0));
        prob.add_constraint(&terms, ComparisonOp::Le, 0.0);
    }
    let ones: Vec<_> = x.iter().map(|&xv| (xv, 1.0)).collect();
    prob.add_constraint(&ones, ComparisonOp::Eq, 1.0);
    let s = lp(&prob)?;
    let mut policy_mix = vec![0.0; m.policies];
    for (&xv, &p) in x.iter().zip(&active) {
        policy_mix[p] = s.var_value(xv).max(0.0);
    }
    let total: f64 = policy_mix.iter().sum();
    policy_mix.iter_mut().for_each(|x| *x /= total);
    Ok(finish(m, policy_mix, level_mix))
}

/// Simultaneous fictitious play; empirical frequencies converge to an equilibrium.
fn fictitious_play(m: &RegretMatrix, opts: &GameOptions) -> Result<GameSolution> {
    let (p, l) = (m.policies, m.levels);
    let mut policy_counts = vec![0.0; p];
    let mut level_counts = vec![0.0; l];
    // Cumulative payoffs against the opponent's empirical play.
    let mut policy_payoff = vec![0.0; p];
    let mut level_payoff = vec![0.0; l];
    let mut best = None::<GameSolution>;
    let (mut pi, mut ti) = (m.pure_minimax().0, 0);
    for it in 1..=opts.max_iterations {
        policy_counts[pi] += 1.0;
        level_counts[ti] += 1.0;
        for (k, pay) in policy_payoff.iter_mut().enumerate() {
            *pay += m.at(k, ti);
        }
        for (t, pay) in level_payoff.iter_mut().enumerate() {
            *pay += m.at(pi, t);
        }
        pi = (0..p).fold(0, |b, k| if policy_payoff[k] < policy_payoff[b] { k } else { b });
        ti = (0..l).fold(0, |b, t| if level_payoff[t] > level_payoff[b] { t } else { b });
        if it % 64 == 0 || it == opts.max_iterations {
            let n = it as f64;
            let sol = finish(m, policy_counts.iter().map(|c| c / n).collect(), level_counts.iter().map(|c| c / n).collect());
            let done = sol.duality_gap <= opts.tol;
            if best.as_ref().is_none_or(|b| sol.duality_gap < b.duality_gap) {
                best = Some(sol);
            }
            if done {
                break;
            }
        }
    }
    best.ok_or(Error::Empty("fictitious play iterations"))
}
