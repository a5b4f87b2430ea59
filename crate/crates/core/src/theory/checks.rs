//! Exact checkers: each builds the objects a statement quantifies over on
//! one instance and reports whether the conclusion holds there.

use super::game::{solve_regret_game, GameOptions, RegretMatrix};
use super::instances::{random_distribution, ShiftSpec};
use super::sets::{
    classify_all, exact_adversarial_map, irreducible_regret, mev_set, mmer1_filter, mmer1_set, mmer2_membership, mmer3_set,
    mmev_set, restricted_mmer_set, restricted_regret, LevelClass, SET_TOL,
};
use super::tabular::{PolicyTable, TabularUmdp, TIE};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::umdp::RewardSelector;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Identities are checked to this absolute error.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    /// The conclusion failed on an instance meeting the hypotheses.
    Fail,
    /// The conclusion failed but the instance does not meet the hypotheses.
    HypothesisViolated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub status: Status,
    /// Duality gap of the regret game, when one was solved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duality_gap: Option<f64>,
    pub detail: serde_json::Value,
}

fn outcome(ok: bool, detail: serde_json::Value) -> CheckOutcome {
    CheckOutcome { status: if ok { Status::Pass } else { Status::Fail }, duality_gap: None, detail }
}

/// The actions each level's local policy takes, for reports.
pub fn describe(umdp: &TabularUmdp, table: &PolicyTable, policy: usize) -> Vec<Vec<usize>> {
    (0..table.n_levels()).map(|t| umdp.decode_local(table.class.local(policy, t))).collect()
}

fn normalized(table: &PolicyTable) -> bool {
    table.true_values.iter().chain(&table.proxy_values).flatten().all(|v| (-TIE..=1.0 + TIE).contains(v))
}

fn require_full(umdp: &TabularUmdp, table: &PolicyTable) -> Result<()> {
    let full = (umdp.local_count() as u128).pow(umdp.n_levels() as u32);
    if table.len() as u128 != full {
        return Err(Error::Contract("check needs the full level-conditioned policy class".into()));
    }
    Ok(())
}

/// The policy of the MEV susceptibility construction: proxy-optimal on every
/// level and, on C-distinguishing levels, outside the C-argmax of the true goal.
pub fn mev_witness(table: &PolicyTable, c: f64) -> std::result::Result<Vec<usize>, usize> {
    let classes = classify_all(table, c);
    (0..table.n_levels())
        .map(|t| {
            let (tv, pv) = (&table.true_values[t], &table.proxy_values[t]);
            let pmax = pv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tmax = tv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut proxy_best = (0..pv.len()).filter(|&i| pv[i] >= pmax - TIE);
            if classes[t] == LevelClass::Distinguishing {
                proxy_best.find(|&i| tv[i] < tmax - c - TIE).ok_or(t)
            } else {
                proxy_best.next().ok_or(t)
            }
        })
        .collect()
}

pub fn verify_thm1(umdp: &TabularUmdp, table: &PolicyTable, shift: &ShiftSpec, epsilon: f64) -> Result<CheckOutcome> {
    require_full(umdp, table)?;
    shift.validate(table)?;
    let hypothesis = shift.alpha <= epsilon && normalized(table);
    let locals = match mev_witness(table, shift.c) {
        Ok(l) => l,
        Err(t) => {
            let detail = json!({ "note": format!("level {t} admits no policy required by the construction; its classification is inconsistent") });
            return Ok(outcome(false, detail));
        }
    };
    let pi = table.class.find(&locals).ok_or_else(|| Error::Contract("witness outside the policy class".into()))?;
    let in_mev = mev_set(table, &shift.d_train, epsilon, RewardSelector::True)?.contains(&pi);
    let proxy_optimal = mev_set(table, &shift.d_test, 0.0, RewardSelector::Proxy)?.contains(&pi);
    let test_return = table.dist_return(pi, &shift.d_test, RewardSelector::True);
    let test_best = table.best_dist_return(&shift.d_test, RewardSelector::True);
    let misgeneralizes = test_return < test_best - shift.beta * shift.c;
    let ok = in_mev && proxy_optimal && misgeneralizes;
    let detail = json!({
        "hypothesis": hypothesis,
        "witness": describe(umdp, table, pi),
        "in_mev_train": in_mev,
        "proxy_optimal_test": proxy_optimal,
        "outside_beta_c_argmax_test": misgeneralizes,
        "test_return": test_return,
        "test_best": test_best,
    });
    let mut o = outcome(ok, detail);
    if !ok && !hypothesis {
        o.status = Status::HypothesisViolated;
    }
    Ok(o)
}

pub fn verify_thm2(umdp: &TabularUmdp, table: &PolicyTable, shift: &ShiftSpec, epsilon: f64, opts: &GameOptions) -> Result<CheckOutcome> {
    shift.validate(table)?;
    let (set, game) = mmer1_set(table, epsilon, opts)?;
    let best = table.best_dist_return(&shift.d_test, RewardSelector::True);
    let violators: Vec<usize> =
        set.iter().copied().filter(|&p| table.dist_return(p, &shift.d_test, RewardSelector::True) < best - epsilon - SET_TOL).collect();
    let witness_in_set = mev_witness(table, shift.c).ok().and_then(|l| table.class.find(&l)).map(|p| set.contains(&p));
    let detail = json!({
        "mmer_set_size": set.len(),
        "game_value": game.value,
        "minimax_gap": game.minimax_gap,
        "mev_witness_in_mmer_set": witness_in_set,
        "violators": violators.iter().map(|&p| describe(umdp, table, p)).collect::<Vec<_>>(),
    });
    let mut o = outcome(violators.is_empty(), detail);
    o.duality_gap = Some(game.duality_gap);
    Ok(o)
}

/// The regret identity and the expectation/maximisation exchange for random
/// distributions and random pure and mixed policies.
pub fn verify_prop_b(table: &PolicyTable, rng: &mut Rng, trials: usize) -> Result<CheckOutcome> {
    let (mut identity_err, mut exchange_err) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let d = random_distribution(rng, table.n_levels());
        let best = table.best_dist_return(&d, RewardSelector::True);
        let per_level: f64 = d.iter().enumerate().map(|(t, w)| w * table.best_true[t]).sum();
        exchange_err = exchange_err.max((per_level - best).abs());
        let k = rng.gen_range(1..=3);
        let picks: Vec<usize> = (0..k).map(|_| rng.gen_range(0..table.len())).collect();
        let members: Vec<(usize, f64)> = picks.into_iter().zip(random_distribution(rng, k)).collect();
        let regret: f64 = members.iter().map(|&(p, w)| w * d.iter().enumerate().map(|(t, q)| q * (table.best_true[t] - table.ret(p, t, RewardSelector::True))).sum::<f64>()).sum();
        let value: f64 = members.iter().map(|&(p, w)| w * table.dist_return(p, &d, RewardSelector::True)).sum();
        identity_err = identity_err.max((regret - (best - value)).abs());
    }
    let ok = identity_err <= IDENTITY_TOL && exchange_err <= IDENTITY_TOL;
    Ok(outcome(ok, json!({ "identity_error": identity_err, "exchange_error": exchange_err, "trials": trials })))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub epsilon: f64,
    pub delta: f64,
    pub eta: f64,
}

/// An `η`-approximate adversarial map mixing each policy's worst level with a random level.
pub fn random_adversarial_map(m: &RegretMatrix, eta: f64, rng: &mut Rng) -> Vec<Vec<f64>> {
    exact_adversarial_map(m)
        .into_iter()
        .enumerate()
        .map(|(p, mut d)| {
            let worst = d.iter().position(|&x| x == 1.0).unwrap_or(0);
            let other = rng.gen_range(0..m.levels);
            let drop = m.at(p, worst) - m.at(p, other);
            let cap = if drop > 0.0 { (eta / drop).min(1.0) } else { 1.0 };
            let t = rng.gen::<f64>() * cap;
            d[worst] -= t;
            d[other] += t;
            d
        })
        .collect()
}

fn inclusion(name: &str, left: &[usize], member: impl Fn(usize) -> Result<bool>) -> Result<serde_json::Value> {
    let mut bad = Vec::new();
    for &p in left {
        if !member(p)? {
            bad.push(p);
        }
    }
    Ok(json!({ "inclusion": name, "checked": left.len(), "violations": bad }))
}

/// The six inclusions between the three approximate MMER sets, on a
/// full-observability instance.
pub fn verify_prop_c(umdp: &TabularUmdp, table: &PolicyTable, th: Thresholds, rng: &mut Rng, opts: &GameOptions) -> Result<CheckOutcome> {
    require_full(umdp, table)?;
    let Thresholds { epsilon: e, delta: d, eta } = th;
    let m = RegretMatrix::from_table(table);
    let game = solve_regret_game(&m, opts)?;
    let lambda = random_adversarial_map(&m, eta, rng);
    let all: Vec<usize> = (0..m.policies).collect();
    let m1 = |x: f64| mmer1_filter(&m, game.value, x);
    let m2 = |p: usize, x: f64, y: f64| mmer2_membership(&m, p, x, y).map(|w| w.member);
    let m3 = |x: f64| mmer3_set(&m, x, eta, &lambda);
    let m2_ed: Vec<usize> = all.iter().copied().filter(|&p| m2(p, e, d).unwrap_or(false)).collect();
    // On full observability the equilibrium condition has a closed form.
    let closed_form: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&p| {
            let r = m.row(p);
            r.iter().copied().fold(f64::INFINITY, f64::min) <= e + SET_TOL && r.iter().copied().fold(0.0, f64::max) <= e + d + SET_TOL
        })
        .collect();
    let (m1_e, m1_ed, m1_eeta) = (m1(e), m1(e + d), m1(e + eta));
    let (m3_e, m3_eeta, m3_edeta) = (m3(e)?, m3(e + eta)?, m3(e + d + eta)?);
    let checks = vec![
        inclusion("mmer1(e) in mmer2(e,e)", &m1_e, |p| m2(p, e, e))?,
        inclusion("mmer2(e,d) in mmer1(e+d)", &m2_ed, |p| Ok(m1_ed.contains(&p)))?,
        inclusion("mmer1(e) in mmer3(e+eta)", &m1_e, |p| Ok(m3_eeta.contains(&p)))?,
        inclusion("mmer3(e) in mmer1(e+eta)", &m3_e, |p| Ok(m1_eeta.contains(&p)))?,
        inclusion("mmer2(e,d) in mmer3(e+d+eta)", &m2_ed, |p| Ok(m3_edeta.contains(&p)))?,
        inclusion("mmer3(e) in mmer2(e+eta,e+eta)", &m3_e, |p| m2(p, e + eta, e + eta))?,
    ];
    let ok = checks.iter().all(|c| c["violations"].as_array().is_some_and(|v| v.is_empty())) && closed_form == m2_ed;
    let detail = json!({ "thresholds": th, "inclusions": checks, "mmer2_matches_closed_form": closed_form == m2_ed });
    let mut o = outcome(ok, detail);
    o.duality_gap = Some(game.duality_gap);
    Ok(o)
}

/// Restricted regret splits into return shortfall plus irreducible regret.
pub fn verify_prop_d1(table: &PolicyTable, rng: &mut Rng, trials: usize) -> Result<CheckOutcome> {
    let mut err = 0.0f64;
    let mut max_irreducible = 0.0f64;
    for _ in 0..trials {
        let d = random_distribution(rng, table.n_levels());
        let irr = irreducible_regret(table, &d)?;
        max_irreducible = max_irreducible.max(irr);
        let best = table.best_dist_return(&d, RewardSelector::True);
        for p in 0..table.len() {
            let lhs = restricted_regret(table, &d, p)?;
            let rhs = best - table.dist_return(p, &d, RewardSelector::True) + irr;
            err = err.max((lhs - rhs).abs());
        }
    }
    Ok(outcome(err <= IDENTITY_TOL, json!({ "identity_error": err, "max_irreducible_regret": max_irreducible, "trials": trials })))
}

/// Every restricted ε-MMER policy is `ε + g`-optimal on `d_test`, with `g`
/// the irreducible regret gap.
/// The restricted regret game is solved too; its mixed value never exceeds
/// the pure minimax.
pub fn verify_thm_d2(umdp: &TabularUmdp, table: &PolicyTable, d_test: &[f64], epsilon: f64, opts: &GameOptions) -> Result<CheckOutcome> {
    let (set, minimax) = restricted_mmer_set(table, epsilon);
    let game = solve_regret_game(&RegretMatrix::from_table(table), opts)?;
    let gap = minimax - irreducible_regret(table, d_test)?;
    let best = table.best_dist_return(d_test, RewardSelector::True);
    let slack: Vec<f64> = set.iter().map(|&p| table.dist_return(p, d_test, RewardSelector::True) - (best - epsilon - gap)).collect();
    let tightest = slack.iter().copied().fold(f64::INFINITY, f64::min);
    let violators: Vec<_> = set.iter().zip(&slack).filter(|(_, s)| **s < -SET_TOL).map(|(&p, _)| describe(umdp, table, p)).collect();
    let ok = violators.is_empty() && gap >= -SET_TOL && game.minimax_gap >= -opts.tol;
    let detail = json!({
        "irreducible_regret_gap": gap,
        "minimax_restricted_regret": minimax,
        "mixed_game_value": game.value,
        "minimax_gap": game.minimax_gap,
        "mmer_set_size": set.len(),
        "tightest_slack": tightest,
        "violators": violators,
    });
    let mut o = outcome(ok, detail);
    o.duality_gap = Some(game.duality_gap);
    Ok(o)
}

/// ε-optimality on every distribution holds exactly for the ε-MMER policies.
/// The universal side is decided level by level and spot-checked on random mixtures.
pub fn verify_necessity(umdp: &TabularUmdp, table: &PolicyTable, epsilon: f64, rng: &mut Rng, opts: &GameOptions) -> Result<CheckOutcome> {
    require_full(umdp, table)?;
    let m = RegretMatrix::from_table(table);
    let game = solve_regret_game(&m, opts)?;
    let mmer: Vec<usize> = mmer1_filter(&m, game.value, epsilon);
    let pure: Vec<Vec<usize>> = (0..table.n_levels())
        .map(|t| {
            let mut d = vec![0.0; table.n_levels()];
            d[t] = 1.0;
            mev_set(table, &d, epsilon, RewardSelector::True)
        })
        .collect::<Result<_>>()?;
    let mixtures: Vec<Vec<f64>> = (0..4).map(|_| random_distribution(rng, table.n_levels())).collect();
    let mut mismatches = Vec::new();
    let mut spot_failures = 0;
    for p in 0..table.len() {
        let universal = pure.iter().all(|s| s.contains(&p));
        if universal != mmer.contains(&p) {
            mismatches.push(describe(umdp, table, p));
        }
        if universal {
            for d in &mixtures {
                if table.dist_return(p, d, RewardSelector::True) < table.best_dist_return(d, RewardSelector::True) - epsilon - SET_TOL {
                    spot_failures += 1;
                }
            }
        }
    }
    let witness_sides = mev_witness(table, 0.0).ok().and_then(|l| table.class.find(&l)).map(|p| (pure.iter().all(|s| s.contains(&p)), mmer.contains(&p)));
    let detail = json!({
        "mmer_set_size": mmer.len(),
        "mismatches": mismatches,
        "mixture_failures": spot_failures,
        "proxy_witness_sides": witness_sides,
    });
    let mut o = outcome(mismatches.is_empty() && spot_failures == 0, detail);
    o.duality_gap = Some(game.duality_gap);
    Ok(o)
}

/// The MMEV construction: optimal on the adversary's support, the
/// `α`-minimum achievable return elsewhere.
pub fn verify_thm_i1(umdp: &TabularUmdp, table: &PolicyTable, d_test: &[f64]) -> Result<CheckOutcome> {
    require_full(umdp, table)?;
    let alpha = table.best_true.iter().copied().fold(f64::INFINITY, f64::min);
    let support: Vec<usize> = (0..table.n_levels()).filter(|&t| table.best_true[t] <= alpha + TIE).collect();
    let mut locals = Vec::with_capacity(table.n_levels());
    let mut floor = Vec::with_capacity(table.n_levels());
    for t in 0..table.n_levels() {
        let v = &table.true_values[t];
        let i = if support.contains(&t) {
            (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
        } else {
            match (0..v.len()).filter(|&i| v[i] >= alpha - TIE).reduce(|b, i| if v[i] < v[b] { i } else { b }) {
                Some(i) => i,
                None => return Ok(outcome(false, json!({ "note": format!("level {t} has no return at least alpha") }))),
            }
        };
        floor.push(v[i]);
        locals.push(i);
    }
    let pi = table.class.find(&locals).ok_or_else(|| Error::Contract("construction outside the policy class".into()))?;
    let (set, maximin) = mmev_set(table, 0.0);
    let in_set = set.contains(&pi);
    let value = table.dist_return(pi, d_test, RewardSelector::True);
    let c_test: f64 = d_test.iter().zip(&floor).map(|(w, c)| w * c).sum();
    let ok = in_set && (value - c_test).abs() <= IDENTITY_TOL && (maximin - alpha).abs() <= IDENTITY_TOL;
    let detail = json!({
        "alpha": alpha,
        "adversary_support": support,
        "policy": describe(umdp, table, pi),
        "in_mmev_set": in_set,
        "test_return": value,
        "c_test": c_test,
        "test_best": table.best_dist_return(d_test, RewardSelector::True),
    });
    Ok(outcome(ok, detail))
}

#[cfg(test)]
mod tests {
    use super::super::tabular::tests::bandit;
    use super::super::tabular::{PolicyClass, PolicyRestriction};
    use super::*;
    use crate::rng::Seed;

    fn two_level() -> (TabularUmdp, PolicyTable) {
        // Level 0: proxy and true agree. Level 1: proxy-optimal action 1 earns no true reward.
        let u = bandit(&[(&[0.2, 1.0], &[0.2, 1.0]), (&[1.0, 0.0], &[0.0, 1.0])]);
        let t = PolicyTable::full(&u).unwrap();
        (u, t)
    }

    fn shift(alpha: f64) -> ShiftSpec {
        ShiftSpec { alpha, beta: 1.0, c: 0.5, d_train: vec![1.0 - alpha, alpha], d_test: vec![0.0, 1.0] }
    }

    #[test]
    fn thm1_witness_on_hand_built_shift() {
        let (u, t) = two_level();
        let o = verify_thm1(&u, &t, &shift(0.05), 0.1).unwrap();
        assert_eq!(o.status, Status::Pass, "{}", o.detail);
        assert_eq!(o.detail["witness"], json!([[1], [1]]));
        let o = verify_thm1(&u, &t, &shift(0.3), 0.1).unwrap();
        assert_eq!(o.status, Status::HypothesisViolated);
    }

    #[test]
    fn thm2_excludes_the_mev_witness() {
        let (u, t) = two_level();
        let o = verify_thm2(&u, &t, &shift(0.05), 0.1, &GameOptions::default()).unwrap();
        assert_eq!(o.status, Status::Pass);
        assert_eq!(o.detail["mev_witness_in_mmer_set"], json!(false));
        assert_eq!(o.detail["mmer_set_size"], json!(1));
    }

    #[test]
    fn necessity_sides_for_witness() {
        let (u, t) = two_level();
        let o = verify_necessity(&u, &t, 0.1, &mut Seed(1).rng(), &GameOptions::default()).unwrap();
        assert_eq!(o.status, Status::Pass);
        assert_eq!(o.detail["proxy_witness_sides"], json!([false, false]));
    }

    #[test]
    fn thm_d2_is_tight_on_hidden_level() {
        let u = bandit(&[(&[1.0, 0.0], &[1.0, 0.0]), (&[0.0, 1.0], &[0.0, 1.0])]);
        let r = PolicyRestriction::hide_level_in(&u, &[true]);
        let t = PolicyTable::new(&u, PolicyClass::restricted(&u, &r, 16).unwrap()).unwrap();
        let o = verify_thm_d2(&u, &t, &[1.0, 0.0], 0.0, &GameOptions::default()).unwrap();
        assert_eq!(o.status, Status::Pass);
        assert_eq!(o.detail["irreducible_regret_gap"], json!(1.0));
        assert_eq!(o.detail["tightest_slack"], json!(0.0));
        let full = PolicyTable::full(&u).unwrap();
        let o = verify_thm_d2(&u, &full, &[1.0, 0.0], 0.0, &GameOptions::default()).unwrap();
        assert_eq!(o.detail["irreducible_regret_gap"], json!(0.0));
    }

    #[test]
    fn thm_i1_on_unsolvable_instance() {
        let u = bandit(&[(&[0.2, 0.9], &[0.2, 0.9]), (&[0.0, 0.0], &[0.0, 0.0])]);
        let t = PolicyTable::full(&u).unwrap();
        let o = verify_thm_i1(&u, &t, &[1.0, 0.0]).unwrap();
        assert_eq!(o.status, Status::Pass, "{}", o.detail);
        assert_eq!(o.detail["test_return"], json!(0.2));
        assert_eq!(o.detail["test_best"], json!(0.9));
    }

    #[test]
    fn prop_c_and_identities_on_small_instance() {
        let (u, t) = two_level();
        let mut rng = Seed(2).rng();
        let th = Thresholds { epsilon: 0.1, delta: 0.3, eta: 0.2 };
        let o = verify_prop_c(&u, &t, th, &mut rng, &GameOptions::default()).unwrap();
        assert_eq!(o.status, Status::Pass, "{}", o.detail);
        assert_eq!(verify_prop_b(&t, &mut rng, 20).unwrap().status, Status::Pass);
        assert_eq!(verify_prop_d1(&t, &mut rng, 20).unwrap().status, Status::Pass);
    }
}
