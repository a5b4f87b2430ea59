//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use rand::Rng as _;
use regret_lab::env::{EnvKind, Level};
use regret_lab::experiment::config::RunConfig;
use regret_lab::experiment::{replay, run_experiment};
use regret_lab::learners::linear_pg::advantages;
use regret_lab::learners::{build_learner, EvalProtocol, FeatureLayout, LearnerConfig, LearnerKind, LinearPg};
use regret_lab::levelgen::{generate, GenClass, GeneratorSpec, MixtureSpec};
use regret_lab::rng::Seed;
use regret_lab::solvers::{classify, enumerate_collection_sequences, max_return};
use regret_lab::theory::{run_suites, GameOptions, Suite, TheoryReport};
use regret_lab::ued::{train, AdversaryConfig, EvalSets, Estimator, Method, MetricsRow, TrainSpec, TRAIN_SEED_LABELS};
use regret_lab::umdp::{optimal_return, rollout, DiscountSpec, RewardSelector, Trajectory, DEFAULT_STATE_CAP};
use rayon::prelude::*;
use std::path::PathBuf;
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn c1_sequence_count() -> Outcome {
    let n = enumerate_collection_sequences(3, 10).map_err(|e| e.to_string())?.len();
    check(n == 21_600, format!("(k, c) = (3, 10) gives {n} sequences"))
}

fn c2_oracle_equivalence() -> Outcome {
    let d = DiscountSpec::default();
    let mut worst = 0.0f64;
    let mut counts = Vec::new();
    for (env, region) in [(EnvKind::Corner, 7), (EnvKind::Dish, 7), (EnvKind::Keys, 5)] {
        let levels: Vec<Level> = (0..100u64)
            .map(|i| {
                let class = if i % 2 == 0 { GenClass::NonDistinguishing } else { GenClass::Distinguishing };
                generate(&GeneratorSpec { active_region: region, ..GeneratorSpec::new(env, class) }, Seed(1000).index(i)).unwrap()
            })
            .collect();
        let errs: Vec<f64> = levels
            .par_iter()
            .map(|l| {
                let dp = optimal_return(l, RewardSelector::True, d, DEFAULT_STATE_CAP).map_err(|e| e.to_string())?;
                Ok((dp - max_return(l, d.gamma)).abs())
            })
            .collect::<Result<_, String>>()?;
        worst = errs.iter().copied().fold(worst, f64::max);
        counts.push(format!("{} {}", env.name(), levels.len()));
    }
    check(worst <= 1e-9, format!("{} levels; max |oracle - DP| = {worst:.2e}", counts.join(", ")))
}

fn theory(suites: &[Suite]) -> Result<TheoryReport, String> {
    run_suites(suites, 100, Seed(2024), &GameOptions::default()).map_err(|e| e.to_string())
}

fn summarize(report: &TheoryReport) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in &report.suites {
        ok &= s.failed == 0 && s.passed >= 100;
        parts.push(format!("{} {}/{} ({} outside hypotheses)", s.suite.name(), s.passed, s.instances, s.hypothesis_violated));
    }
    (ok, parts.join(", "))
}

fn c3_regret_identity() -> Outcome {
    let (ok, detail) = summarize(&theory(&[Suite::PropB])?);
    check(ok, detail)
}

fn c4_thm1() -> Outcome {
    let (ok, detail) = summarize(&theory(&[Suite::Thm1])?);
    check(ok, detail)
}

fn c5_thm2() -> Outcome {
    let (ok, detail) = summarize(&theory(&[Suite::Thm2])?);
    check(ok, detail)
}

fn c6_remaining_theory() -> Outcome {
    let report = theory(&[Suite::PropC, Suite::PropD, Suite::ThmD2, Suite::Necessity, Suite::Mmev])?;
    let (ok, detail) = summarize(&report);
    let gap = report.suites.iter().filter_map(|s| s.max_duality_gap).fold(0.0f64, f64::max);
    check(ok && gap <= 1e-6, format!("{detail}; max duality gap {gap:.1e}"))
}

fn scripted_run(method: Method, kind: LearnerKind, estimator: Estimator, alpha: f64) -> Result<MetricsRow, String> {
    let g = GeneratorSpec::new(EnvKind::Corner, GenClass::NonDistinguishing);
    let mut learner = build_learner(&LearnerConfig { kind, ..Default::default() }, 3).map_err(|e| e.to_string())?;
    let spec = TrainSpec {
        mixture: MixtureSpec::from_base(alpha, g),
        adversary: AdversaryConfig { method, estimator, capacity: 64, batch_size: 256, rollout_steps: 1, ..Default::default() },
        discount: DiscountSpec::default(),
        eval: EvalProtocol::default(),
        eval_levels: 0,
        steps: 500,
        max_updates: None,
        log_every: 500,
    };
    let (_, rows) = train(&mut *learner, &spec, Seed(1), |_| Ok(())).map_err(|e| e.to_string())?;
    rows.last().cloned().ok_or_else(|| "no metrics".into())
}

fn c7_amplification() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [1e-3, 1e-2] {
        let plr = scripted_run(Method::Plr, LearnerKind::ScriptedProxy, Estimator::OracleLatest, alpha)?;
        let dr = scripted_run(Method::Dr, LearnerKind::ScriptedProxy, Estimator::OracleLatest, alpha)?;
        // DR trains on 500 batches of 256 fresh draws.
        let se = (alpha * (1.0 - alpha) / (500.0 * 256.0)).sqrt();
        let dr_ok = (dr.replay_fraction_distinguishing - alpha).abs() <= 4.0 * se;
        ok &= plr.buffer_fraction_distinguishing > 0.5 && dr_ok;
        parts.push(format!(
            "alpha {alpha}: PLR buffer D {:.3}, DR trained D {:.5} (alpha +/- {:.5})",
            plr.buffer_fraction_distinguishing,
            dr.replay_fraction_distinguishing,
            4.0 * se
        ));
    }
    check(ok, parts.join("; "))
}

fn c8_maximin() -> Outcome {
    let g = GeneratorSpec::new(EnvKind::Corner, GenClass::NonDistinguishing);
    let n = 10_000u64;
    let unsolvable = (0..n).into_par_iter().filter(|&i| !classify(&generate(&g, Seed(7).index(i)).unwrap()).goal_reachable).count();
    let base = unsolvable as f64 / n as f64;
    let row = scripted_run(Method::MaximinPlr, LearnerKind::ScriptedTrue, Estimator::NegValue, 0.0)?;
    check(
        row.buffer_fraction_unsolvable > 0.5 && (base - 0.18).abs() <= 0.02,
        format!("maximin buffer unsolvable {:.3}; ND generator unsolvable {base:.4} over {n} levels", row.buffer_fraction_unsolvable),
    )
}

fn c9_misgeneralization() -> Outcome {
    let mut means = Vec::new();
    for name in ["c9-dr.json", "c9-plr.json"] {
        let cfg = RunConfig::load(&configs().join(name)).map_err(|e| e.to_string())?;
        let spec = cfg.train_spec();
        let seeds = cfg.seeds();
        if seeds.len() < 3 {
            return Err(format!("{name} ships {} seeds", seeds.len()));
        }
        let runs: Vec<(f64, f64, f64)> = seeds
            .par_iter()
            .map(|&seed| {
                let mut learner = build_learner(&cfg.learner, cfg.channels()).map_err(|e| e.to_string())?;
                let (_, rows) = train(&mut *learner, &spec, seed, |_| Ok(())).map_err(|e| e.to_string())?;
                let last = rows.last().ok_or("no metrics")?;
                let sets = EvalSets::generate(&spec.mixture, spec.eval_levels, seed.split(TRAIN_SEED_LABELS[0])).map_err(|e| e.to_string())?;
                let oracle_nd = sets.non_distinguishing.iter().map(|l| max_return(l, spec.discount.gamma)).sum::<f64>()
                    / sets.non_distinguishing.len() as f64;
                Ok((
                    last.mean_eval_return_distinguishing.ok_or("no eval")?,
                    last.mean_eval_return_nondistinguishing.ok_or("no eval")?,
                    oracle_nd,
                ))
            })
            .collect::<Result<_, String>>()?;
        let n = runs.len() as f64;
        let mean = |f: fn(&(f64, f64, f64)) -> f64| runs.iter().map(f).sum::<f64>() / n;
        means.push((cfg.adversary.method, mean(|r| r.0), mean(|r| r.1), mean(|r| r.2)));
    }
    let (dr, plr) = (means[0], means[1]);
    let ok = plr.1 - dr.1 >= 0.1 && dr.2 >= 0.8 * dr.3 && plr.2 >= 0.8 * plr.3;
    check(
        ok,
        format!(
            "D-eval PLR {:.3} vs DR {:.3} (diff {:.3}); ND-eval PLR {:.3}, DR {:.3} vs 0.8 x oracle {:.3}",
            plr.1,
            dr.1,
            plr.1 - dr.1,
            plr.2,
            dr.2,
            0.8 * dr.3
        ),
    )
}

fn c10_gradient() -> Outcome {
    let d = DiscountSpec { gamma: 0.99, max_steps: 16 };
    let mut worst = 0.0f64;
    for b in 0..50u64 {
        let layout = if b % 2 == 0 { FeatureLayout::Flat } else { FeatureLayout::Egocentric };
        let class = if b % 3 == 0 { GenClass::NonDistinguishing } else { GenClass::Distinguishing };
        let level = generate(&GeneratorSpec { active_region: 6, ..GeneratorSpec::new(EnvKind::Corner, class) }, Seed(500 + b)).unwrap();
        let cfg = LearnerConfig { kind: LearnerKind::LinearPg, layout, entropy_bonus: 0.05, gamma: d.gamma, ..Default::default() };
        let dim = 4 * layout.dim(level.channels());
        let mut rng = Seed(b).split("weights").rng();
        let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let pg = LinearPg::from_weights(cfg, level.channels(), w.clone(), 0).map_err(|e| e.to_string())?;
        let trajs: Vec<Trajectory> = (0..4).map(|i| rollout(&level, &pg, d, Seed(b).index(i)).unwrap()).collect();
        let batch: Vec<(&Level, &Trajectory)> = trajs.iter().map(|t| (&level, t)).collect();
        let adv = advantages(&batch, d.gamma);
        let g = pg.gradient(&batch, &adv);
        let touched: Vec<usize> = (0..dim).filter(|&i| g[i] != 0.0).collect();
        for _ in 0..8 {
            let i = if touched.is_empty() { rng.gen_range(0..dim) } else { touched[rng.gen_range(0..touched.len())] };
            let h = 1e-5;
            let at = |x: f64| {
                let mut v = w.clone();
                v[i] += x;
                LinearPg::from_weights(cfg, level.channels(), v, 0).unwrap().surrogate(&batch, &adv)
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1.0));
        }
    }
    check(worst <= 1e-4, format!("50 batches; max relative error {worst:.2e}"))
}

fn c11_determinism() -> Outcome {
    let cfg = RunConfig::load(&configs().join("smoke.json")).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let m = run_experiment(&cfg, &dir.path().join("run"), |_| ()).map_err(|e| e.to_string())?;
    let checks = replay(&m, &dir.path().join("replay"), |_| ()).map_err(|e| e.to_string())?;
    let same = checks.iter().filter(|c| c.matches()).count();
    check(same == checks.len() && !checks.is_empty(), format!("{same}/{} artifacts byte-identical on replay", checks.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("collection-sequence count", c1_sequence_count),
        ("oracle equivalence", c2_oracle_equivalence),
        ("regret identity and exchange", c3_regret_identity),
        ("proxy-distinguishing witness", c4_thm1),
        ("minimax-regret optimality under full observability", c5_thm2),
        ("set inclusions, restricted bound, necessity, maximin", c6_remaining_theory),
        ("regret amplification of distinguishing levels", c7_amplification),
        ("maximin adversary prefers unsolvable levels", c8_maximin),
        ("desk-scale misgeneralization direction", c9_misgeneralization),
        ("policy-gradient finite differences", c10_gradient),
        ("manifest replay determinism", c11_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = f();
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(d) => println!("PASS criterion {:>2} {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                println!("FAIL criterion {:>2} {name}: {d} [{secs:.1}s]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
