//! Training loop with periodic held-out evaluation and CSV metrics.

use super::schedule::{step, AdversaryConfig, Method, UedState};
use crate::env::Level;
use crate::error::{Error, Result};
use crate::learners::{evaluate, EvalProtocol, Learner};
use crate::levelgen::{generate, GeneratorSpec, MixtureSpec};
use crate::rng::Seed;
use crate::solvers::classify;
use crate::umdp::{DiscountSpec, RewardSelector};
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const METRICS_HEADER: &str = "# format: metrics v1";

/// Labels under which `train` splits its root seed.
pub const TRAIN_SEED_LABELS: [&str; 3] = ["eval-levels", "steps", "eval"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: u64,
    pub env_steps: u64,
    pub replay_fraction_distinguishing: f64,
    pub buffer_fraction_distinguishing: f64,
    pub buffer_fraction_unsolvable: f64,
    pub mean_eval_return_distinguishing: Option<f64>,
    pub mean_eval_return_nondistinguishing: Option<f64>,
    pub mean_eval_proxy_return: Option<f64>,
}

pub fn write_metrics<W: Write>(rows: &[MetricsRow], mut out: W) -> Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn metrics_to_string(rows: &[MetricsRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_metrics(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn read_metrics(text: &str) -> Result<Vec<MetricsRow>> {
    let body = match text.split_once('\n') {
        Some((h, rest)) if h.trim() == METRICS_HEADER => rest,
        Some((h, _)) if h.starts_with("# format:") => return Err(Error::Version(h.trim().to_string())),
        _ => return Err(Error::Parse { line: 1, msg: format!("missing `{METRICS_HEADER}` header") }),
    };
    csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Parse { line: i + 3, msg: e.to_string() }))
        .collect()
}

/// Held-out evaluation levels: distinguishing levels from the D generator and
/// levels from the ND generator.
#[derive(Clone, Debug, Default)]
pub struct EvalSets {
    pub distinguishing: Vec<Level>,
    pub non_distinguishing: Vec<Level>,
}

impl EvalSets {
    pub fn generate(mixture: &MixtureSpec, n: usize, seed: Seed) -> Result<EvalSets> {
        let d = draw(&mixture.d, n, seed.split("d"), true)?;
        let nd = draw(&mixture.nd, n, seed.split("nd"), false)?;
        Ok(EvalSets { distinguishing: d, non_distinguishing: nd })
    }
}

fn draw(spec: &GeneratorSpec, n: usize, seed: Seed, distinguishing_only: bool) -> Result<Vec<Level>> {
    let mut out = Vec::with_capacity(n);
    let mut i = 0u64;
    while out.len() < n {
        if i as usize >= 100 * n.max(1) {
            return Err(Error::Placement { what: "distinguishing evaluation level".into(), attempts: i as usize });
        }
        let l = generate(spec, seed.index(i))?;
        i += 1;
        if !distinguishing_only || classify(&l).is_distinguishing() {
            out.push(l);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TrainSpec {
    pub mixture: MixtureSpec,
    pub adversary: AdversaryConfig,
    pub discount: DiscountSpec,
    pub eval: EvalProtocol,
    /// Levels per held-out set; zero disables evaluation.
    pub eval_levels: usize,
    pub steps: u64,
    /// Stop early once the learner has made this many updates.
    pub max_updates: Option<u64>,
    pub log_every: u64,
}

impl TrainSpec {
    pub fn validate(&self) -> Result<()> {
        self.mixture.validate()?;
        self.adversary.validate()?;
        self.discount.validate()?;
        self.eval.validate()?;
        if self.log_every == 0 {
            return Err(Error::Config("log_every must be positive".into()));
        }
        Ok(())
    }
}

pub fn metrics_row(state: &UedState, method: Method, learner: &dyn Learner, eval: Option<(&EvalSets, &EvalProtocol)>, seed: Seed) -> Result<MetricsRow> {
    let (bd, bu) = if method == Method::Dr {
        let n = state.last_fresh.len().max(1) as f64;
        (
            state.last_fresh.iter().filter(|c| c.is_distinguishing()).count() as f64 / n,
            state.last_fresh.iter().filter(|c| !c.goal_reachable).count() as f64 / n,
        )
    } else {
        (
            state.buffer.fraction(|e| e.classification.is_distinguishing()),
            state.buffer.fraction(|e| !e.classification.goal_reachable),
        )
    };
    let (mut d, mut nd, mut proxy) = (None, None, None);
    if let Some((sets, p)) = eval {
        let t = EvalProtocol { reward: RewardSelector::True, ..*p };
        let pr = EvalProtocol { reward: RewardSelector::Proxy, ..*p };
        if !sets.distinguishing.is_empty() {
            d = Some(evaluate(learner, &sets.distinguishing, &t, seed.split("d"))?.mean);
            proxy = Some(evaluate(learner, &sets.distinguishing, &pr, seed.split("d"))?.mean);
        }
        if !sets.non_distinguishing.is_empty() {
            nd = Some(evaluate(learner, &sets.non_distinguishing, &t, seed.split("nd"))?.mean);
        }
    }
    Ok(MetricsRow {
        iteration: state.iteration(),
        env_steps: state.env_steps,
        replay_fraction_distinguishing: state.replay_fraction_distinguishing(),
        buffer_fraction_distinguishing: bd,
        buffer_fraction_unsolvable: bu,
        mean_eval_return_distinguishing: d,
        mean_eval_return_nondistinguishing: nd,
        mean_eval_proxy_return: proxy,
    })
}

/// Run up to `spec.steps` adversary steps, logging a row every `log_every`
/// steps and after the last one.
pub fn train(
    learner: &mut dyn Learner,
    spec: &TrainSpec,
    seed: Seed,
    mut on_row: impl FnMut(&MetricsRow) -> Result<()>,
) -> Result<(UedState, Vec<MetricsRow>)> {
    spec.validate()?;
    let mut state = UedState::new(&spec.adversary, spec.discount)?;
    let sets = EvalSets::generate(&spec.mixture, spec.eval_levels, seed.split(TRAIN_SEED_LABELS[0]))?;
    let eval = (spec.eval_levels > 0).then_some((&sets, &spec.eval));
    let step_seed = seed.split(TRAIN_SEED_LABELS[1]);
    let mut rows = Vec::new();
    for i in 0..spec.steps {
        step(&mut state, learner, &spec.mixture, &spec.adversary, step_seed.index(i))?;
        let done = spec.max_updates.is_some_and(|m| learner.update_count() >= m);
        if (i + 1) % spec.log_every == 0 || i + 1 == spec.steps || done {
            let row = metrics_row(&state, spec.adversary.method, learner, eval, seed.split(TRAIN_SEED_LABELS[2]).index(i))?;
            on_row(&row)?;
            rows.push(row);
        }
        if done {
            break;
        }
    }
    Ok((state, rows))
}
