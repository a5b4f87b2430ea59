//! DR, Robust PLR and ACCEL step functions.

use super::buffer::{BufferEntry, InsertOutcome, LevelBuffer, DEFAULT_CAPACITY};
use super::estimators::{estimate, Estimator};
use crate::env::Level;
use crate::error::{Error, Result};
use crate::learners::{Learner, UpdateStats};
use crate::levelgen::{apply_edit_sequence, sample_mixture, EditSpec, EditVariant, MixtureSpec};
use crate::rng::Seed;
use crate::solvers::{classify, max_return, Classification};
use crate::umdp::{rollout, DiscountSpec, Policy, RewardSelector, Trajectory};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dr,
    Plr,
    Accel,
    AccelC,
    AccelBin,
    AccelUnr,
    MaximinPlr,
    MaximinAccel,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Dr,
        Method::Plr,
        Method::Accel,
        Method::AccelC,
        Method::AccelBin,
        Method::AccelUnr,
        Method::MaximinPlr,
        Method::MaximinAccel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dr => "dr",
            Method::Plr => "plr",
            Method::Accel => "accel",
            Method::AccelC => "accel-c",
            Method::AccelBin => "accel-bin",
            Method::AccelUnr => "accel-unr",
            Method::MaximinPlr => "maximin-plr",
            Method::MaximinAccel => "maximin-accel",
        }
    }

    pub fn is_accel(self) -> bool {
        matches!(self, Method::Accel | Method::AccelC | Method::AccelBin | Method::AccelUnr | Method::MaximinAccel)
    }

    pub fn is_maximin(self) -> bool {
        matches!(self, Method::MaximinPlr | Method::MaximinAccel)
    }

    pub fn default_replay_rate(self) -> f64 {
        if self.is_accel() {
            0.5
        } else {
            0.33
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdversaryConfig {
    pub method: Method,
    /// Ignored by the maximin methods, which always use `NegValue`.
    pub estimator: Estimator,
    /// Probability of a replay cycle; defaults to 0.33 (PLR) or 0.5 (ACCEL).
    pub replay_rate: Option<f64>,
    pub temperature: f64,
    pub staleness_coeff: f64,
    pub batch_size: usize,
    pub capacity: usize,
    /// Replay is only possible once the buffer holds this many levels; defaults to `min(batch_size, capacity)`.
    pub min_fill: Option<usize>,
    /// Each level is rolled out for whole episodes until at least this many steps.
    pub rollout_steps: usize,
    pub n_edits: usize,
    /// Edit region; defaults to the generator's active region.
    pub edit_region: Option<usize>,
    /// Bias of transforming edits; defaults to the training mixture's alpha.
    pub edit_alpha: Option<f64>,
    /// Edit variant for `maximin-accel`; the other ACCEL methods fix their own.
    pub edit_variant: EditVariant,
}

impl Default for AdversaryConfig {
    fn default() -> Self {
        AdversaryConfig {
            method: Method::Plr,
            estimator: Estimator::OracleLatest,
            replay_rate: None,
            temperature: 0.1,
            staleness_coeff: 0.1,
            batch_size: 256,
            capacity: DEFAULT_CAPACITY,
            min_fill: None,
            rollout_steps: 128,
            n_edits: 12,
            edit_region: None,
            edit_alpha: None,
            edit_variant: EditVariant::Identity,
        }
    }
}

impl AdversaryConfig {
    pub fn replay_rate(&self) -> f64 {
        self.replay_rate.unwrap_or(self.method.default_replay_rate())
    }

    pub fn estimator(&self) -> Estimator {
        if self.method.is_maximin() {
            Estimator::NegValue
        } else {
            self.estimator
        }
    }

    pub fn min_fill(&self) -> usize {
        self.min_fill.unwrap_or(self.batch_size.min(self.capacity))
    }

    pub fn edit_spec(&self, mixture: &MixtureSpec) -> EditSpec {
        let variant = match self.method {
            Method::AccelC => EditVariant::Constant,
            Method::AccelBin => EditVariant::Binomial,
            Method::AccelUnr => EditVariant::Unrestricted,
            Method::MaximinAccel => self.edit_variant,
            _ => EditVariant::Identity,
        };
        EditSpec {
            variant,
            n_edits: self.n_edits,
            alpha: self.edit_alpha.unwrap_or(mixture.alpha),
            active_region: self.edit_region.unwrap_or(mixture.nd.active_region),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.replay_rate();
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Config(format!("replay rate {r} outside [0, 1]")));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config("temperature must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.staleness_coeff) {
            return Err(Error::Config("staleness coefficient outside [0, 1]".into()));
        }
        if self.batch_size == 0 || self.capacity == 0 || self.rollout_steps == 0 {
            return Err(Error::Config("batch size, capacity and rollout steps must be positive".into()));
        }
        if self.min_fill() == 0 || self.min_fill() > self.capacity {
            return Err(Error::Config(format!("min_fill {} outside 1..={}", self.min_fill(), self.capacity)));
        }
        if let Some(a) = self.edit_alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!("edit alpha {a} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cycle {
    /// Fresh levels scored without a learner update.
    Generate,
    /// Buffer levels replayed with a learner update.
    Replay,
    /// Fresh levels trained on directly.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepReport {
    pub cycle: Cycle,
    pub trained_levels: usize,
    pub inserted: usize,
    pub update: Option<UpdateStats>,
}

/// Everything the adversary carries between steps.
#[derive(Clone, Debug)]
pub struct UedState {
    pub buffer: LevelBuffer,
    pub discount: DiscountSpec,
    pub env_steps: u64,
    /// Levels the learner was updated on, with multiplicity.
    pub trained_levels: u64,
    pub trained_distinguishing: u64,
    pub generate_cycles: u64,
    pub replay_cycles: u64,
    /// Classifications of the most recent freshly generated batch.
    pub last_fresh: Vec<Classification>,
}

impl UedState {
    pub fn new(config: &AdversaryConfig, discount: DiscountSpec) -> Result<UedState> {
        config.validate()?;
        discount.validate()?;
        Ok(UedState {
            buffer: LevelBuffer::new(config.capacity)?,
            discount,
            env_steps: 0,
            trained_levels: 0,
            trained_distinguishing: 0,
            generate_cycles: 0,
            replay_cycles: 0,
            last_fresh: Vec::new(),
        })
    }

    pub fn iteration(&self) -> u64 {
        self.buffer.iteration
    }

    /// Cumulative share of distinguishing levels among those trained on.
    pub fn replay_fraction_distinguishing(&self) -> f64 {
        if self.trained_levels == 0 {
            0.0
        } else {
            self.trained_distinguishing as f64 / self.trained_levels as f64
        }
    }

    fn record_training(&mut self, levels: &[Level]) {
        self.trained_levels += levels.len() as u64;
        self.trained_distinguishing += levels.iter().filter(|l| classify(l).is_distinguishing()).count() as u64;
    }
}

/// Whole episodes on each level until at least `min_steps` steps were taken.
pub fn rollout_levels(
    levels: &[Level],
    policy: &dyn Policy,
    min_steps: usize,
    discount: DiscountSpec,
    seed: Seed,
) -> Result<Vec<Vec<Trajectory>>> {
    levels
        .par_iter()
        .enumerate()
        .map(|(i, l)| {
            let s = seed.index(i as u64);
            let mut out = Vec::new();
            let mut steps = 0;
            while steps < min_steps || out.is_empty() {
                let t = rollout(l, policy, discount, s.index(out.len() as u64))?;
                steps += t.len().max(1);
                out.push(t);
            }
            Ok(out)
        })
        .collect()
}

fn returns(trajs: &[Trajectory], gamma: f64) -> Vec<f64> {
    trajs.iter().map(|t| t.discounted_return(RewardSelector::True, gamma)).collect()
}

fn count_steps(trajs: &[Vec<Trajectory>]) -> u64 {
    trajs.iter().flatten().map(|t| t.len() as u64).sum()
}

fn oracle_for(gamma: f64) -> impl Fn(&Level) -> Result<f64> {
    move |l: &Level| Ok(max_return(l, gamma))
}

fn fresh_batch(mixture: &MixtureSpec, n: usize, seed: Seed) -> Result<Vec<Level>> {
    (0..n).into_par_iter().map(|i| sample_mixture(mixture, seed.index(i as u64)).map(|(l, _)| l)).collect()
}

/// Score levels from their rollouts and offer them to the buffer. Returns the number admitted.
fn score_and_insert(state: &mut UedState, config: &AdversaryConfig, levels: Vec<Level>, trajs: &[Vec<Trajectory>]) -> Result<usize> {
    let gamma = state.discount.gamma;
    let oracle = oracle_for(gamma);
    let it = state.iteration();
    let mut admitted = 0;
    for (level, t) in levels.into_iter().zip(trajs) {
        let mut entry = match state.buffer.position(level.id()) {
            Some(i) => state.buffer.entries()[i].clone(),
            None => BufferEntry::new(level, it),
        };
        entry.score = estimate(config.estimator(), &mut entry, &returns(t, gamma), &oracle)?;
        entry.last_touched = it;
        if state.buffer.insert_if_better(entry) != InsertOutcome::Rejected {
            admitted += 1;
        }
    }
    Ok(admitted)
}

fn generate_cycle(
    state: &mut UedState,
    learner: &dyn Learner,
    mixture: &MixtureSpec,
    config: &AdversaryConfig,
    seed: Seed,
) -> Result<StepReport> {
    let levels = fresh_batch(mixture, config.batch_size, seed.split("generate"))?;
    let trajs = rollout_levels(&levels, learner, config.rollout_steps, state.discount, seed.split("rollout"))?;
    state.env_steps += count_steps(&trajs);
    state.last_fresh = levels.iter().map(classify).collect();
    let inserted = score_and_insert(state, config, levels, &trajs)?;
    state.generate_cycles += 1;
    Ok(StepReport { cycle: Cycle::Generate, trained_levels: 0, inserted, update: None })
}

/// Sample from the buffer, train, rescore. Returns the distinct replayed levels.
fn replay_cycle(
    state: &mut UedState,
    learner: &mut dyn Learner,
    config: &AdversaryConfig,
    seed: Seed,
) -> Result<(StepReport, Vec<Level>)> {
    let gamma = state.discount.gamma;
    let p = state.buffer.replay_distribution(config.temperature, config.staleness_coeff)?;
    let dist = WeightedIndex::new(&p).map_err(|e| Error::Contract(e.to_string()))?;
    let mut rng = seed.split("sample").rng();
    let picks: Vec<usize> = (0..config.batch_size).map(|_| dist.sample(&mut rng)).collect();
    let levels: Vec<Level> = picks.iter().map(|&i| state.buffer.entries()[i].level.clone()).collect();
    let trajs = rollout_levels(&levels, &*learner, config.rollout_steps, state.discount, seed.split("rollout"))?;
    state.env_steps += count_steps(&trajs);
    let batch: Vec<(&Level, &Trajectory)> =
        levels.iter().zip(&trajs).flat_map(|(l, ts)| ts.iter().map(move |t| (l, t))).collect();
    let stats = learner.update(&batch)?;
    state.record_training(&levels);

    let mut by_entry: Vec<(usize, Vec<f64>)> = Vec::new();
    for (&i, t) in picks.iter().zip(&trajs) {
        match by_entry.iter_mut().find(|(j, _)| *j == i) {
            Some((_, r)) => r.extend(returns(t, gamma)),
            None => by_entry.push((i, returns(t, gamma))),
        }
    }
    let oracle = oracle_for(gamma);
    let it = state.iteration();
    let mut distinct = Vec::with_capacity(by_entry.len());
    for (i, r) in by_entry {
        let e = state.buffer.entry_mut(i);
        e.score = estimate(config.estimator(), e, &r, &oracle)?;
        e.last_touched = it;
        distinct.push(e.level.clone());
    }
    state.replay_cycles += 1;
    let report = StepReport { cycle: Cycle::Replay, trained_levels: levels.len(), inserted: 0, update: Some(stats) };
    Ok((report, distinct))
}

fn wants_replay(state: &UedState, config: &AdversaryConfig, seed: Seed) -> bool {
    state.buffer.len() >= config.min_fill() && seed.split("cycle").rng().gen::<f64>() < config.replay_rate()
}

/// Domain randomisation: train on a fresh batch every step.
pub fn dr_step(
    state: &mut UedState,
    learner: &mut dyn Learner,
    mixture: &MixtureSpec,
    config: &AdversaryConfig,
    seed: Seed,
) -> Result<StepReport> {
    if config.method != Method::Dr {
        return Err(Error::Contract(format!("dr_step called for {}", config.method.name())));
    }
    let levels = fresh_batch(mixture, config.batch_size, seed.split("generate"))?;
    let trajs = rollout_levels(&levels, &*learner, config.rollout_steps, state.discount, seed.split("rollout"))?;
    state.env_steps += count_steps(&trajs);
    let batch: Vec<(&Level, &Trajectory)> =
        levels.iter().zip(&trajs).flat_map(|(l, ts)| ts.iter().map(move |t| (l, t))).collect();
    let stats = learner.update(&batch)?;
    state.record_training(&levels);
    state.last_fresh = levels.iter().map(classify).collect();
    state.generate_cycles += 1;
    state.buffer.iteration += 1;
    Ok(StepReport { cycle: Cycle::Random, trained_levels: levels.len(), inserted: 0, update: Some(stats) })
}

/// Robust PLR: fresh levels are only scored, the learner trains on replayed levels only.
pub fn plr_step(
    state: &mut UedState,
    learner: &mut dyn Learner,
    mixture: &MixtureSpec,
    config: &AdversaryConfig,
    seed: Seed,
) -> Result<StepReport> {
    if !matches!(config.method, Method::Plr | Method::MaximinPlr) {
        return Err(Error::Contract(format!("plr_step called for {}", config.method.name())));
    }
    let report = if wants_replay(state, config, seed) {
        replay_cycle(state, learner, config, seed)?.0
    } else {
        generate_cycle(state, learner, mixture, config, seed)?
    };
    state.buffer.iteration += 1;
    Ok(report)
}

/// PLR plus edits of the replayed levels, which are scored without training.
pub fn accel_step(
    state: &mut UedState,
    learner: &mut dyn Learner,
    mixture: &MixtureSpec,
    config: &AdversaryConfig,
    seed: Seed,
) -> Result<StepReport> {
    if !config.method.is_accel() {
        return Err(Error::Contract(format!("accel_step called for {}", config.method.name())));
    }
    let report = if wants_replay(state, config, seed) {
        let (mut report, trained) = replay_cycle(state, learner, config, seed)?;
        let spec = config.edit_spec(mixture);
        let es = seed.split("edit");
        let edited = trained
            .par_iter()
            .enumerate()
            .map(|(i, l)| apply_edit_sequence(l, &spec, es.index(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let trajs = rollout_levels(&edited, &*learner, config.rollout_steps, state.discount, seed.split("edit-rollout"))?;
        state.env_steps += count_steps(&trajs);
        report.inserted = score_and_insert(state, config, edited, &trajs)?;
        report
    } else {
        generate_cycle(state, learner, mixture, config, seed)?
    };
    state.buffer.iteration += 1;
    Ok(report)
}

/// Dispatch on the configured method.
pub fn step(
    state: &mut UedState,
    learner: &mut dyn Learner,
    mixture: &MixtureSpec,
    config: &AdversaryConfig,
    seed: Seed,
) -> Result<StepReport> {
    match config.method {
        Method::Dr => dr_step(state, learner, mixture, config, seed),
        Method::Plr | Method::MaximinPlr => plr_step(state, learner, mixture, config, seed),
        _ => accel_step(state, learner, mixture, config, seed),
    }
}
