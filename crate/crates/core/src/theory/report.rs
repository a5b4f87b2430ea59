//! Randomized suites over generated instances, reported as JSON.

use super::checks::{self, CheckOutcome, Status, Thresholds};
use super::game::GameOptions;
use super::instances::{random_shift_instance, random_umdp, InstanceShape};
use super::tabular::{PolicyClass, PolicyRestriction, PolicyTable, DEFAULT_POLICY_CAP};
use crate::error::{Error, Result};
use crate::rng::{Rng, Seed};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const REPORT_FORMAT: &str = "regret-lab-theory";
pub const REPORT_VERSION: u32 = 1;

/// Largest level-conditioned class generated for most suites.
const MAX_POLICIES: u128 = 4096;
/// The inclusion suite solves one LP per policy and threshold pair.
const MAX_POLICIES_PROP_C: u128 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Suite {
    #[serde(rename = "thm1")]
    Thm1,
    #[serde(rename = "thm2")]
    Thm2,
    #[serde(rename = "propB")]
    PropB,
    #[serde(rename = "propC")]
    PropC,
    #[serde(rename = "propD")]
    PropD,
    #[serde(rename = "thmD2")]
    ThmD2,
    #[serde(rename = "necessity")]
    Necessity,
    #[serde(rename = "mmev")]
    Mmev,
}

impl Suite {
    pub const ALL: [Suite; 8] =
        [Suite::Thm1, Suite::Thm2, Suite::PropB, Suite::PropC, Suite::PropD, Suite::ThmD2, Suite::Necessity, Suite::Mmev];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Thm1 => "thm1",
            Suite::Thm2 => "thm2",
            Suite::PropB => "propB",
            Suite::PropC => "propC",
            Suite::PropD => "propD",
            Suite::ThmD2 => "thmD2",
            Suite::Necessity => "necessity",
            Suite::Mmev => "mmev",
        }
    }

    /// Parses a suite name; `all` expands to every suite.
    pub fn parse_list(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        s.split(',')
            .map(|n| Suite::ALL.into_iter().find(|x| x.name() == n.trim()).ok_or_else(|| Error::Config(format!("unknown theory suite `{n}`"))))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub index: u64,
    pub seed: Seed,
    pub shape: InstanceShape,
    #[serde(flatten)]
    pub outcome: CheckOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub hypothesis_violated: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_duality_gap: Option<f64>,
    pub results: Vec<InstanceResult>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub format: String,
    pub version: u32,
    pub seed: Seed,
    pub suites: Vec<SuiteReport>,
}

impl TheoryReport {
    pub fn ok(&self) -> bool {
        self.suites.iter().all(SuiteReport::ok)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn threshold(rng: &mut Rng) -> f64 {
    if rng.gen_bool(0.25) {
        0.0
    } else {
        rng.gen_range(0.0..0.2)
    }
}

fn random_c(rng: &mut Rng) -> f64 {
    if rng.gen_bool(1.0 / 3.0) {
        0.0
    } else {
        rng.gen_range(0.0..0.3)
    }
}

fn hidden_mask(rng: &mut Rng, states: usize) -> Vec<bool> {
    let mut m: Vec<bool> = (0..states).map(|_| rng.gen_bool(0.5)).collect();
    let i = rng.gen_range(0..states);
    m[i] = true;
    m
}

fn shape_of(u: &super::tabular::TabularUmdp) -> InstanceShape {
    InstanceShape { levels: u.n_levels(), states: u.states, actions: u.actions, horizon: u.horizon, gamma: u.gamma }
}

/// Generates and checks the instance for one seed.
pub fn run_instance(suite: Suite, seed: Seed, opts: &GameOptions) -> Result<(InstanceShape, CheckOutcome)> {
    let mut rng = seed.rng();
    let r = &mut rng;
    Ok(match suite {
        Suite::Thm1 => {
            let c = random_c(r);
            let (u, t, s) = random_shift_instance(r, MAX_POLICIES, c)?;
            let eps = s.alpha + r.gen_range(0.0..0.1);
            (shape_of(&u), checks::verify_thm1(&u, &t, &s, eps)?)
        }
        Suite::Thm2 => {
            let c = random_c(r);
            let (u, t, s) = random_shift_instance(r, MAX_POLICIES, c)?;
            let eps = threshold(r);
            (shape_of(&u), checks::verify_thm2(&u, &t, &s, eps, opts)?)
        }
        Suite::PropB => {
            let shape = InstanceShape::random(r, MAX_POLICIES);
            let t = PolicyTable::full(&random_umdp(&shape, r))?;
            (shape, checks::verify_prop_b(&t, r, 16)?)
        }
        Suite::PropC => {
            let shape = InstanceShape::random(r, MAX_POLICIES_PROP_C);
            let u = random_umdp(&shape, r);
            let t = PolicyTable::full(&u)?;
            let th = Thresholds { epsilon: threshold(r), delta: threshold(r), eta: threshold(r) };
            (shape, checks::verify_prop_c(&u, &t, th, r, opts)?)
        }
        Suite::PropD => {
            let shape = InstanceShape::random(r, MAX_POLICIES);
            let u = random_umdp(&shape, r);
            let restriction = PolicyRestriction::hide_level_in(&u, &hidden_mask(r, u.states));
            let t = PolicyTable::new(&u, PolicyClass::restricted(&u, &restriction, DEFAULT_POLICY_CAP)?)?;
            (shape, checks::verify_prop_d1(&t, r, 8)?)
        }
        Suite::ThmD2 => {
            let c = random_c(r);
            let (u, _, s) = random_shift_instance(r, MAX_POLICIES, c)?;
            let restriction = PolicyRestriction::hide_level_in(&u, &hidden_mask(r, u.states));
            let t = PolicyTable::new(&u, PolicyClass::restricted(&u, &restriction, DEFAULT_POLICY_CAP)?)?;
            let eps = threshold(r);
            (shape_of(&u), checks::verify_thm_d2(&u, &t, &s.d_test, eps, opts)?)
        }
        Suite::Necessity => {
            let shape = InstanceShape::random(r, MAX_POLICIES);
            let u = random_umdp(&shape, r);
            let t = PolicyTable::full(&u)?;
            let eps = threshold(r);
            (shape, checks::verify_necessity(&u, &t, eps, r, opts)?)
        }
        Suite::Mmev => {
            let c = random_c(r);
            let (u, t, s) = random_shift_instance(r, MAX_POLICIES, c)?;
            (shape_of(&u), checks::verify_thm_i1(&u, &t, &s.d_test)?)
        }
    })
}

pub fn run_suite(suite: Suite, instances: usize, seed: Seed, opts: &GameOptions) -> Result<SuiteReport> {
    let base = seed.split(suite.name());
    let results = (0..instances as u64)
        .into_par_iter()
        .map(|i| {
            let s = base.index(i);
            run_instance(suite, s, opts).map(|(shape, outcome)| InstanceResult { index: i, seed: s, shape, outcome })
        })
        .collect::<Result<Vec<_>>>()?;
    let count = |k: Status| results.iter().filter(|r| r.outcome.status == k).count();
    let max_duality_gap = results.iter().filter_map(|r| r.outcome.duality_gap).reduce(f64::max);
    Ok(SuiteReport {
        suite,
        instances,
        passed: count(Status::Pass),
        failed: count(Status::Fail),
        hypothesis_violated: count(Status::HypothesisViolated),
        max_duality_gap,
        results,
    })
}

pub fn run_suites(suites: &[Suite], instances: usize, seed: Seed, opts: &GameOptions) -> Result<TheoryReport> {
    let suites = suites.iter().map(|&s| run_suite(s, instances, seed, opts)).collect::<Result<_>>()?;
    Ok(TheoryReport { format: REPORT_FORMAT.into(), version: REPORT_VERSION, seed, suites })
}
