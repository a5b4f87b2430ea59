//! Training runs with manifests, and their replay.

use super::config::{sha256_hex, RunConfig};
use crate::error::{Error, Result};
use crate::learners::{build_learner, SnapshotFile};
use crate::rng::Seed;
use crate::theory::{run_suites, GameOptions, Suite};
use crate::ued::{metrics_to_string, train, TRAIN_SEED_LABELS};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST_FORMAT: &str = "regret-lab-manifest";
pub const MANIFEST_VERSION: u32 = 1;
/// Overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "REGRET_LAB_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: Seed,
    /// Every seed derived from the run's root seed, by label.
    pub seed_tree: BTreeMap<String, Seed>,
    pub updates: u64,
    pub env_steps: u64,
    pub metrics: Artifact,
    pub snapshot: Artifact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub config_sha256: String,
    pub config: RunConfig,
    pub runs: Vec<RunRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_report: Option<Artifact>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Manifest> {
        let m: Manifest = serde_json::from_str(text)?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            return Err(Error::Version(format!("{} v{}", m.format, m.version)));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        Manifest::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Precedence: explicit argument, then the environment variable, then the config.
pub fn resolve_out_dir(cfg: &RunConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

fn write(dir: &Path, rel: &str, bytes: &[u8]) -> Result<Artifact> {
    let path = dir.join(rel);
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p)?;
    }
    std::fs::write(&path, bytes)?;
    Ok(Artifact { path: rel.to_string(), sha256: sha256_hex(bytes) })
}

pub fn seed_tree(seed: Seed) -> BTreeMap<String, Seed> {
    let mut t: BTreeMap<String, Seed> = TRAIN_SEED_LABELS.iter().map(|l| (l.to_string(), seed.split(l))).collect();
    t.insert("root".into(), seed);
    t
}

/// Trains once per configured seed, then runs the theory suites if
/// configured, writing every artifact and the manifest under `out_dir`.
pub fn run_experiment(cfg: &RunConfig, out_dir: &Path, mut progress: impl FnMut(&str)) -> Result<Manifest> {
    cfg.validate()?;
    let spec = cfg.train_spec();
    let mut runs = Vec::new();
    for seed in cfg.seeds() {
        let mut learner = build_learner(&cfg.learner, cfg.channels())?;
        let (state, rows) = train(&mut *learner, &spec, seed, |r| {
            progress(&format!("seed {seed} iteration {} env_steps {}", r.iteration, r.env_steps));
            Ok(())
        })?;
        let sub = format!("seed-{seed}");
        let metrics = write(out_dir, &format!("{sub}/{}", cfg.output.metrics), metrics_to_string(&rows)?.as_bytes())?;
        let snap = SnapshotFile::new(learner.snapshot()).to_json()?;
        let snapshot = write(out_dir, &format!("{sub}/{}", cfg.output.snapshot), snap.as_bytes())?;
        runs.push(RunRecord { seed, seed_tree: seed_tree(seed), updates: learner.update_count(), env_steps: state.env_steps, metrics, snapshot });
    }
    let theory_report = match &cfg.theory {
        Some(t) => {
            let suites = Suite::parse_list(&t.suites)?;
            let report = run_suites(&suites, t.instances, Seed(t.seed), &GameOptions::default())?;
            progress(&format!("theory: {}", if report.ok() { "all suites passed" } else { "failures recorded" }));
            Some(write(out_dir, &cfg.output.theory_report, report.to_json()?.as_bytes())?)
        }
        None => None,
    };
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: MANIFEST_VERSION,
        config_sha256: cfg.sha256()?,
        config: cfg.clone(),
        runs,
        theory_report,
    };
    write(out_dir, &cfg.output.manifest, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayCheck {
    pub path: String,
    pub expected: String,
    pub actual: String,
}

impl ReplayCheck {
    pub fn matches(&self) -> bool {
        self.expected == self.actual
    }
}

/// Re-runs a manifest's configuration into `out_dir` and compares every
/// recorded artifact's hash.
pub fn replay(manifest: &Manifest, out_dir: &Path, progress: impl FnMut(&str)) -> Result<Vec<ReplayCheck>> {
    let hash = manifest.config.sha256()?;
    if hash != manifest.config_sha256 {
        return Err(Error::Config(format!("manifest config hash {} does not match its config ({hash})", manifest.config_sha256)));
    }
    let again = run_experiment(&manifest.config, out_dir, progress)?;
    let recorded = manifest.runs.iter().flat_map(|r| [&r.metrics, &r.snapshot]).chain(&manifest.theory_report);
    let fresh = again.runs.iter().flat_map(|r| [&r.metrics, &r.snapshot]).chain(&again.theory_report);
    Ok(recorded
        .zip(fresh)
        .map(|(a, b)| ReplayCheck { path: a.path.clone(), expected: a.sha256.clone(), actual: b.sha256.clone() })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke() -> RunConfig {
        let mut c = RunConfig::default();
        c.generator.active_region = 5;
        c.generator.alpha = 0.1;
        c.adversary.batch_size = 4;
        c.adversary.capacity = 8;
        c.adversary.rollout_steps = 1;
        c.eval.levels = 4;
        c.eval.eval_steps = 128;
        c.training.steps = 6;
        c.training.log_every = 3;
        c.seeds.runs = vec![1, 2];
        c
    }

    #[test]
    fn manifest_replays_byte_identically() {
        let dir = tempfile::tempdir().unwrap();
        let m = run_experiment(&smoke(), dir.path(), |_| ()).unwrap();
        assert_eq!(m.runs.len(), 2);
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let loaded = Manifest::from_json(&text).unwrap();
        assert_eq!(loaded, m);
        let first = std::fs::read(dir.path().join("seed-1/metrics.csv")).unwrap();
        assert!(first.starts_with(b"# format: metrics v1\n"));
        let again = tempfile::tempdir().unwrap();
        let checks = replay(&loaded, again.path(), |_| ()).unwrap();
        assert_eq!(checks.len(), 4);
        assert!(checks.iter().all(ReplayCheck::matches));
        assert_eq!(first, std::fs::read(again.path().join("seed-1/metrics.csv")).unwrap());
    }

    #[test]
    fn tampered_manifest_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = run_experiment(&smoke(), dir.path(), |_| ()).unwrap();
        m.config.training.steps += 1;
        assert!(replay(&m, dir.path(), |_| ()).is_err());
        let text = serde_json::to_string(&m).unwrap().replace(MANIFEST_FORMAT, "other");
        assert!(matches!(Manifest::from_json(&text), Err(Error::Version(_))));
    }
}
