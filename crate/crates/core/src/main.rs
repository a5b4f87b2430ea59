use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use regret_lab::env::{format_levels, parse_levels, EnvKind, Level};
use regret_lab::experiment::config::RunConfig;
use regret_lab::experiment::{emit_heatmap, replay, resolve_out_dir, run_experiment, Manifest};
use regret_lab::learners::eval::evaluate_per_level;
use regret_lab::learners::{EvalProtocol, SnapshotFile};
use regret_lab::levelgen::{generate, sample_mixture, GenClass, GeneratorSpec, MixtureSpec};
use regret_lab::rng::Seed;
use regret_lab::solvers::{classify, max_return, Scripted};
use regret_lab::theory::{run_suites, GameMethod, GameOptions, Suite};
use regret_lab::umdp::{Policy, RewardSelector};
use regret_lab::ued::EvalSets;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "regret-lab", version, about = "Goal misgeneralization workbench: levels, oracles, regret-based curricula and exact theory checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample levels from a generator or an alpha-mixture.
    Gen(GenArgs),
    /// Oracle maximum return and classification of every level in a file.
    Solve(SolveArgs),
    /// Train per a run config and write metrics, snapshots and a manifest.
    Train(TrainArgs),
    /// Evaluate a policy on a level file or on freshly drawn held-out sets.
    Eval(EvalArgs),
    /// Randomized theory suites on tabular instances.
    Theory(TheoryArgs),
    /// Per-cheese-cell returns over one corner level's layout.
    Heatmap(HeatmapArgs),
    /// Re-run a manifest and compare artifact hashes.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "corner")]
    env: EnvKind,
    /// `nd` or `d`; ignored when `--alpha` is given.
    #[arg(long, default_value = "nd")]
    class: GenClass,
    /// Draw from the (1 - alpha) ND + alpha D mixture instead of one generator.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 16)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    wall_probability: Option<f64>,
    #[arg(long)]
    active_region: Option<usize>,
    #[arg(long)]
    corner_region: Option<usize>,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    levels: PathBuf,
    #[arg(long, default_value_t = 0.999)]
    gamma: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides both the config and REGRET_LAB_OUT_DIR.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScriptedGoal {
    True,
    Proxy,
}

#[derive(Args)]
struct PolicyArgs {
    /// Policy snapshot written by `train`.
    #[arg(long, conflicts_with = "scripted", required_unless_present = "scripted")]
    snapshot: Option<PathBuf>,
    /// Use a scripted reference policy instead of a snapshot.
    #[arg(long, value_enum)]
    scripted: Option<ScriptedGoal>,
}

impl PolicyArgs {
    fn load(&self) -> Result<Box<dyn Policy + Send>> {
        if let Some(g) = self.scripted {
            return Ok(Box::new(match g {
                ScriptedGoal::True => Scripted::true_goal(),
                ScriptedGoal::Proxy => Scripted::proxy_goal(),
            }));
        }
        let path = self.snapshot.as_ref().context("a policy is required")?;
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(SnapshotFile::from_json(&text)?.into_policy()?)
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    policy: PolicyArgs,
    /// Level file; without it, held-out D and ND sets are drawn per `--config`.
    #[arg(long, conflicts_with = "config")]
    levels: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 512)]
    eval_steps: usize,
    #[arg(long, default_value = "true")]
    reward: RewardSelector,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TheoryArgs {
    /// Comma-separated suites: thm1, thm2, propB, propC, propD, thmD2, necessity, mmev, or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "lp")]
    method: GameMethod,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct HeatmapArgs {
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    levels: PathBuf,
    /// Which level of the file supplies the layout and spawn.
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 512)]
    eval_steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Defaults to `replay/` beside the manifest.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn read_levels(path: &Path) -> Result<Vec<Level>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_levels(&text)?)
}

fn gen(a: GenArgs) -> Result<()> {
    let d = GeneratorSpec::default();
    let spec = GeneratorSpec {
        env: a.env,
        class: a.class,
        wall_probability: a.wall_probability.unwrap_or(d.wall_probability),
        active_region: a.active_region.unwrap_or(d.active_region),
        corner_region: a.corner_region.unwrap_or(d.corner_region),
        ..d
    };
    let seed = Seed(a.seed);
    let levels = (0..a.count as u64)
        .map(|i| match a.alpha {
            Some(alpha) => sample_mixture(&MixtureSpec::from_base(alpha, spec), seed.index(i)).map(|(l, _)| l),
            None => generate(&spec, seed.index(i)),
        })
        .collect::<regret_lab::Result<Vec<_>>>()?;
    emit(a.out.as_deref(), &format_levels(&levels))
}

fn solve(a: SolveArgs) -> Result<()> {
    let levels = read_levels(&a.levels)?;
    let mut out = String::from("# format: solve v1\n");
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["index", "id", "env", "max_return", "class", "goal_reachable", "proxy_reachable"])?;
    for (i, l) in levels.iter().enumerate() {
        let c = classify(l);
        let class = serde_json::to_value(c.class)?;
        w.write_record([
            i.to_string(),
            format!("{:016x}", l.id()),
            l.kind().name().to_string(),
            max_return(l, a.gamma).to_string(),
            class.as_str().unwrap_or_default().to_string(),
            c.goal_reachable.to_string(),
            c.proxy_reachable.to_string(),
        ])?;
    }
    out.push_str(std::str::from_utf8(&w.into_inner()?)?);
    emit(a.out.as_deref(), &out)
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = RunConfig::load(&a.config).with_context(|| format!("loading {}", a.config.display()))?;
    let dir = resolve_out_dir(&cfg, a.out_dir.as_deref());
    let m = run_experiment(&cfg, &dir, |msg| eprintln!("{msg}"))?;
    for r in &m.runs {
        println!("seed {}: {} updates, {} env steps, metrics {}", r.seed, r.updates, r.env_steps, dir.join(&r.metrics.path).display());
    }
    println!("manifest {}", dir.join(&cfg.output.manifest).display());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let policy = a.policy.load()?;
    let seed = Seed(a.seed);
    let mut protocol = EvalProtocol { eval_steps: a.eval_steps, reward: a.reward, ..Default::default() };
    let sets: Vec<(&str, Vec<Level>)> = match (&a.levels, &a.config) {
        (Some(p), _) => vec![("file", read_levels(p)?)],
        (None, Some(c)) => {
            let cfg = RunConfig::load(c)?;
            protocol = EvalProtocol { eval_steps: a.eval_steps.max(cfg.eval.eval_steps), reward: a.reward, ..cfg.protocol() };
            let s = EvalSets::generate(&cfg.mixture(), cfg.eval.eval_batch_size, seed.split("eval-levels"))?;
            vec![("distinguishing", s.distinguishing), ("non_distinguishing", s.non_distinguishing)]
        }
        (None, None) => bail!("pass --levels or --config"),
    };
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["set", "index", "id", "return", "oracle_max_return"])?;
    for (name, levels) in &sets {
        let v = evaluate_per_level(&*policy, levels, &protocol, seed.split(name))?;
        for (i, (l, r)) in levels.iter().zip(&v).enumerate() {
            w.write_record([name.to_string(), i.to_string(), format!("{:016x}", l.id()), r.to_string(), max_return(l, protocol.gamma).to_string()])?;
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let oracle = levels.iter().map(|l| max_return(l, protocol.gamma)).sum::<f64>() / levels.len() as f64;
        eprintln!("{name}: {} levels, mean return {mean:.4}, oracle mean {oracle:.4}", levels.len());
    }
    let mut out = String::from("# format: eval v1\n");
    out.push_str(std::str::from_utf8(&w.into_inner()?)?);
    emit(a.out.as_deref(), &out)
}

fn theory(a: TheoryArgs) -> Result<bool> {
    let suites = Suite::parse_list(&a.suite)?;
    let opts = GameOptions { method: a.method, ..Default::default() };
    let report = run_suites(&suites, a.instances, Seed(a.seed), &opts)?;
    for s in &report.suites {
        let gap = s.max_duality_gap.map(|g| format!(", max duality gap {g:.1e}")).unwrap_or_default();
        eprintln!(
            "{}: {} instances, {} passed, {} failed, {} outside hypotheses{gap}",
            s.suite.name(),
            s.instances,
            s.passed,
            s.failed,
            s.hypothesis_violated
        );
    }
    match &a.report {
        Some(p) => emit(Some(p), &report.to_json()?)?,
        None => emit(None, &format!("{}\n", report.to_json()?))?,
    }
    Ok(report.ok())
}

fn heatmap(a: HeatmapArgs) -> Result<()> {
    let policy = a.policy.load()?;
    let levels = read_levels(&a.levels)?;
    let base = levels.get(a.index).with_context(|| format!("level index {} out of range ({} levels)", a.index, levels.len()))?;
    let protocol = EvalProtocol { eval_steps: a.eval_steps, ..Default::default() };
    let grid = emit_heatmap(&*policy, base, &protocol, Seed(a.seed))?;
    eprintln!("{} cells evaluated, {} masked", grid.cells, grid.masked_count());
    emit(a.out.as_deref(), &grid.to_json()?)
}

fn replay_cmd(a: ReplayArgs) -> Result<bool> {
    let m = Manifest::load(&a.manifest).with_context(|| format!("loading {}", a.manifest.display()))?;
    let dir = a.out_dir.unwrap_or_else(|| a.manifest.parent().unwrap_or(Path::new(".")).join("replay"));
    let checks = replay(&m, &dir, |msg| eprintln!("{msg}"))?;
    let mut ok = true;
    for c in &checks {
        println!("{} {}", if c.matches() { "identical" } else { "DIFFERS  " }, c.path);
        ok &= c.matches();
    }
    Ok(ok)
}

fn main() -> Result<()> {
    let ok = match Cli::parse().command {
        Command::Gen(a) => gen(a).map(|_| true),
        Command::Solve(a) => solve(a).map(|_| true),
        Command::Train(a) => train(a).map(|_| true),
        Command::Eval(a) => eval(a).map(|_| true),
        Command::Theory(a) => theory(a),
        Command::Heatmap(a) => heatmap(a).map(|_| true),
        Command::Replay(a) => replay_cmd(a),
    }?;
    if !ok {
        std::process::exit(1);
    }
    Ok(())
}
