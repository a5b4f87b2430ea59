use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_regret-lab"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn smoke_config(dir: &Path) -> String {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/smoke.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["training"]["max_updates"] = 4.into();
    v["eval"]["levels"] = 4.into();
    v["theory"]["instances"] = 2.into();
    let p = dir.join("cfg.json");
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn gen_then_solve_reports_every_level() {
    let dir = tempfile::tempdir().unwrap();
    let levels = dir.path().join("l.txt");
    run(&["gen", "--class", "d", "--count", "5", "--seed", "3", "--out", levels.to_str().unwrap()]);
    let out = run(&["solve", levels.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# format: solve v1"));
    assert!(lines.next().unwrap().starts_with("index,id,env,max_return,class"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.contains(",distinguishing,")));
}

#[test]
fn gen_is_deterministic_in_seed() {
    let a = run(&["gen", "--alpha", "0.5", "--count", "4", "--seed", "9"]).stdout;
    let b = run(&["gen", "--alpha", "0.5", "--count", "4", "--seed", "9"]).stdout;
    let c = run(&["gen", "--alpha", "0.5", "--count", "4", "--seed", "10"]).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn scripted_true_goal_matches_oracle_on_file() {
    let dir = tempfile::tempdir().unwrap();
    let levels = dir.path().join("l.txt");
    run(&["gen", "--count", "3", "--out", levels.to_str().unwrap()]);
    let text = String::from_utf8(run(&["eval", "--scripted", "true", "--levels", levels.to_str().unwrap()]).stdout).unwrap();
    for row in text.lines().skip(2) {
        let f: Vec<f64> = row.split(',').skip(3).map(|x| x.parse().unwrap()).collect();
        assert!((f[0] - f[1]).abs() < 1e-9, "{row}");
    }
}

#[test]
fn train_honours_env_out_dir_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let out = dir.path().join("from-env");
    let o = bin().args(["train", "--config", &cfg]).env("REGRET_LAB_OUT_DIR", &out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = out.join("manifest.json");
    assert!(manifest.exists());
    assert!(out.join("seed-0/policy.json").exists());
    let text = String::from_utf8(run(&["replay", manifest.to_str().unwrap()]).stdout).unwrap();
    assert!(text.lines().count() >= 2);
    assert!(text.lines().all(|l| l.starts_with("identical")), "{text}");

    let levels = dir.path().join("l.txt");
    run(&["gen", "--count", "1", "--out", levels.to_str().unwrap()]);
    let snap = out.join("seed-0/policy.json");
    let grid = run(&["heatmap", "--snapshot", snap.to_str().unwrap(), "--levels", levels.to_str().unwrap()]).stdout;
    let v: serde_json::Value = serde_json::from_slice(&grid).unwrap();
    assert_eq!(v["format"], "regret-lab-heatmap");
}

#[test]
fn theory_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("t.json");
    run(&["theory", "--suite", "thm1,propB", "--instances", "3", "--report", report.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["suites"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_inputs_fail_cleanly() {
    assert!(!bin().args(["theory", "--suite", "nonsense"]).output().unwrap().status.success());
    assert!(!bin().args(["solve", "/nonexistent/levels.txt"]).output().unwrap().status.success());
    assert!(!bin().args(["eval", "--scripted", "true"]).output().unwrap().status.success());
}
