use std::path::{Path, PathBuf};
use std::process::Command;

use dmpopt::benchmark::{Method, SeedingBenchmark};
use dmpopt::network::{EdgeListDialect, SpreadingNetwork};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn dmpopt(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dmpopt")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn toy() -> SpreadingNetwork {
    SpreadingNetwork::load_path(&data("toy.txt"), &EdgeListDialect::default()).unwrap()
}

#[test]
fn dmp_writes_one_row_per_node_and_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("marg.csv");
    let (code, _, err) = dmpopt(&[
        "dmp", "--graph", s(&data("toy.txt")), "--init", s(&data("toy_init.json")), "--horizon", "4", "--out", s(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 30 * 5);
    assert!(text.starts_with("node,t,P_S,P_I,P_R\n"));
    let manifest = std::fs::read_to_string(dir.path().join("marg.csv.manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(v["command"], "dmp");
    assert_eq!(v["flags"]["command"]["Dmp"]["horizon"], 4);
}

#[test]
fn missing_graph_is_a_usage_error() {
    let (code, _, err) = dmpopt(&["dmp", "--init", "x.json", "--horizon", "3", "--out", "o.csv"]);
    assert_eq!(code, 2);
    assert!(err.contains("--graph"), "{err}");
    assert_eq!(dmpopt(&["frobnicate"]).0, 2);
}

#[test]
fn monte_carlo_scatter_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("m{k}.csv"));
        let (code, _, err) = dmpopt(&[
            "dmp", "--graph", s(&data("toy.txt")), "--init", s(&data("toy_init.json")), "--horizon", "4",
            "--out", s(&out), "--mc", "100000", "--seed", "7", "--threads", threads,
        ]);
        assert_eq!(code, 0, "{err}");
        outputs.push(std::fs::read(dir.path().join(format!("m{k}.scatter.csv"))).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.starts_with("node,t,dmp_value,mc_value,stderr\n"));
}

#[test]
fn optimize_reports_every_target() {
    let dir = tempfile::tempdir().unwrap();
    let (report, schedule) = (dir.path().join("r.json"), dir.path().join("s.csv"));
    let (code, stdout, err) = dmpopt(&[
        "optimize", "--problem", s(&data("targeting.json")), "--out-report", s(&report), "--out-schedule", s(&schedule),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("objective"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let targets = v["targets"].as_array().unwrap();
    assert_eq!(targets.len(), 4);
    let sum: f64 = targets.iter().map(|t| t["p_infected"].as_f64().unwrap()).sum();
    assert!((sum - v["objective"].as_f64().unwrap()).abs() < 1e-12);
    assert!(v["max_abs_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(std::fs::read_to_string(&schedule).unwrap().lines().count(), 1 + 30 * 4);
}

fn write_problem(dir: &Path, name: &str, body: serde_json::Value) -> PathBuf {
    let p = dir.join(name);
    let mut body = body;
    body["graph"] = serde_json::Value::String(s(&data("toy.txt")).to_string());
    std::fs::write(&p, serde_json::to_string(&body).unwrap()).unwrap();
    p
}

fn objective_of(problem: &Path, dir: &Path) -> (i32, f64) {
    let (report, schedule) = (dir.join("r.json"), dir.join("s.csv"));
    let (code, _, err) =
        dmpopt(&["optimize", "--problem", s(problem), "--out-report", s(&report), "--out-schedule", s(&schedule)]);
    if code != 0 {
        eprintln!("{err}");
        return (code, f64::NAN);
    }
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    (code, v["objective"].as_f64().unwrap())
}

#[test]
fn zero_seeding_budget_leaves_the_uncontrolled_spread() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_problem(
        dir.path(),
        "p.json",
        serde_json::json!({"mode": "seeding", "horizon": 3, "budget_nu": 0.0, "initial": {"infected": ["n00"]}}),
    );
    let (code, obj) = objective_of(&p, dir.path());
    assert_eq!(code, 0);
    let net = toy();
    let ic = dmpopt::InitialCondition::with_infected(30, &[net.index_of("n00").unwrap()]).unwrap();
    let traj = dmpopt::dmp::run_forward(&net, &ic, &dmpopt::dmp::ControlSchedule::zeros(30, 3), 3).unwrap();
    let free: f64 = (0..30).map(|i| traj.pi(i, 3)).sum();
    assert!((obj - free).abs() < 1e-12, "{obj} vs {free}");
}

#[test]
fn saturated_vaccination_freezes_the_outbreak() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_problem(
        dir.path(),
        "p.json",
        serde_json::json!({"mode": "vaccination", "horizon": 4, "budget_mu": 40.0, "initial": {"infected": ["n00", "n05"]}}),
    );
    let (code, obj) = objective_of(&p, dir.path());
    assert_eq!(code, 0);
    assert!((obj - 2.0).abs() < 1e-9, "{obj}");
}

#[test]
fn infeasible_problem_exits_with_validation_status() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_problem(
        dir.path(),
        "p.json",
        serde_json::json!({"mode": "targeting", "horizon": 2, "budget_nu": 99.0, "initial": {}}),
    );
    assert_eq!(objective_of(&p, dir.path()).0, 2);
    let q = write_problem(dir.path(), "q.json", serde_json::json!({"mode": "targeting", "horizon": 2, "initial": {}}));
    assert_eq!(objective_of(&q, dir.path()).0, 2);
}

#[test]
fn benchmark_uniform_matches_the_engine() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let (code, _, err) = dmpopt(&[
        "benchmark", "--graph", s(&data("toy.txt")), "--methods", "uniform,hda,ci:2,kshell,random", "--out", s(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "network,N,M,method,spread");
    assert_eq!(lines.len(), 6);
    let uniform: f64 = lines[1].rsplit(',').next().unwrap().parse().unwrap();
    let net = toy().with_uniform_alpha(0.99).unwrap();
    let direct = SeedingBenchmark::new(&net, 0.05, 3, 0).evaluate(Method::Uniform).unwrap();
    assert_eq!(uniform, direct);
    assert!(lines[1].starts_with("toy,30,42,uniform,"));

    let (code, _, _) = dmpopt(&["benchmark", "--graph", s(&data("toy.txt")), "--methods", "hda,magic", "--out", s(&out)]);
    assert_eq!(code, 2);
}

#[test]
fn mitigation_is_repeatable_and_checks_policies_first() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let (code, _, err) = dmpopt(&[
            "mitigate", "--graph", s(&data("toy.txt")), "--seed-node", "n00", "--policy", "greedy", "--replicas", "1",
            "--seed", "5", "--horizon", "6", "--budget-frac", "0.1", "--out-dir", s(&out),
        ]);
        assert_eq!(code, 0, "{err}");
        texts.push(std::fs::read_to_string(out.join("greedy.csv")).unwrap());
        assert!(out.join("comparison.csv").exists());
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0].lines().count(), 1 + 7);

    let bad = dir.path().join("bad");
    let (code, _, _) = dmpopt(&[
        "mitigate", "--graph", s(&data("toy.txt")), "--seed-node", "n00", "--policy", "greedy,psychic", "--out-dir",
        s(&bad),
    ]);
    assert_eq!(code, 2);
    assert!(!bad.exists());
    let (code, _, _) = dmpopt(&[
        "mitigate", "--graph", s(&data("toy.txt")), "--seed-node", "nowhere", "--out-dir", s(&bad),
    ]);
    assert_eq!(code, 2);
    assert!(!bad.exists());
}

#[test]
fn rank_and_continuous_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rank.csv");
    let (code, _, err) = dmpopt(&["rank", "--graph", s(&data("toy.txt")), "--method", "ci:2", "--k", "5", "--out", s(&out)]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("rank,node_label,score\n"));
    assert_eq!(text.lines().count(), 6);
    assert_eq!(dmpopt(&["rank", "--graph", s(&data("toy.txt")), "--method", "dmp", "--out", s(&out)]).0, 2);

    let (report, schedule, traj) = (dir.path().join("c.json"), dir.path().join("c.csv"), dir.path().join("t.csv"));
    let (code, _, err) = dmpopt(&[
        "continuous", "--problem", s(&data("continuous.json")), "--out-report", s(&report), "--out-schedule",
        s(&schedule), "--out-trajectory", s(&traj),
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(v["max_abs_residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(std::fs::read_to_string(&traj).unwrap().lines().count(), 1 + 30 * 301);
}

#[test]
fn dataset_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = dmpopt(&["datasets", "list", "--dir", s(dir.path())]);
    assert_eq!(code, 0);
    assert!(stdout.contains("us-power-grid"));
    assert_eq!(dmpopt(&["datasets", "verify", "us-power-grid", "--dir", s(dir.path())]).0, 2);
    assert_eq!(dmpopt(&["datasets", "verify", "atlantis", "--dir", s(dir.path())]).0, 2);
}
