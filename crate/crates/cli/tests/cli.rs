use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lqig_core::io::save_spec;
use lqig_core::scenarios::{random_game, RandomGameShape};
use serde_json::Value;
use tempfile::TempDir;

fn lqig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqig"))
        .args(args)
        .env_remove("LQIG_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn small_spec(dir: &Path) -> PathBuf {
    let spec = random_game::<f64>(
        RandomGameShape {
            horizon: 3,
            ..Default::default()
        },
        4,
    )
    .unwrap();
    let path = dir.join("spec.json");
    std::fs::write(&path, save_spec(&spec)).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Solves the small spec and returns (spec path, policy path).
fn solved(dir: &Path) -> (PathBuf, PathBuf) {
    let spec = small_spec(dir);
    let out = dir.join("solve");
    let o = lqig(&[
        "solve",
        s(&spec),
        "--x0",
        "0.5,-0.2,0.1,0",
        "--max-iters",
        "300",
        "--out",
        s(&out),
    ]);
    assert!([0, 2].contains(&code(&o)), "{}", stderr(&o));
    (spec, out.join("policy.json"))
}

fn strip_timing(v: &mut Value) {
    if let Value::Object(map) = v {
        for key in [
            "resolve_times_ms",
            "mean_resolve_ms",
            "std_resolve_ms",
            "median_resolve_ms",
        ] {
            map.remove(key);
        }
    }
}

#[test]
fn missing_spec_names_the_path() {
    let dir = TempDir::new().unwrap();
    let o = lqig(&["solve", "no/such/spec.json", "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no/such/spec.json"));
}

#[test]
fn zero_budget_returns_uniform_policy() {
    let dir = TempDir::new().unwrap();
    let spec = small_spec(dir.path());
    let out = dir.path().join("out");
    let o = lqig(&["solve", s(&spec), "--max-iters", "0", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    let policy = read_json(&out.join("policy.json"));
    let logits = policy["logits"].as_array().unwrap();
    assert_eq!(logits.len(), 7);
    assert!(logits
        .iter()
        .flat_map(|m| m.as_array().unwrap())
        .flat_map(|r| r.as_array().unwrap())
        .all(|x| x.as_f64() == Some(0.0)));
    assert_eq!(policy["iterations"], 0);
}

#[test]
fn solve_writes_every_artifact_and_lists_it() {
    let dir = TempDir::new().unwrap();
    let spec = small_spec(dir.path());
    let out = dir.path().join("out");
    let o = lqig(&[
        "solve",
        s(&spec),
        "--x0",
        "0.5,-0.2,0.1,0",
        "--max-iters",
        "5000",
        "--grad-tol",
        "1e-4",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "solve");
    let outputs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(
        outputs,
        ["policy.json", "trace.csv", "beliefs.json", "values.json"]
    );
    for f in outputs {
        assert!(out.join(f).exists());
    }
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,loss,grad_norm,step_size_used\n"));
    assert_eq!(read_json(&out.join("policy.json"))["converged"], true);

    // Replaying the recorded arguments reproduces the artifacts.
    let args: Vec<String> = manifest["args"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let first = std::fs::read(out.join("policy.json")).unwrap();
    let o = lqig(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(out.join("policy.json")).unwrap(), first);
}

#[test]
fn wrong_x0_length_is_an_error() {
    let dir = TempDir::new().unwrap();
    let spec = small_spec(dir.path());
    let o = lqig(&[
        "solve",
        s(&spec),
        "--x0",
        "1,2",
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--x0"));
}

#[test]
fn simulate_is_reproducible_from_the_seed() {
    let dir = TempDir::new().unwrap();
    let (spec, policy) = solved(dir.path());
    let noise = dir.path().join("noise.json");
    std::fs::write(
        &noise,
        r#"{"version": 1, "Sigma": [[0,0,0,0],[0,0,0,0],[0,0,0.04,0],[0,0,0,0.04]], "seed": 3}"#,
    )
    .unwrap();
    let run = |name: &str, resolve: bool| {
        let out = dir.path().join(name);
        let mut args = vec![
            "simulate",
            "--policy",
            s(&policy),
            "--spec",
            s(&spec),
            "--noise",
            s(&noise),
            "--runs",
            "4",
            "--seed",
            "11",
            "--resolve-iters",
            "10",
            "--out",
            s(&out),
        ];
        if resolve {
            args.push("--resolve");
        }
        let o = lqig(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let (a, b) = (run("a", false), run("b", false));
    for f in ["trajectories.jsonl", "stats.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    // With re-solving only the measured times may differ.
    let (a, b) = (run("ra", true), run("rb", true));
    let lines = |p: &Path| -> Vec<Value> {
        std::fs::read_to_string(p.join("trajectories.jsonl"))
            .unwrap()
            .lines()
            .map(|l| {
                let mut v: Value = serde_json::from_str(l).unwrap();
                strip_timing(&mut v);
                v
            })
            .collect()
    };
    assert_eq!(lines(&a).len(), 8);
    assert_eq!(lines(&a), lines(&b));
    let (mut sa, mut sb) = (
        read_json(&a.join("stats.json")),
        read_json(&b.join("stats.json")),
    );
    strip_timing(&mut sa);
    strip_timing(&mut sb);
    assert_eq!(sa, sb);
}

#[test]
fn paired_stats_carry_the_summary_fields() {
    let dir = TempDir::new().unwrap();
    let (spec, policy) = solved(dir.path());
    let out = dir.path().join("sim");
    let o = lqig(&[
        "simulate",
        "--policy",
        s(&policy),
        "--spec",
        s(&spec),
        "--resolve",
        "--runs",
        "5",
        "--resolve-iters",
        "5",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stats = read_json(&out.join("stats.json"));
    for key in [
        "mean_delta_cost",
        "std_delta_cost",
        "ci95",
        "mean_resolve_ms",
        "std_resolve_ms",
    ] {
        assert!(!stats[key].is_null(), "{key}");
    }
    assert_eq!(stats["n_runs"], 5);

    // Paired-cost table agrees with the stats.
    let plots = dir.path().join("plots");
    let o = lqig(&[
        "export-plots-data",
        "--run-dir",
        s(&out),
        "--out",
        s(&plots),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = std::fs::read_to_string(plots.join("delta_cost.csv")).unwrap();
    let deltas: Vec<f64> = table
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(deltas.len(), 5);
    let mean = deltas.iter().sum::<f64>() / 5.0;
    assert!((mean - stats["mean_delta_cost"].as_f64().unwrap()).abs() < 1e-12);
    let csvs = std::fs::read_dir(plots.join("trajectories"))
        .unwrap()
        .count();
    assert_eq!(csvs, 10);
    let one = std::fs::read_to_string(plots.join("trajectories/run000000_offline_type0.csv"))
        .or_else(|_| {
            std::fs::read_to_string(plots.join("trajectories/run000000_offline_type1.csv"))
        })
        .unwrap();
    assert_eq!(one.lines().count(), 1 + 4);
    assert!(one.starts_with("k,x0,x1,x2,x3,u0,u1,v0,v1,p0,p1,branch\n"));
}

#[test]
fn single_run_has_null_interval() {
    let dir = TempDir::new().unwrap();
    let (spec, policy) = solved(dir.path());
    let out = dir.path().join("sim");
    let o = lqig(&[
        "simulate",
        "--policy",
        s(&policy),
        "--spec",
        s(&spec),
        "--resolve",
        "--runs",
        "1",
        "--resolve-iters",
        "5",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0);
    let stats = read_json(&out.join("stats.json"));
    assert!(stats["ci95"].is_null());
    assert!(stats["std_delta_cost"].is_null());
}

#[test]
fn policy_for_another_game_is_rejected() {
    let dir = TempDir::new().unwrap();
    let (_, policy) = solved(dir.path());
    let other = dir.path().join("other.json");
    let spec = random_game::<f64>(
        RandomGameShape {
            horizon: 3,
            ..Default::default()
        },
        5,
    )
    .unwrap();
    std::fs::write(&other, save_spec(&spec)).unwrap();
    let o = lqig(&[
        "simulate",
        "--policy",
        s(&policy),
        "--spec",
        s(&other),
        "--out",
        s(&dir.path().join("x")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("policy/spec mismatch"));
}

#[test]
fn dual_report_checks_out() {
    let dir = TempDir::new().unwrap();
    let spec_path = small_spec(dir.path());
    let spec = lqig_core::io::load_spec(&std::fs::read_to_string(&spec_path).unwrap()).unwrap();
    let probes = dir.path().join("probes.json");
    std::fs::write(
        &probes,
        r#"{"version": 1, "probes": [
        {"k": 0, "omega": "", "x": [0.3, -0.1, 0.2, 0.0], "p_hat": [0.1, -0.2]},
        {"k": 1, "omega": "2", "x": [0.0, 0.5, 0.0, 0.1], "p_hat": [0.0, 0.0]},
        {"k": 3, "omega": "132", "x": [1.0, 0.0, -0.5, 0.2], "p_hat": [0.4, 0.1]}
    ]}"#,
    )
    .unwrap();
    let out = dir.path().join("dual");
    let o = lqig(&[
        "dual",
        "--spec",
        s(&spec_path),
        "--probes",
        s(&probes),
        "--seed",
        "2",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("dual_tree.json").exists());
    let report = read_json(&out.join("dual_report.json"));
    let probes = report["probes"].as_array().unwrap();
    assert_eq!(probes.len(), 3);
    for p in probes {
        assert!(p["duality_gap"].as_f64().unwrap() <= 1e-9);
    }
    let x = lqig_core::linalg::Vector::from_vec(vec![1.0, 0.0, -0.5, 0.2]);
    let expect = (0..2)
        .map(|i| [0.4, 0.1][i] - spec.types[i].terminal_cost(&x))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((probes[2]["W"].as_f64().unwrap() - expect).abs() < 1e-12);
    assert_eq!(probes[2]["terminal"], true);
    assert!(probes[0]["column_generation"]["value"].is_number());

    // Replaying against the saved tree gives the same report.
    let again = dir.path().join("again");
    let o = lqig(&[
        "dual",
        "--spec",
        s(&spec_path),
        "--dual-tree",
        s(&out.join("dual_tree.json")),
        "--probes",
        s(&dir.path().join("probes.json")),
        "--out",
        s(&again),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&again.join("dual_report.json")), report);
}

#[test]
fn empty_probe_list_gives_empty_report() {
    let dir = TempDir::new().unwrap();
    let spec = small_spec(dir.path());
    let probes = dir.path().join("probes.json");
    std::fs::write(&probes, r#"{"version": 1, "probes": []}"#).unwrap();
    let out = dir.path().join("dual");
    let o = lqig(&[
        "dual",
        "--spec",
        s(&spec),
        "--probes",
        s(&probes),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        read_json(&out.join("dual_report.json"))["probes"],
        Value::Array(vec![])
    );
}

#[test]
fn verify_passes_and_catches_an_injected_fault() {
    let o = lqig(&["verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains("PASS")).count(), 4);

    let o = lqig(&["verify", "--inject-fault", "grad"]);
    assert_eq!(code(&o), 3);
    let err = stderr(&o);
    assert!(err.contains("suite grad failed"));
    let case: Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(case["suite"], "grad");
    assert_eq!(case["game_seed"], 0);

    let o = lqig(&["verify", "--suite", "lp"]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("lp "));
}

#[test]
fn bad_flags_exit_with_one() {
    assert_eq!(code(&lqig(&["solve"])), 1);
    assert_eq!(code(&lqig(&["verify", "--suite", "nope"])), 1);
    assert_eq!(code(&lqig(&["--help"])), 0);
}

#[test]
fn thread_cap_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_lqig"))
        .args(["verify", "--suite", "lp"])
        .env("LQIG_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_lqig"))
        .args(["verify", "--suite", "lp"])
        .env("LQIG_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}
