use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn graph_file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], graph: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_catgraph"));
    cmd.env_remove("CATGRAPH_SEED");
    let mut args: Vec<&str> = args.to_vec();
    let graph = graph.to_str().unwrap();
    args.insert(1, graph);
    cmd.args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

const PATH3: &str = "3 2\n0 1\n1 2\n";

#[test]
fn path_graph_examples() {
    let dir = TempDir::new().unwrap();
    let g = graph_file(&dir, "path.txt", PATH3);
    for algo in ["det", "rand", "revertible"] {
        let out = run(&["connect", "0", "2", "--algo", algo, "--verify", "--json"], &g);
        assert_eq!(out.status.code(), Some(0), "{algo}");
        let v = json(&out);
        assert_eq!(v["schema"], 1);
        assert_eq!(v["verdict"], "path");
        assert_eq!(v["verified"], true);
        assert_eq!(v["metrics"]["tape_restored"], true);
    }
    let out = run(&["connect", "2", "0", "--verify", "--json"], &g);
    assert_eq!(json(&out)["verdict"], "no-path");
}

#[test]
fn rand_never_claims_a_missing_path() {
    let dir = TempDir::new().unwrap();
    let g = graph_file(&dir, "path.txt", PATH3);
    let out = run(&["connect", "2", "0", "--algo", "rand", "--trials", "200", "--parallel", "--json"], &g);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdicts"]["path"], 0);
    assert_eq!(v["all_tapes_restored"], true);
}

#[test]
fn replay_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let g = graph_file(&dir, "cycle.txt", "4 4\n0 1\n1 2\n2 3\n3 0\n");
    let args = ["connect", "0", "3", "--algo", "rand", "--seed", "7", "--json", "--no-wall-time"];
    let a = run(&args, &g);
    let b = run(&args, &g);
    assert_eq!(a.stdout, b.stdout);
    let args = ["walk", "0", "2", "--steps", "3", "--counters", "--json", "--no-wall-time"];
    assert_eq!(run(&args, &g).stdout, run(&args, &g).stdout);
}

#[test]
fn grid_dag_walk_estimate() {
    let dir = TempDir::new().unwrap();
    let g = graph_file(
        &dir,
        "grid.txt",
        "8 12\n0 1\n0 2\n1 3\n1 4\n2 4\n2 5\n3 6\n3 7\n4 6\n4 7\n5 6\n5 7\n",
    );
    let out = run(&["walk", "0", "7", "--dag", "--eps", "0.1", "--verify", "--json"], &g);
    assert_eq!(out.status.code(), Some(0));
    let rho = json(&out)["rho"].as_f64().unwrap();
    assert!((0.4..=0.6).contains(&rho), "rho {rho}");
}

#[test]
fn zero_step_walk_from_target() {
    let dir = TempDir::new().unwrap();
    let g = graph_file(&dir, "path.txt", PATH3);
    let out = run(&["walk", "1", "1", "--steps", "0", "--json"], &g);
    assert_eq!(json(&out)["rho"], 1.0);
    let out = run(&["walk", "0", "1", "--steps", "0", "--json"], &g);
    assert_eq!(json(&out)["rho"], 0.0);
}

#[test]
fn stationary_estimates() {
    let dir = TempDir::new().unwrap();
    let cycle = graph_file(&dir, "cycle.txt", "4 4\n0 1\n1 2\n2 3\n3 0\n");
    let out = run(
        &["stationary", "0", "--mix-time", "1", "--delta", "0.05", "--verify", "--json"],
        &cycle,
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rho = v["rho"].as_f64().unwrap();
    assert!((0.2..=0.3).contains(&rho), "rho {rho}");
    assert_eq!(v["in_band_reversible"], false);
    assert!(v["walk_length"].as_u64().unwrap() > 0);

    let single = graph_file(&dir, "loop.txt", "1 1\n0 0\n");
    let out = run(&["stationary", "0", "--mix-time", "3", "--json"], &single);
    assert_eq!(json(&out)["rho"], 1.0);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let g = graph_file(&dir, "path.txt", PATH3);
    assert_eq!(run(&["connect", "0", "9"], &g).status.code(), Some(2));
    let bad = graph_file(&dir, "bad.txt", "3 5\n0 1\n");
    assert_eq!(run(&["connect", "0", "1"], &bad).status.code(), Some(2));
    let cycle = graph_file(&dir, "cycle.txt", "2 2\n0 1\n1 0\n");
    assert_eq!(run(&["walk", "0", "1", "--dag"], &cycle).status.code(), Some(2));
    assert_eq!(run(&["walk", "0", "1"], &cycle).status.code(), Some(2));
    assert_eq!(run(&["stationary", "0", "--mix-time", "1"], &g).status.code(), Some(2));
}
