use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use udbargain::instance::{parse_instance, parse_outcome};

const PATH: &str = "nodes 3\nedge 1 2 1 0.5\nedge 2 3 0.6 0.5\n";
const TRIANGLE: &str = "nodes 3\nedge 1 2 1 0.5\nedge 2 3 1 0.5\nedge 1 3 1 0.5\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_udbargain"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn file(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().to_string()))
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
}

#[test]
fn solve_path_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = file(dir.path(), "path.txt", PATH);
    let trace = dir.path().join("trace.csv");
    let o = run(&["solve", "--epsilon", "1e-4", s(&inst_path), "--trace", s(&trace)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(value(&text, "# status"), "SOLVED");
    let inst = parse_instance(PATH).unwrap();
    let out = parse_outcome(&text, &inst).unwrap();
    for (g, want) in out.gamma.iter().zip([0.2, 0.8, 0.0]) {
        assert!((g - want).abs() <= 1e-4);
    }
    let csv = fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,residual"));
    for (t, line) in lines.enumerate() {
        let (a, b) = line.split_once(',').unwrap();
        assert_eq!(a.parse::<usize>().unwrap(), t);
        assert!(b.parse::<f64>().unwrap() >= 0.0);
    }
}

#[test]
fn solve_from_unbalanced_start_iterates() {
    // the pendant edge dominates, so the split must move toward node 1
    let dir = tempfile::tempdir().unwrap();
    let p = file(
        dir.path(),
        "p4.txt",
        "nodes 4\nedge 1 2 0.5 0.5\nedge 2 3 1 0.3\nedge 3 4 0.4 0.5\n",
    );
    let trace = dir.path().join("t.csv");
    let o = run(&["solve", "--epsilon", "1e-6", s(&p), "--trace", s(&trace)]);
    assert_eq!(o.status.code(), Some(0));
    let inst = parse_instance(&fs::read_to_string(&p).unwrap()).unwrap();
    let out = parse_outcome(&stdout(&o), &inst).unwrap();
    let v = run(&["verify", s(&p), s(&dir.path().join("missing"))]);
    assert_eq!(v.status.code(), Some(2));
    let out_path = file(dir.path(), "out.txt", &stdout(&o));
    let v = run(&["verify", "--epsilon", "1e-6", s(&p), s(&out_path)]);
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
    assert_eq!(out.matching.len(), 1);
}

#[test]
fn solve_triangle_is_unstable() {
    let dir = tempfile::tempdir().unwrap();
    let p = file(dir.path(), "tri.txt", TRIANGLE);
    let o = run(&["solve", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("UNSTABLE"));
    let o = run(&["solve", "--backend", "bp", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("STEP1_INCONCLUSIVE"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = file(dir.path(), "path.txt", PATH);
    let bad = file(dir.path(), "bad.txt", "nodes 3\nedge 1 2 x 0.5\n");
    assert_eq!(run(&["solve", "--kappa", "0.7", s(&p)]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--epsilon", "0", s(&p)]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--epsilon", "nan", s(&p)]).status.code(), Some(2));
    let o = run(&["solve", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(run(&["solve", "/nonexistent/x.txt"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    let long: String = std::iter::once("nodes 30\n".to_string())
        .chain((1..30).map(|i| format!("edge {} {} 0.5 0.5\n", i, i + 1)))
        .collect();
    let long = file(dir.path(), "long.txt", &long);
    assert_eq!(run(&["solve", s(&long)]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--backend", "bp", s(&long)]).status.code(), Some(0));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(&["generate", "bipartite", "--left", "5", "--right", "6", "--seed", "42"]);
    let b = run(&["generate", "bipartite", "--left", "5", "--right", "6", "--seed", "42"]);
    assert_eq!(a.stdout, b.stdout);
    let p = file(dir.path(), "bip.txt", &stdout(&a));
    parse_instance(&stdout(&a)).unwrap();
    let x = run(&["solve", "--epsilon", "1e-5", s(&p)]);
    let y = run(&["solve", "--epsilon", "1e-5", "--sequential", s(&p)]);
    assert_eq!(x.status.code(), Some(0));
    assert_eq!(x.stdout, y.stdout);
    for args in [["bp", s(&p)], ["gap", s(&p)]] {
        assert_eq!(run(&args).stdout, run(&args).stdout);
    }
}

#[test]
fn ring_files_verify_as_expected() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("ring.txt");
    let bad = dir.path().join("bad.txt");
    let good = dir.path().join("good.txt");
    let third = (1.0f64 / 3.0).to_string();
    let o = run(&["generate", "ring", "--N", "2", "--r", &third, "--instance", s(&inst), "--outcome", s(&bad)]);
    assert_eq!(o.status.code(), Some(0));
    run(&["generate", "ring", "--N", "2", "--r", &third, "--instance", s(&inst), "--outcome", s(&good), "--balanced"]);
    let ring = parse_instance(&fs::read_to_string(&inst).unwrap()).unwrap();
    assert_eq!((ring.node_count(), ring.edge_count()), (16, 16));
    assert!((ring.weight_bound() - 3.0).abs() < 1e-12);
    parse_outcome(&fs::read_to_string(&bad).unwrap(), &ring).unwrap();

    let v = run(&["verify", s(&inst), s(&bad)]);
    assert_eq!(v.status.code(), Some(1));
    let text = stdout(&v);
    assert!(text.contains("violation 12 13 1\n"));
    assert_eq!(value(&text, "stable"), "no");

    let v = run(&["verify", "--epsilon", "1e-9", s(&inst), s(&good)]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(run(&["check", s(&inst), s(&good)]).status.code(), Some(0));
    assert_eq!(run(&["check", s(&inst), s(&bad)]).status.code(), Some(1));

    let padded = run(&["generate", "ring", "--nodes", "19", "--r", "0.25"]);
    assert_eq!(parse_instance(&stdout(&padded)).unwrap().node_count(), 19);
    assert_eq!(run(&["generate", "ring", "--N", "2", "--r", "0.7"]).status.code(), Some(2));
}

#[test]
fn broken_outcome_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = file(dir.path(), "path.txt", PATH);
    let o = file(dir.path(), "o.txt", "match 1 2\ngamma 1 0.5\ngamma 2 0.4\ngamma 3 0\n");
    assert_eq!(run(&["verify", s(&p), s(&o)]).status.code(), Some(1));
    let o = file(dir.path(), "o2.txt", "match 1 2\ngamma 1 0.5\n");
    assert_eq!(run(&["verify", s(&p), s(&o)]).status.code(), Some(2));
}

#[test]
fn demo_slow_reports_bound() {
    let o = run(&["demo-slow", "--N", "8", "--r", "0.3333333"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# WARNING"));
    let eps: f64 = value(&text, "eps_prime").parse().unwrap();
    assert!((eps - 2f64.powi(-7)).abs() < 1e-6);
    assert_eq!(value(&text, "lower_bound"), "32");
    let first: u64 = value(&text, "first_half_stable").parse().unwrap();
    assert!(first >= 32);
    let step: f64 = value(&text, "max_step_change").parse().unwrap();
    assert!(step <= eps + 1e-9);
}

#[test]
fn bp_and_gap_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = file(dir.path(), "path.txt", PATH);
    let o = run(&["bp", s(&p)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(value(&text, "converged"), "yes");
    assert!(text.contains("match 1 2\n"));
    let g = stdout(&run(&["gap", s(&p)]));
    assert!((value(&g, "g ").parse::<f64>().unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(value(&g, "unique"), "yes");
    let t = file(dir.path(), "tri.txt", TRIANGLE);
    assert_eq!(run(&["bp", s(&t)]).status.code(), Some(1));
}
