use std::path::Path;
use std::process::{Command, Output};

use vcopt::optimizer::{solve, Budget, Problem};
use vcopt::topo::{canonical_parking_lot, save_topology};
use vcopt::{Demand, Scenario, SplitLimit, TrafficMode};

fn vcopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vcopt"))
        .args(args)
        .env_remove("VCOPT_TOPOLOGY")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_reports_the_library_optimum() {
    let o = vcopt(&["solve", "--scenario", "vec", "--demand", "2mbps"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let t = canonical_parking_lot();
    let d = Demand::from_mbps(t.lookup("v01").unwrap(), 2.0).unwrap();
    let p = Problem::new(
        vec![d],
        Scenario::VEC,
        SplitLimit::Unlimited,
        TrafficMode::Ft,
    );
    let r = solve(&t, &p, Budget::default()).unwrap();
    let text = stdout(&o);
    assert!(
        text.contains(&format!("{:.3}", r.power.unwrap().tp)),
        "{text}"
    );
}

#[test]
fn csv_placements_match_the_library() {
    let o = vcopt(&["--format", "csv", "solve", "--demand", "12mbps"]);
    assert_eq!(o.status.code(), Some(0));
    let t = canonical_parking_lot();
    let d = Demand::from_mbps(t.lookup("v01").unwrap(), 12.0).unwrap();
    let p = Problem::new(
        vec![d],
        Scenario::VEC,
        SplitLimit::Unlimited,
        TrafficMode::Ft,
    );
    let a = solve(&t, &p, Budget::default())
        .unwrap()
        .assignment
        .unwrap();
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("demand,node,mips"));
    let rows: Vec<(String, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f[0], "0");
            (f[1].to_string(), f[2].parse().unwrap())
        })
        .collect();
    let expected: Vec<(String, f64)> = a.plans[0]
        .placements
        .iter()
        .map(|(&n, &w)| (t.node(n).id.clone(), w))
        .collect();
    assert_eq!(rows, expected);
}

#[test]
fn vehicles_alone_cannot_carry_a_large_full_copy_demand() {
    let o = vcopt(&[
        "solve",
        "--scenario",
        "v",
        "--demand",
        "30mbps",
        "--mode",
        "ft",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn blocked_heuristic_exits_with_infeasible() {
    let o = vcopt(&["heuristic", "--scenario", "v", "--demand", "30mbps"]);
    assert_eq!(o.status.code(), Some(1));
    let o = vcopt(&["heuristic", "--demand", "6mbps", "-v"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("served"), "{}", stdout(&o));
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(vcopt(&["solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        vcopt(&["solve", "--scenario", "x", "--demand", "2mbps"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        vcopt(&["solve", "--demand", "2mbps", "--source", "v99"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        vcopt(&["--topology", "/nonexistent/t.json", "validate"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(vcopt(&[]).status.code(), Some(2));
}

#[test]
fn export_lp_writes_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.lp");
    let o = vcopt(&["export-lp", "--demand", "4mbps", "-o", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("Minimize"));
    assert!(text.trim_end().ends_with("End"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    for args in [
        &["solve", "--demand", "8mbps", "--mode", "pt"][..],
        &["heuristic", "--demand", "16mbps", "-v"],
        &["export-lp", "--demand", "3mbps", "--splits", "2"],
    ] {
        let a = vcopt(args);
        let b = vcopt(args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn topology_comes_from_file_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("t.json");
    save_topology(&canonical_parking_lot(), &file).unwrap();
    let by_flag = vcopt(&["--topology", path(&file), "validate"]);
    assert_eq!(by_flag.status.code(), Some(0));
    assert!(stdout(&by_flag).starts_with("topology ok"));
    let by_env = Command::new(env!("CARGO_BIN_EXE_vcopt"))
        .arg("validate")
        .env("VCOPT_TOPOLOGY", &file)
        .output()
        .unwrap();
    assert_eq!(by_env.stdout, by_flag.stdout);
}

#[test]
fn solver_solution_validates_and_a_foreign_one_does_not() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("s.sol");
    let o = vcopt(&["solve", "--demand", "6mbps", "--solution-out", path(&sol)]);
    assert_eq!(o.status.code(), Some(0));
    let ok = vcopt(&["validate", "--solution", path(&sol), "--demand", "6mbps"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("solution ok"));
    let bad = vcopt(&["validate", "--solution", path(&sol), "--demand", "10mbps"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("violated"));
}

#[test]
fn sweep_file_runs_and_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.json");
    std::fs::write(
        &spec,
        r#"{"kind": "heuristic_gap", "scenarios": ["VEC"], "grid": {"mbps": [2.0, 6.0]}, "engine": "both"}"#,
    )
    .unwrap();
    let o = vcopt(&["--format", "csv", "sweep", path(&spec)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 4);
    assert!(text.starts_with("scenario,engine,mode,S,"));
    let gaps = vcopt(&["sweep", path(&spec), "--gaps"]);
    assert_eq!(gaps.status.code(), Some(0));
    let milp_only = vcopt(&["sweep", path(&spec), "--engine", "milp"]);
    assert_eq!(milp_only.status.code(), Some(2));
}
