use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn stcsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stcsp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const BIT: &str = "var x with alphabet [0..1];\n";

#[test]
fn solve_enumerates_constant_stream() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "zero.stcsp", &format!("{BIT}x == 0;\n"));
    let o = stcsp(&["solve", s(&m), "--enumerate", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "000\n");
}

#[test]
fn unsatisfiable_model_exits_1_with_empty_automaton() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "never.stcsp", &format!("{BIT}x <= 0;\n1 until (x eq 1);\n"));
    let o = stcsp(&["solve", s(&m), "--emit", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let j: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(j["transitions"].as_array().unwrap().len(), 0);
    assert!(j["initial"].is_null());
}

#[test]
fn missionaries_report_shortest_plan() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("mc.stcsp");
    let o = stcsp(&["gen", "mc", "--n", "3", "--b", "2", "--until", "-o", s(&m)]);
    assert_eq!(o.status.code(), Some(0));
    let o = stcsp(&["solve", s(&m), "--stats"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("satisfiable\n"));
    assert!(out.contains("shortest accepting prefix: 11\n"), "{out}");
    let stats: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(stats["nodes_expanded"].as_u64().unwrap() > 0);
}

#[test]
fn parse_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "bad.stcsp", "var x with alphabet [0..1];\nx == ;\n");
    let o = stcsp(&["solve", s(&m)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.stcsp:2:"));
}

#[test]
fn exhausted_budget_exits_2() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("mc.stcsp");
    stcsp(&["gen", "mc", "--n", "3", "--b", "2", "-o", s(&m)]);
    let o = stcsp(&["solve", s(&m), "--node-budget", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("node budget"));
}

#[test]
fn dump_normal_prints_aux_definitions() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "n.stcsp", &format!("{BIT}x == next x;\n"));
    let o = stcsp(&["solve", s(&m), "--dump-normal", "--enumerate", "2"]);
    let out = stdout(&o);
    assert!(out.contains("_aux1"), "{out}");
    assert!(out.ends_with("00\n11\n"), "{out}");
}

#[test]
fn dot_output_projects_labels() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "u.stcsp", &format!("{BIT}1 until (x eq 1);\n"));
    let o = stcsp(&["solve", s(&m), "--emit", "dot", "--project", "x"]);
    let out = stdout(&o);
    assert!(out.starts_with("digraph"));
    assert!(out.contains("doublecircle"));
}

#[test]
fn verify_passes_on_until_example() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "u.stcsp", &format!("{BIT}1 until (x eq 1);\n"));
    let o = stcsp(&["verify", s(&m), "--len", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("PASS"));
}

#[test]
fn verify_reports_witness_for_corrupted_automaton() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "u.stcsp", &format!("{BIT}1 until (x eq 1);\n"));
    let o = stcsp(&["solve", s(&m), "--emit", "json"]);
    let mut j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    j["accepting"] = serde_json::json!([]);
    let a = write(&dir, "broken.json", &j.to_string());
    let o = stcsp(&["verify", s(&m), "--len", "2", "--automaton", s(&a)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "FAIL: 00 is a prefix of a solution but not of the automaton\n");
}

#[test]
fn verify_skips_beyond_cap() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "big.stcsp", "var x with alphabet [0..1000];\nx == x;\n");
    let o = stcsp(&["verify", s(&m), "--len", "3"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).starts_with("SKIPPED"));
}

#[test]
fn grid_generation_is_reproducible() {
    let args = ["gen", "grid", "--n", "4", "--p", "0.5", "--seed", "7", "--start", "1,2", "--end", "4,3"];
    let a = stcsp(&args);
    let b = stcsp(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let other = stcsp(&["gen", "grid", "--n", "4", "--p", "0.5", "--seed", "8", "--start", "1,2", "--end", "4,3"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn gen_rejects_bad_parameters() {
    assert_eq!(stcsp(&["gen", "grid", "--n", "2", "--p", "1", "--end", "3,1"]).status.code(), Some(2));
    assert_eq!(stcsp(&["gen", "mc", "--n", "3", "--b", "1"]).status.code(), Some(2));
    assert_eq!(stcsp(&["gen", "mc", "--n", "3", "--b", "2", "--at", "0"]).status.code(), Some(2));
}

#[test]
fn gen_at_variant_uses_at() {
    let o = stcsp(&["gen", "mc", "--n", "3", "--b", "2", "--at", "11"]);
    assert!(stdout(&o).contains("@ 11"));
}

#[test]
fn unroll_fixed_horizon() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "u.stcsp", &format!("{BIT}first x == 0;\n1 until (x eq 1);\n"));
    let o = stcsp(&["unroll", s(&m), "--horizon", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("\n01\n"), "{}", stdout(&o));
    let o = stcsp(&["unroll", s(&m), "--horizon", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = stcsp(&["unroll", s(&m), "--horizon", "3", "--mode", "count"]);
    assert!(stdout(&o).ends_with("solutions: 3\n"), "{}", stdout(&o));
}

#[test]
fn unroll_increment() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "u.stcsp", &format!("{BIT}first x == 0;\n1 until (x eq 1);\n"));
    let o = stcsp(&["unroll", s(&m), "--increment", "--tmax", "5"]);
    assert!(stdout(&o).starts_with("sat at horizon 2 "));
    let m = write(&dir, "n.stcsp", &format!("{BIT}x <= 0;\n1 until (x eq 1);\n"));
    let o = stcsp(&["unroll", s(&m), "--increment", "--tmax", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("unsat up to horizon 5 "));
}

/// Drops the timing column, which is the only nondeterministic one.
fn without_seconds(csv: &str) -> String {
    csv.lines()
        .map(|l| match l.rsplit_once(',') {
            Some((rest, _)) if !l.starts_with('#') => rest.to_string(),
            _ => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn bench_csv_matches_golden() {
    let dir = TempDir::new().unwrap();
    let suite = write(
        &dir,
        "suite.toml",
        "[[mc]]\nn = [3, 4]\nb = 2\n\n[[grid]]\nn = 2\np = 0.0\nseed = [0, 1, 2]\n",
    );
    let o = stcsp(&["bench", s(&suite), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let golden = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/bench.csv")).unwrap();
    assert_eq!(without_seconds(&stdout(&o)), without_seconds(&golden));
}

#[test]
fn bench_empty_suite_is_header_only() {
    let dir = TempDir::new().unwrap();
    let suite = write(&dir, "empty.toml", "");
    let out = dir.path().join("out.csv");
    let o = stcsp(&["bench", s(&suite), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("# stcsp-bench v1\nid,family,"));
}

#[test]
fn bench_marks_timeouts() {
    let dir = TempDir::new().unwrap();
    let suite = write(&dir, "slow.toml", "[[mc]]\nn = 3\nb = 2\nvariant = \"first-next:17\"\n");
    let o = stcsp(&["bench", s(&suite), "--timeout", "0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let row = stdout(&o).lines().nth(2).unwrap().to_string();
    assert!(row.starts_with("mc-n3-b2-first-next:17,mc,3,2,,,first-next:17,timeout,--,"), "{row}");
    assert!(row.ends_with(",--"));
}

#[test]
fn bench_budget_errors_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    let suite = write(&dir, "s.toml", "[[mc]]\nn = 3\nb = 2\n");
    let o = stcsp(&["bench", s(&suite), "--node-budget", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).lines().nth(2).unwrap().contains(",error,"));
}
