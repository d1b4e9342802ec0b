use std::path::Path;
use std::process::{Command, Output};

fn tree_bsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tree-bsm"))
        .args(args)
        .env_remove("TREE_BSM_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn manifest(out: &Path) -> serde_json::Value {
    let path = format!("{}.manifest.json", out.display());
    serde_json::from_str(&std::fs::read_to_string(path).expect("manifest written")).unwrap()
}

#[test]
fn sweep_matches_golden_file() {
    let o = tree_bsm(&["sweep", "--protocol", "dynamic", "--b", "2,2", "--eta", "0.6:1:5", "--eps", "0:1e-3:2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), include_str!("golden/sweep_dynamic_2_2.csv"));
}

#[test]
fn sweep_with_output_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = tree_bsm(&[
        "sweep", "--protocol", "static", "--b", "2", "--eta", "0.9", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let pr: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((pr - 0.492075).abs() < 1e-12, "{row}");
    let m = manifest(&out);
    assert_eq!(m["subcommand"], "sweep");
    assert!(m["version"].is_string());
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&tree_bsm(&["no-such-command"])), 1);
    assert_eq!(code(&tree_bsm(&["sweep", "--protocol", "static", "--b", "2,0"])), 1);
    assert_eq!(code(&tree_bsm(&["sweep", "--protocol", "sideways", "--b", "2"])), 1);
    assert_eq!(code(&tree_bsm(&["validate", "--protocol", "static", "--b", "2", "--eta", "0.9", "--samples", "10"])), 1);
    let o = tree_bsm(&["sweep", "--protocol", "static", "--b", "2", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&tree_bsm(&["--help"])), 0);
}

#[test]
fn unreachable_target_exits_with_two() {
    let o = tree_bsm(&["threshold", "--protocol", "static", "--target", "1.0"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = tree_bsm(&["sweep", "--protocol", "loss-only", "--b", "2,2"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn threshold_reports_json() {
    let o = tree_bsm(&["threshold", "--protocol", "dynamic", "--max-depth", "2", "--max-branch", "8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let eta = v["report"]["eta_star"].as_f64().unwrap();
    assert!(eta > 0.5 && eta < 1.0, "{v}");
}

#[test]
fn validation_passes_and_catches_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = tree_bsm(&[
        "validate", "--protocol", "static", "--b", "2", "--eta", "0.9", "--samples", "200000",
        "--seed", "5", "--workers", "2", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["seed"], 5);
    assert_eq!(m["workers"], 2);

    let o = tree_bsm(&[
        "validate", "--protocol", "static", "--b", "2,2", "--eta", "0.6", "--samples", "100000",
        "--seed", "5", "--mc-protocol", "dynamic",
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn simulation_is_reproducible() {
    let args = ["simulate", "--protocol", "dynamic", "--b", "3,2", "--eta", "0.8", "--eps", "1e-3",
        "--samples", "20000", "--seed", "9", "--workers", "3"];
    let counters = |o: &Output| {
        let v: serde_json::Value = serde_json::from_str(&stdout(o)).unwrap();
        v["counters"].clone()
    };
    let (a, b) = (tree_bsm(&args), tree_bsm(&args));
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(counters(&a), counters(&b));
}

#[test]
fn generation_is_verified() {
    let dir = tempfile::tempdir().unwrap();
    let emit = dir.path().join("seq.txt");
    let o = tree_bsm(&["verify-generation", "--b", "2,2", "--emit", emit.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("PASS (2,2): 27 instructions"), "{}", stderr(&o));
    let text = std::fs::read_to_string(emit).unwrap();
    assert!(text.starts_with("# matter"));
}

#[test]
fn small_static_search_has_no_error_correction() {
    let o = tree_bsm(&[
        "search", "--protocol", "static", "--eta", "0.95", "--eps", "1e-5", "--max-n", "100", "--all",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let mut rows = out.lines();
    assert_eq!(rows.next().unwrap(), "b,n,protocol,eta,eps,pr_complete,err_complete,loss_tolerant,error_correcting");
    let rows: Vec<_> = rows.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.ends_with(",false")), "{out}");
}

#[test]
fn dynamic_search_flags_the_two_level_tree() {
    let o = tree_bsm(&[
        "search", "--protocol", "dynamic", "--eta", "0.95", "--eps", "1e-5", "--max-depth", "3",
        "--max-branch", "15", "--max-n", "700", "--all",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let row = out.lines().find(|r| r.starts_with("\"15,15,2\",")).expect("row present");
    assert!(row.ends_with(",true"), "{row}");
}
