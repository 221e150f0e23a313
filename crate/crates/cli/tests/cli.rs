use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use mnm_core::eval::Dataset;
use mnm_core::load_tree;
use mnm_core::synth::synthetic_flows;

const ATTACKS: [&str; 3] = ["DDoS-LOIC-HTTP", "DDoS-LOIC-UDP", "DDoS-HOIC"];

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn demo() -> String {
    fixture("demo_tree.json").display().to_string()
}

fn ddos() -> String {
    fixture("ddos_tree.json").display().to_string()
}

fn mnm(args: &[&str], stdin: Option<&[u8]>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mnm"));
    cmd.args(args).env_remove("MNM_BUDGET").stdout(Stdio::piped()).stderr(Stdio::piped());
    cmd.stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() });
    let mut child = cmd.spawn().expect("binary runs");
    if let Some(data) = stdin {
        child.stdin.take().unwrap().write_all(data).unwrap();
    }
    child.wait_with_output().unwrap()
}

fn ok(args: &[&str], stdin: Option<&[u8]>) -> Vec<u8> {
    let out = mnm(args, stdin);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn text(bytes: Vec<u8>) -> String {
    String::from_utf8(bytes).unwrap()
}

/// `rules | discretize | compile | primes | explain`, each stage fed by the previous one.
fn piped(tree: &str, discretize: &[&str], label: &str, explain: &[&str]) -> Vec<u8> {
    let rules = ok(&["rules", "--tree", tree], None);
    let mut d = vec!["discretize"];
    d.extend_from_slice(discretize);
    let space = ok(&d, Some(&rules));
    let dnf = ok(&["compile", "--label", label], Some(&space));
    let primes = ok(&["primes", "--verify"], Some(&dnf));
    let mut e = vec!["explain"];
    e.extend_from_slice(explain);
    ok(&e, Some(&primes))
}

#[test]
fn demo_primes_report() {
    let out = text(ok(&["primes", "--tree", &demo(), "--label", "1", "--format", "text"], None));
    let positive: Vec<&str> = out.lines().skip(2).take_while(|l| !l.is_empty()).collect();
    assert_eq!(positive.len(), 2, "{out}");
    assert!(positive[0].starts_with("τ1") && positive[0].contains("y1") && positive[0].ends_with("--10--"));
    assert!(positive[1].starts_with("τ2") && positive[1].contains("x2") && positive[1].ends_with("01----"));
    assert!(out.contains("1 primes for 0 (negative side)"));
    assert!(out.contains("x1 & y2"));
}

#[test]
fn pipe_equals_monolithic_explain() {
    for flow in ["X=7,Y=0,Z=0", "X=1,Y=9,Z=0", "X=2,Y=3,Z=5", "X=7,Y=5,Z=6"] {
        let a = piped(&demo(), &[], "1", &["--flow", flow]);
        let b = ok(&["explain", "--tree", &demo(), "--label", "1", "--flow", flow], None);
        assert_eq!(a, b, "flow {flow}");
        let aj = piped(&demo(), &[], "1", &["--flow", flow, "--format", "json"]);
        let bj = ok(&["explain", "--tree", &demo(), "--label", "1", "--flow", flow, "--format", "json"], None);
        assert_eq!(aj, bj);
    }
}

#[test]
fn pipe_equals_monolithic_on_ddos_csv() {
    let csv = fixture("sample_flow.csv").display().to_string();
    let schema = fixture("cic_aliases.json").display().to_string();
    let args = ["--flows", csv.as_str(), "--schema", schema.as_str()];
    let a = piped(&ddos(), &[], "DDoS-HOIC", &args);
    let tree = ddos();
    let mut mono = vec!["explain", "--tree", tree.as_str(), "--label", "DDoS-HOIC"];
    mono.extend_from_slice(&args);
    let b = ok(&mono, None);
    assert_eq!(a, b);
    let s = text(a);
    assert!(s.starts_with("decision: "), "{s}");
}

#[test]
fn explanation_json_records() {
    let out = ok(&["explain", "--tree", &demo(), "--label", "1", "--flow", "X=7,Y=5,Z=0", "--format", "json"], None);
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let rec = &v[0];
    assert_eq!(rec["decision"], "1");
    assert_eq!(rec["side"], "positive");
    assert_eq!(rec["encoding"], "010110");
    assert_eq!(rec["matches"].as_array().unwrap().len(), 1);
    assert_eq!(rec["matches"][0]["tau"], 2);
    assert_eq!(rec["matches"][0]["trits"][0], "01----");
    assert_eq!(rec["matches"][0]["text"], "if X is larger than 2 then 1");
}

#[test]
fn negative_decision_is_explained_by_negative_primes() {
    let s = text(ok(&["explain", "--tree", &demo(), "--label", "1", "--flow", "X=1,Y=9,Z=0"], None));
    assert_eq!(s, "decision: 0 (negative side, 0)\nencoding: 100110\nτ1 1001--: if X is at most 2 and Y is larger than 3 then 0\n");
}

fn write_flows(dir: &Path, tree_path: &str, n: usize) -> PathBuf {
    let tree = load_tree::<f64>(&std::fs::read_to_string(tree_path).unwrap()).unwrap();
    let data: Dataset<f64> = synthetic_flows(&tree, n, 42).unwrap();
    let path = dir.join("flows.csv");
    data.write_csv(std::fs::File::create(&path).unwrap(), "Label").unwrap();
    path
}

#[test]
fn evaluate_tree_labelled_flows() {
    let dir = tempfile::tempdir().unwrap();
    let flows = write_flows(dir.path(), &ddos(), 3000);
    let flows = flows.display().to_string();
    for target in ATTACKS {
        let s = text(ok(&["evaluate", "--tree", &ddos(), "--label", target, "--flows", &flows], None));
        let row = s.lines().find(|l| l.starts_with(target)).unwrap_or_else(|| panic!("{s}"));
        let cells: Vec<&str> = row.split_whitespace().collect();
        assert_eq!(&cells[1..], ["100.00%", "0.00%", "1.0000", "1.0000", "1.0000"], "{s}");
        assert!(s.contains("agreement with tree 1.0000 (0 disagreements)"));
    }
    let j = ok(&["evaluate", "--tree", &demo(), "--label", "1", "--flows", &write_flows(dir.path(), &demo(), 200).display().to_string(), "--format", "json"], None);
    let v: serde_json::Value = serde_json::from_slice(&j).unwrap();
    assert_eq!(v["agreement"], 1.0);
    assert_eq!(v["classes"][0]["f1"], 1.0);
}

#[test]
fn stage_artifacts_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).display().to_string();
    ok(&["rules", "--tree", &demo(), "-o", &p("r.json")], None);
    ok(&["discretize", "--rules", &p("r.json"), "-o", &p("s.json")], None);
    ok(&["compile", "--space", &p("s.json"), "--label", "1", "-o", &p("d.json")], None);
    let stdout = ok(&["primes", "--space", &p("d.json"), "--verify", "-o", &p("p.json")], None);
    assert!(stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("p.json")).unwrap()).unwrap();
    assert_eq!(doc["stage"], "primes");
    assert_eq!(doc["primes"]["verified"], true);
    assert_eq!(doc["primes"]["positive"]["primes"].as_array().unwrap().len(), 2);
    let report = text(ok(&["report", "--primes", &p("p.json"), "--side", "positive"], None));
    assert!(report.starts_with("2 primes for 1 (positive side)"));

    // Same inputs, same bytes.
    ok(&["primes", "--space", &p("d.json"), "--verify", "-o", &p("p2.json")], None);
    assert_eq!(std::fs::read(p("p.json")).unwrap(), std::fs::read(p("p2.json")).unwrap());
}

#[test]
fn tampered_primes_fail_verification() {
    let art = ok(&["primes", "--tree", &demo(), "--label", "1"], None);
    let mut v: serde_json::Value = serde_json::from_slice(&art).unwrap();
    v["primes"]["positive"]["primes"].as_array_mut().unwrap().remove(0);
    let tampered = serde_json::to_vec(&v).unwrap();
    let out = mnm(&["explain", "--flow", "X=7,Y=0,Z=0"], Some(&tampered));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("do not cover"));
    let out = mnm(&["report"], Some(&tampered));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ddos_discretization_with_attack_labels() {
    let tree = ddos();
    let mut args = vec!["discretize", "--tree", tree.as_str(), "--format", "text"];
    for a in ATTACKS {
        args.extend(["--label", a]);
    }
    let s = text(ok(&args, None));
    assert!(s.starts_with("16 features, 47 variables"), "{s}");
    assert!(s.contains("d1-3=(-inf, 5440.5]"));
    let unmerged = text(ok(&["discretize", "--tree", &ddos(), "--no-merge", "--format", "text"], None));
    assert!(unmerged.contains("10450944 feasible points"), "{unmerged}");
}

#[test]
fn combine_adds_foreign_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let other = dir.path().join("other.json");
    std::fs::write(&other, r#"{"features":[{"name":"X","thresholds":[0.5]},{"name":"W","thresholds":[1.0]}]}"#).unwrap();
    let s = text(ok(
        &["discretize", "--tree", &demo(), "--combine", &other.display().to_string(), "--no-merge", "--format", "text"],
        None,
    ));
    assert!(s.contains("X: x1=(-inf, 0.5] x2=(0.5, 2] x3=(2, +inf)"), "{s}");
    assert!(s.contains("W: "));
    // Merging against the demo rules removes the foreign X split again but keeps W's.
    let merged = text(ok(&["discretize", "--tree", &demo(), "--combine", &other.display().to_string(), "--format", "text"], None));
    assert!(merged.contains("X: x1-2=(-inf, 2] x3=(2, +inf)"), "{merged}");
}

#[test]
fn minimal_cover_report_keeps_tau_ids() {
    let s = text(ok(&["report", "--tree", &demo(), "--label", "1", "--cover"], None));
    assert!(s.contains("τ1") && s.contains("τ2"), "{s}");
    let j = ok(&["report", "--tree", &ddos(), "--label", "DDoS-LOIC-UDP", "--cover", "--format", "json", "--side", "positive"], None);
    let v: serde_json::Value = serde_json::from_slice(&j).unwrap();
    assert_eq!(v["side"], "positive");
    assert!(!v["primes"].as_array().unwrap().is_empty());
}

#[test]
fn thread_count_does_not_change_output() {
    let one = ok(&["primes", "--tree", &ddos(), "--label", "DDoS-HOIC", "--heuristic", "--threads", "1"], None);
    let four = ok(&["primes", "--tree", &ddos(), "--label", "DDoS-HOIC", "--heuristic", "--threads", "4"], None);
    assert_eq!(one, four);
}

#[test]
fn exit_codes() {
    assert_eq!(mnm(&["bogus"], None).status.code(), Some(1));
    assert_eq!(mnm(&["rules", "--nope"], None).status.code(), Some(1));
    assert_eq!(mnm(&["--help"], None).status.code(), Some(0));
    assert_eq!(mnm(&["rules", "--tree", "/no/such/tree.json"], None).status.code(), Some(1));
    let missing = mnm(&["rules", "--tree", "/no/such/tree.json"], None);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/tree.json"));
    assert_eq!(mnm(&["explain", "--tree", &demo(), "--label", "1", "--flow", "X=1"], None).status.code(), Some(1));
    assert_eq!(mnm(&["explain", "--tree", &demo(), "--label", "1", "--flow", "X=a,Y=1,Z=1"], None).status.code(), Some(1));
    assert_eq!(mnm(&["compile", "--label", "1"], Some(b"not json")).status.code(), Some(1));
    assert_eq!(mnm(&["primes", "--tree", &demo(), "--label", "nope"], None).status.code(), Some(1));
    assert_eq!(mnm(&["primes", "--tree", &demo(), "--label", "1", "--budget", "0"], None).status.code(), Some(1));

    let over = mnm(&["primes", "--tree", &ddos(), "--label", "DDoS-HOIC", "--budget", "1000"], None);
    assert_eq!(over.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&over.stderr).contains("capacity"));
    let env = Command::new(env!("CARGO_BIN_EXE_mnm"))
        .args(["primes", "--tree", &ddos(), "--label", "DDoS-HOIC"])
        .env("MNM_BUDGET", "1000")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(2));
    // The heuristic needs no enumeration of the space, only a verifying pass.
    assert_eq!(mnm(&["primes", "--tree", &ddos(), "--label", "DDoS-HOIC", "--heuristic", "--budget", "1000"], None).status.code(), Some(0));
}
