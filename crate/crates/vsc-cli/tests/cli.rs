//! End-to-end tests driving the built binary.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn vsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vsc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus/standard.jsonl")
}

#[test]
fn reduce_reports_counts_and_status() {
    let out = vsc(&["reduce", "(\\x.x x)(\\z.z)", "--strategy", "o", "--fuel", "100", "--json"]);
    let j = stdout_json(&out);
    assert_eq!(j["status"], "normal_form");
    assert_eq!(j["counts"]["m"], 2);
    assert_eq!(j["counts"]["e_lambda"], 2);
    assert_eq!(j["counts"]["e_var"], 0);
    assert_eq!(j["steps"][0]["kind"], "m");
    // The trace ends at the identity.
    let last = j["steps"].as_array().unwrap().last().unwrap();
    assert_eq!(last["term"], "\\z.z");
}

#[test]
fn reduce_detects_cycles_and_abbreviations() {
    let out = vsc(&["reduce", "OMEGA", "--json"]);
    let j = stdout_json(&out);
    assert!(j["status"].get("cycle").is_some(), "status: {}", j["status"]);

    let out = vsc(&["reduce", "I DELTA", "--json"]);
    let j = stdout_json(&out);
    assert_eq!(j["status"], "normal_form");
}

#[test]
fn reduce_strategies_differ_under_abstractions() {
    let out = vsc(&["reduce", "\\x.(I I)", "--strategy", "o", "--json"]);
    let j = stdout_json(&out);
    assert_eq!(j["steps"].as_array().unwrap().len(), 0);
    let out = vsc(&["reduce", "\\x.(I I)", "--strategy", "s", "--json"]);
    let j = stdout_json(&out);
    assert_eq!(j["counts"]["m"], 1);
}

#[test]
fn classify_prints_flags() {
    let out = vsc(&["classify", "x[x<-y (\\x.x)] y"]);
    let j = stdout_json(&out);
    assert_eq!(j["inert"], true);
    assert_eq!(j["fireball"], true);
    assert_eq!(j["value"], false);
}

#[test]
fn type_prints_bound_check() {
    let out = vsc(&["type", "(\\x.x x) I", "--mode", "open"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("bound: 2*2+0 == 4: OK"), "got:\n{text}");

    let out = vsc(&["type", "\\x.(I I)", "--mode", "solving", "--json"]);
    let j = stdout_json(&out);
    assert_eq!(j["bound"]["holds"], true);
    assert_eq!(j["sizes"]["msize"], 4);
    assert_eq!(j["bound"]["m_steps"], 1);
}

#[test]
fn type_rejects_divergent_terms() {
    let out = vsc(&["type", "OMEGA", "--mode", "open", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let j: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(j["result"], "none");
}

#[test]
fn check_derivation_roundtrips_inferred_output() {
    let out = vsc(&["type", "(\\x.x x) I", "--mode", "open", "--json"]);
    let j = stdout_json(&out);
    let derivation = j["derivation"].to_string();

    let mut child = Command::new(env!("CARGO_BIN_EXE_vsc"))
        .args(["check-derivation", "-", "--json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(derivation.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let j: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(j["ok"], true);
    assert_eq!(j["sizes"]["msize"], 4);

    // A corrupted derivation is rejected with exit code 1.
    let bad = derivation.replace("x x", "x");
    let mut child = Command::new(env!("CARGO_BIN_EXE_vsc"))
        .args(["check-derivation", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.as_mut().unwrap().write_all(bad.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_reports_verdicts() {
    let out = vsc(&["solve", "\\x.OMEGA", "--json"]);
    let j = stdout_json(&out);
    assert_eq!(j["scrutable"]["verdict"], "yes");
    assert_eq!(j["solvable"]["verdict"], "no");
}

#[test]
fn sigma_and_equiv_commands() {
    let out = vsc(&["sigma-check", "((\\x.y) z) w", "--rule", "sigma1"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "true");

    let out = vsc(&["sigma-check", "y z", "--rule", "sigma1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = vsc(&["equiv", "z[x<-z z][y<-w w]", "z[y<-w w][x<-z z]"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "true");
    let out = vsc(&["equiv", "x[x<-y]", "y"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "false");
}

#[test]
fn parse_errors_exit_with_usage_code() {
    let out = vsc(&["reduce", "(\\x."]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("syntax error"));
}

#[test]
fn shipped_corpus_passes() {
    let path = corpus_path();
    let out = vsc(&["corpus", path.to_str().unwrap(), "--fuel", "1000"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "corpus failed:\n{text}");
    assert!(text.contains("0 failed"), "report:\n{text}");
    assert!(text.lines().filter(|l| l.starts_with("ok ")).count() >= 15);
}

#[test]
fn corpus_negative_control_fails() {
    let dir = std::env::temp_dir();
    let path = dir.join("vsc-negative-corpus.jsonl");
    std::fs::write(
        &path,
        r#"{"name": "wrong", "term": "OMEGA", "expected": {"solvable": true}}"#,
    )
    .unwrap();
    let out = vsc(&["corpus", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL wrong"), "report:\n{text}");

    // An empty corpus passes with an empty report.
    let path = dir.join("vsc-empty-corpus.jsonl");
    std::fs::write(&path, "# nothing here\n").unwrap();
    let out = vsc(&["corpus", path.to_str().unwrap()]);
    assert!(out.status.success());
}

#[test]
fn all_strategies_are_accepted() {
    for strategy in ["o", "olam", "s", "slam", "vsc", "vsclam", "betav"] {
        let out = vsc(&["reduce", "(\\x.x) (\\z.z)", "--strategy", strategy, "--json"]);
        let j = stdout_json(&out);
        assert_eq!(j["status"], "normal_form", "strategy {strategy}");
    }
    // The glue flag combines with the open and full closures only.
    let out = vsc(&["reduce", "x", "--strategy", "s", "--glue"]);
    assert_eq!(out.status.code(), Some(2));
    let out = vsc(&["reduce", "x", "--strategy", "betav", "--glue"]);
    assert_eq!(out.status.code(), Some(2));
}
