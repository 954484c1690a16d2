mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use delegate_rla::model::{expand_cvrs, load_election, write_cvrs};

use common::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_delegate-rla"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_example1_cvrs(dir: &Path) -> PathBuf {
    let profile = example1();
    let path = dir.join("cvrs.csv");
    write_cvrs(&expand_cvrs(&profile), profile.roster(), &path).unwrap();
    path
}

#[test]
fn tabulate_prints_allocation() {
    let e1 = data("example1.json");
    let out = run(&["tabulate", path_str(&e1)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("Ann") && text.contains("Bob"));

    let out = run(&["--format", "json", "tabulate", path_str(&e1)]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());
    assert!(stdout(&out).contains('4'));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&run(&["tabulate", path_str(&missing)])), 2);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"candidates":["A"],"threshold":"2","delegates":1,"style":"irv","ballots":[]}"#).unwrap();
    let out = run(&["tabulate", path_str(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());

    assert_eq!(code(&run(&["generate", path_str(&data("example1.json")), "--alpha", "1.5"])), 2);
}

#[test]
fn blank_only_election_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("blank.json");
    fs::write(
        &path,
        r#"{"candidates":["A","B"],"threshold":"15/100","delegates":3,"style":"irv","ballots":[{"ranking":[],"count":40}]}"#,
    )
    .unwrap();
    assert_eq!(code(&run(&["tabulate", path_str(&path)])), 3);
    assert_eq!(code(&run(&["generate", path_str(&path)])), 3);
}

#[test]
fn generate_writes_a_spec_and_full_count_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let out =
        run(&["generate", path_str(&data("example1.json")), "--level", "3", "--seed", "1", "-o", path_str(&spec)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&spec).unwrap()).unwrap();
    assert_eq!(v["assertions"].as_array().unwrap().len(), 6);

    let out = run(&["generate", path_str(&data("ri_like.json")), "--seed", "1"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn output_is_deterministic_for_a_seed() {
    let args = ["--format", "json", "generate", "--level", "2", "--seed", "17"];
    let e2 = data("example2.json");
    let mut a = args.to_vec();
    a.push(path_str(&e2));
    let first = run(&a);
    let second = run(&a);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    serde_json::from_slice::<serde_json::Value>(&first.stdout).unwrap();
}

#[test]
fn estimate_table_covers_every_level() {
    let e1 = data("example1.json");
    let ri = data("ri_like.json");
    let out = run(&["estimate", path_str(&e1), path_str(&ri), "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("L1 ASN") && text.contains("L3 time"));
    assert!(text.contains("--"));

    let out = run(&["--format", "json", "estimate", path_str(&e1), "--seed", "3"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!v.is_null());
}

#[test]
fn seed_is_reported_when_not_given() {
    let out = run(&["generate", path_str(&data("example1.json"))]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn audit_flow_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = d.join("spec.json");
    let manifest = d.join("manifest.csv");
    let state = d.join("state.json");
    let next = d.join("next.csv");
    let cvrs = write_example1_cvrs(d);
    let e1 = data("example1.json");

    assert_eq!(code(&run(&["generate", path_str(&e1), "--seed", "9", "-o", path_str(&spec)])), 0);
    let init = run(&[
        "audit",
        "init",
        "--spec",
        path_str(&spec),
        "--cvrs",
        path_str(&cvrs),
        "--manifest",
        path_str(&manifest),
        "--state",
        path_str(&state),
    ]);
    assert_eq!(code(&init), 0, "{}", String::from_utf8_lossy(&init.stderr));

    // Audit only the first ten draws so the round cannot confirm yet.
    let full = fs::read_to_string(&manifest).unwrap();
    let head: Vec<&str> = full.lines().take(11).collect();
    fs::write(&manifest, head.join("\n") + "\n").unwrap();
    let round = |m: &Path| {
        run(&[
            "audit",
            "round",
            "--spec",
            path_str(&spec),
            "--cvrs",
            path_str(&cvrs),
            "--manifest",
            path_str(m),
            "--interpretations",
            path_str(&cvrs),
            "--state",
            path_str(&state),
            "--next-manifest",
            path_str(&next),
        ])
    };
    let first = round(&manifest);
    assert_eq!(code(&first), 5, "{}", String::from_utf8_lossy(&first.stderr));
    assert!(next.exists());

    let second = round(&next.clone());
    assert_eq!(code(&second), 0, "{}", String::from_utf8_lossy(&second.stderr));

    // Replaying an already-audited manifest is rejected as an input error.
    assert_eq!(code(&round(&manifest)), 2);

    let text = fs::read_to_string(&state).unwrap();
    fs::write(&state, text.replacen("\"codes\": \"", "\"codes\": \"2", 1)).unwrap();
    assert_eq!(code(&round(&next)), 2);
}

#[test]
fn audit_init_refuses_full_count_specs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ri = data("ri_like.json");
    let spec = d.join("spec.json");
    assert_eq!(code(&run(&["generate", path_str(&ri), "--seed", "1", "-o", path_str(&spec)])), 4);
    let profile = load_election(&ri).unwrap();
    let cvrs = d.join("cvrs.csv");
    write_cvrs(&expand_cvrs(&profile), profile.roster(), &cvrs).unwrap();
    let out = run(&[
        "audit",
        "init",
        "--spec",
        path_str(&spec),
        "--cvrs",
        path_str(&cvrs),
        "--manifest",
        path_str(&d.join("m.csv")),
        "--state",
        path_str(&d.join("s.json")),
    ]);
    assert_eq!(code(&out), 4);
}
