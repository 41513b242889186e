use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn qmachine(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_qmachine")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn specs() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("chi.sx", "(chi-pos (var 0))"),
        ("band.sx", "(chi-pos (mul (sub (add (var 0) (rat 1 1)) (var 1)) (sub (var 1) (var 0))))"),
        ("succ.sx", "(add (var 0) (rat 1 1))"),
        ("rel.sx", "(tail (var 0) (add (var 0) (rat 1 1)))"),
        ("prob.sx", "(prob (mass 1 2 (var 0)) (mass 1 2 (add (var 0) (rat 1 1))))"),
        ("bad.sx", "(add (var 0"),
        ("badmass.sx", "(prob (mass 1 2 (var 0)) (mass 1 3 (var 0)))"),
    ] {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn assert_run(args: &[&str], code: i32, stdout: &str) {
    let run = qmachine(args);
    assert_eq!((run.code, run.stdout.as_str()), (code, stdout), "{args:?}\nstderr: {}", run.stderr);
    let again = qmachine(args);
    assert_eq!(again.stdout, run.stdout, "output differs across runs");
}

#[test]
fn eval_and_domain() {
    let d = specs();
    let chi = path(&d, "chi.sx");
    assert_run(&["eval", "--spec", &chi, "--x", "1", "--accuracy", "2^-10"], 0, "r=1 eps=1/1024\n");
    assert_run(
        &["eval", "--spec", &chi, "--x", "0", "--accuracy", "2^-10", "--fuel", "25"],
        1,
        "no-convergence steps=25 all_infinite=true\n",
    );
    assert_run(&["domain", "--spec", &chi, "--x", "1"], 0, "arg=0 lo=1/2 hi=3/2\n");
    assert_run(&["domain", "--spec", &chi, "--x", "-1", "--fuel", "10"], 1, "no-convergence steps=10 all_infinite=true\n");
    let band = path(&d, "band.sx");
    // at (0, 1/2) the factors are 1/2 ± 3η and 1/2 ± 2η, so the product is off by
    // at most 5η/2 + 6η²; the first η = 2^-n bringing that under 2^-10 is 2^-12
    assert_run(
        &["eval", "--spec", &band, "--x", "0", "--y", "1/2", "--accuracy", "1/1024"],
        0,
        "r=1 eps=5123/8388608\n",
    );
    let succ = path(&d, "succ.sx");
    assert_run(&["eval", "--spec", &succ, "--x", "-3/4", "--accuracy", "1/100"], 0, "r=1/4 eps=1/128\n");
}

#[test]
fn relations() {
    let d = specs();
    let rel = path(&d, "rel.sx");
    assert_run(
        &["enumerate", "--spec", &rel, "--x", "0", "--accuracy", "1/8", "--max-index", "2"],
        0,
        "index=0 r=0 eps=1/8\nindex=1 r=1 eps=1/8\nindex=2 r=1 eps=1/8\n",
    );
    let member = |y: &str| ["member", "--spec", &rel, "--x", "0", "--y", y, "--accuracy", "2^-10", "--max-index", "10"].map(String::from);
    assert_run(&member("1").each_ref().map(String::as_str), 0, "found index=1\n");
    assert_run(&member("1/2").each_ref().map(String::as_str), 1, "exhausted max_index=10\n");
    // a unary expression is the graph of a function
    let succ = path(&d, "succ.sx");
    assert_run(
        &["member", "--spec", &succ, "--x", "2", "--y", "3", "--accuracy", "1/16", "--max-index", "0"],
        0,
        "found index=0\n",
    );
}

#[test]
fn probabilistic() {
    let d = specs();
    let prob = path(&d, "prob.sx");
    assert_run(&["mass", "--spec", &prob, "--x", "0", "--y", "0", "--accuracy", "2^-6"], 0, "lower=1/2 unknown=0\n");
    assert_run(&["mass", "--spec", &prob, "--x", "0", "--y", "5", "--accuracy", "2^-6"], 0, "lower=0 unknown=0\n");
    let sample = qmachine(&["sample", "--spec", &prob, "--x", "0", "--accuracy", "2^-8", "--seed", "3", "--n", "20"]);
    assert_eq!(sample.code, 0);
    let lines: Vec<&str> = sample.stdout.lines().collect();
    assert_eq!(lines.len(), 20);
    for (k, line) in lines.iter().enumerate() {
        let ok = [format!("sample={k} index=0 r=0"), format!("sample={k} index=1 r=1")];
        assert!(ok.iter().any(|l| l == line), "{line}");
    }
    assert_eq!(
        qmachine(&["sample", "--spec", &prob, "--x", "0", "--accuracy", "2^-8", "--seed", "3", "--n", "20"]).stdout,
        sample.stdout
    );
    let freq = qmachine(&["freq", "--spec", &prob, "--x", "0", "--accuracy", "2^-8", "--seed", "9", "--n", "1000"]);
    assert_eq!(freq.code, 0);
    let mut lines = freq.stdout.lines();
    assert_eq!(lines.next(), Some("n=1000"));
    let counts: Vec<u64> = lines
        .map(|l| l.split(' ').nth(1).unwrap().strip_prefix("count=").unwrap().parse().unwrap())
        .collect();
    assert_eq!(counts.iter().sum::<u64>(), 1000);
}

#[test]
fn natcheck() {
    assert_run(
        &["natcheck", "--construction", "roundtrip", "--relation", "divisibility", "--bound", "20"],
        0,
        "OK 441/441\n",
    );
    assert_run(&["natcheck", "--construction", "dec-to-semi", "--relation", "geq", "--bound", "10"], 0, "OK 121/121\n");
    assert_run(
        &["natcheck", "--construction", "nonempty-roundtrip", "--relation", "equality", "--bound", "10"],
        0,
        "OK 121/121\n",
    );
    // too little fuel for the dovetailed search to reach every member
    let starved = qmachine(&["natcheck", "--construction", "roundtrip", "--relation", "equality", "--bound", "10", "--fuel", "5"]);
    assert_eq!(starved.code, 1);
    assert!(starved.stdout.starts_with("FAIL "), "{}", starved.stdout);
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let d = specs();
    let bad = qmachine(&["eval", "--spec", &path(&d, "bad.sx"), "--x", "1", "--accuracy", "1/2"]);
    assert_eq!(bad.code, 2);
    assert!(bad.stderr.contains("1:6: syntax error: unclosed list"), "{}", bad.stderr);
    let mass = qmachine(&["mass", "--spec", &path(&d, "badmass.sx"), "--x", "0", "--y", "0", "--accuracy", "1/2"]);
    assert_eq!(mass.code, 2);
    assert!(mass.stderr.contains("bad mass"), "{}", mass.stderr);
    let missing = Path::new("/nonexistent/spec.sx").to_str().unwrap();
    assert_eq!(qmachine(&["eval", "--spec", missing, "--x", "1", "--accuracy", "1/2"]).code, 2);
    assert_eq!(qmachine(&["eval", "--spec", &path(&d, "chi.sx"), "--x", "1", "--accuracy", "0"]).code, 2);
    assert_eq!(qmachine(&["eval", "--spec", &path(&d, "chi.sx"), "--x", "1/0", "--accuracy", "1"]).code, 2);
    assert_eq!(qmachine(&["eval", "--spec", &path(&d, "band.sx"), "--x", "0", "--accuracy", "1"]).code, 2);
    assert_eq!(qmachine(&["natcheck", "--construction", "roundtrip", "--relation", "primes", "--bound", "3"]).code, 2);
    assert_eq!(qmachine(&["frobnicate"]).code, 2);
    assert_eq!(qmachine(&["sample", "--spec", &path(&d, "rel.sx"), "--x", "0", "--accuracy", "1"]).code, 2);
}
