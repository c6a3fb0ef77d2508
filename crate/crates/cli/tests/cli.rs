use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn theory(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "theories", name]
        .iter()
        .collect();
    p.to_str().unwrap().to_string()
}

fn termsat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_termsat"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn simplify_examples() {
    let arith = theory("arith.mt");
    let o = termsat(&[
        "simplify",
        "--theory",
        &arith,
        "--expr",
        "(/ (* a 2) 2)",
        "--cost",
        "ast-size",
    ]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "a\n"));

    let o = termsat(&["simplify", "--theory", &theory("empty.mt"), "--expr", "b"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "b\n"));

    let o = termsat(&["simplify", "--theory", &arith, "--expr", "(+ 1"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).is_empty());
    assert!(
        stderr(&o).contains("syntax error at byte"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn simplify_json_document() {
    let o = termsat(&[
        "simplify",
        "--theory",
        &theory("arith.mt"),
        "--expr",
        "(/ (* a 2) 2)",
        "--json",
        "--iters",
        "7",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["result"], "a");
    assert_eq!(v["cost"], "1");
    let sat = &v["report"]["saturation"];
    for key in [
        "stop_reason",
        "iterations",
        "enodes",
        "eclasses",
        "time_ms",
        "rules",
        "per_iteration",
    ] {
        assert!(!sat[key].is_null(), "missing {key}");
    }
    assert_eq!(sat["stop_reason"], "Saturated");
    assert_eq!(v["report"]["params"]["iter_limit"], 7);
    assert_eq!(v["report"]["params"]["scheduler"], "backoff");
    let names: Vec<&str> = sat["rules"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        ["div-canon", "div-same", "mul-one", "mul2-shift", "fold-div"]
    );
}

#[test]
fn limits_are_not_failures() {
    let o = termsat(&[
        "simplify",
        "--theory",
        &theory("ring.mt"),
        "--expr",
        "(* (+ a b) (+ c (- a b)))",
        "--iters",
        "2",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("IterLimit"), "{}", stderr(&o));
    let o = termsat(&[
        "simplify",
        "--theory",
        &theory("ring.mt"),
        "--expr",
        "(* (+ a b) (+ c (- a b)))",
        "--nodes",
        "50",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("NodeLimit"), "{}", stderr(&o));
}

#[test]
fn check_examples() {
    let arith = theory("arith.mt");
    let o = termsat(&[
        "check",
        "--theory",
        &arith,
        "--expr",
        "(/ (* a 2) 2)",
        "--expr2",
        "a",
    ]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "equal\n"));
    let o = termsat(&[
        "check", "--theory", &arith, "--expr", "(+ a b)", "--expr2", "(* a b)",
    ]);
    assert_eq!(
        (code(&o), stdout(&o).as_str()),
        (3, "unknown (Saturated)\n")
    );
    let o = termsat(&[
        "check",
        "--theory",
        &theory("empty.mt"),
        "--expr",
        "(f x 1)",
        "--expr2",
        "(f x 1)",
    ]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "equal\n"));
    let o = termsat(&["check", "--theory", &arith, "--expr", "a"]);
    assert_eq!(code(&o), 1);
    let o = termsat(&["check", "--theory", &arith, "--expr", "a", "--expr2", "(b"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--expr2"));
}

#[test]
fn check_json() {
    let o = termsat(&[
        "check",
        "--theory",
        &theory("comm.mt"),
        "--expr",
        "(+ x y)",
        "--expr2",
        "(+ y x)",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["equal"], true);
    assert_eq!(v["report"]["saturation"]["stop_reason"], "Halted");
}

#[test]
fn classic_examples() {
    let o = termsat(&[
        "classic",
        "--theory",
        &theory("arith.mt"),
        "--expr",
        "(* a 1)",
    ]);
    assert_eq!(
        (code(&o), stdout(&o).as_str()),
        (0, "a\nFixpoint after 1 step\n")
    );
    let o = termsat(&[
        "classic",
        "--theory",
        &theory("comm.mt"),
        "--expr",
        "(+ x y)",
    ]);
    assert_eq!(code(&o), 4);
    assert!(stdout(&o).contains("CycleDetected"));
    let o = termsat(&["classic", "--theory", &theory("empty.mt"), "--expr", "a"]);
    assert_eq!(
        (code(&o), stdout(&o).as_str()),
        (0, "a\nFixpoint after 0 steps\n")
    );
}

#[test]
fn classic_trace_and_step_limit() {
    let o = termsat(&[
        "classic",
        "--theory",
        &theory("arith.mt"),
        "--expr",
        "(/ (* a 2) 2)",
        "--trace",
    ]);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].contains("div-canon") && lines[0].contains("(* a (/ 2 2))"));
    assert_eq!(lines[3], "a");

    let o = termsat(&[
        "classic",
        "--theory",
        &theory("ring.mt"),
        "--expr",
        "(+ a (+ b c))",
        "--steps",
        "3",
        "--json",
        "--trace",
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(matches!(code(&o), 4));
    assert!(v["status"] == "StepLimit" || v["status"] == "CycleDetected");
    let trace = v["trace"].as_array().unwrap();
    assert_eq!(trace.len(), v["steps"].as_u64().unwrap() as usize);
    for key in ["rule", "path", "before", "after"] {
        assert!(!trace[0][key].is_null());
    }
}

#[test]
fn constant_folding_and_inconsistency() {
    let o = termsat(&[
        "simplify",
        "--theory",
        &theory("fold.mt"),
        "--expr",
        "(* (+ 1 2) x)",
    ]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "(* 3 x)\n"));
    let o = termsat(&[
        "simplify",
        "--theory",
        &theory("bad.mt"),
        "--expr",
        "(+ 1 x)",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("inconsistency"), "{}", stderr(&o));
    let o = termsat(&[
        "check",
        "--theory",
        &theory("bad.mt"),
        "--expr",
        "1",
        "--expr2",
        "x",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn weighted_cost() {
    let o = termsat(&[
        "simplify",
        "--theory",
        &theory("arith.mt"),
        "--expr",
        "(* a 2)",
        "--cost",
        &theory("weights.txt"),
    ]);
    assert_eq!(stdout(&o), "(<< a 1)\n");
    let o = termsat(&[
        "simplify",
        "--theory",
        &theory("arith.mt"),
        "--expr",
        "(* a 2)",
        "--cost",
        "ast-depth",
    ]);
    assert_eq!(stdout(&o), "(* a 2)\n");
    let o = termsat(&[
        "simplify",
        "--theory",
        &theory("arith.mt"),
        "--expr",
        "a",
        "--cost",
        "no-such-file",
    ]);
    assert_eq!(code(&o), 1);
    let o = termsat(&[
        "simplify",
        "--theory",
        &theory("arith.mt"),
        "--expr",
        "a",
        "--cost",
        &theory("arith.mt"),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn dot_subcommand_and_snapshots() {
    let o = termsat(&["dot", "--theory", &theory("empty.mt"), "--expr", "(f a)"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.starts_with("digraph egraph {"));
    assert!(out.contains("n1_0 [label=\"{f|{<c0>}}\"]"));

    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = termsat(&[
        "simplify",
        "--theory",
        &theory("comm.mt"),
        "--expr",
        "(+ x y)",
        "--dot",
        d,
    ]);
    assert_eq!(code(&o), 0);
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names[0], "snap-000.dot");
    assert!(names.len() >= 2);
}

#[test]
fn usage_errors() {
    let arith = theory("arith.mt");
    let cases: &[&[&str]] = &[
        &[],
        &["simplify"],
        &["frobnicate"],
        &["simplify", "--theory", "/no/such/theory.mt", "--expr", "a"],
        &[
            "simplify", "--theory", &arith, "--expr", "a", "--iters", "0",
        ],
        &[
            "simplify",
            "--theory",
            &arith,
            "--expr",
            "a",
            "--scheduler",
            "fifo",
        ],
        &["simplify", "--theory", &arith, "--expr", "a", "--trace"],
        &["classic", "--theory", &arith, "--expr", "a", "--expr2", "b"],
        &["classic", "--theory", &arith, "--expr", "a", "--steps", "0"],
        &[
            "check", "--theory", &arith, "--expr", "a", "--expr2", "a", "--dot", "x",
        ],
        &["simplify", "--theory", &arith, "--expr", "?x"],
    ];
    for args in cases {
        let o = termsat(args);
        assert_eq!(code(&o), 1, "{args:?}: {}", stderr(&o));
    }
    let o = termsat(&["--help"]);
    assert_eq!(code(&o), 0);
    let o = termsat(&["--version"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn bad_theory_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.mt");
    std::fs::write(
        &path,
        "theory t\nrule ok: (f ?x) => ?x\nrule bad: (* ?x 1) => ?y\n",
    )
    .unwrap();
    let o = termsat(&[
        "simplify",
        "--theory",
        path.to_str().unwrap(),
        "--expr",
        "a",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn plain_output_is_repeatable() {
    let args = [
        "simplify",
        "--theory",
        &theory("ring.mt"),
        "--expr",
        "(* (+ a b) (- a b))",
        "--iters",
        "4",
    ];
    let a = termsat(&args);
    let b = termsat(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status, b.status);
}
