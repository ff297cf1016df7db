use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use tempfile::TempDir;

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Sandbox { dir: TempDir::new().unwrap() }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, contents).unwrap();
        p
    }

    fn aml(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_aml"))
            .args(args)
            .current_dir(self.dir.path())
            .env_remove("AML_FUEL")
            .output()
            .unwrap()
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const LOOP: &str = "(apps (funs f x (apps f x)) (unit))";
const MEMO: &str = "(let (m (memo (mod (write (num 3))))) (memo (mod (read m (x) (write (inl x))))))";

#[test]
fn run_mod_write() {
    let s = Sandbox::new();
    s.file("p.aml", "(mod (write (num 2)))");
    let o = s.aml(&["run", "p.aml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "(loc 0)\nl0 = (num 2)\nmemo: 0 hits, 0 misses\n");
}

#[test]
fn run_out_of_fuel_exits_3() {
    let s = Sandbox::new();
    s.file("p.aml", LOOP);
    let o = s.aml(&["run", "--fuel", "10", "p.aml"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("fuel exhausted"));
}

#[test]
fn fuel_from_environment() {
    let s = Sandbox::new();
    s.file("p.aml", LOOP);
    let o = Command::new(env!("CARGO_BIN_EXE_aml"))
        .args(["run", "p.aml"])
        .current_dir(s.dir.path())
        .env("AML_FUEL", "25")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn parse_error_exits_2() {
    let s = Sandbox::new();
    s.file("p.aml", "(mod (val 1))");
    let o = s.aml(&["run", "p.aml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("1:6"), "{}", stderr(&o));
}

#[test]
fn stuck_program_exits_3() {
    let s = Sandbox::new();
    s.file("p.aml", "(apps (unit) (unit))");
    assert_eq!(s.aml(&["run", "p.aml"]).status.code(), Some(3));
}

#[test]
fn repeated_memo_runs_hit() {
    let s = Sandbox::new();
    s.file("p.aml", MEMO);
    let o = s.aml(&["run", "--oracle", "memo", "--repeat", "2", "--audit", "p.aml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let second = out.split("run 2\n").nth(1).unwrap();
    assert!(second.contains("memo: 2 hits, 0 misses"), "{out}");
    assert_eq!(out.matches("audit: ok").count(), 2);
}

#[test]
fn run_with_store_and_recycling() {
    let s = Sandbox::new();
    s.file("p.aml", "(mod (read (loc 0) (x) (write (pair x x))))");
    s.file("s.store", "l0 = 4\nl1 = (unit)\n");
    let o = s.aml(&["run", "--store", "s.store", "--alloc", "recycle:3", "--audit", "p.aml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("(pair (num 4) (num 4))"));
    assert_eq!(s.aml(&["run", "--alloc", "reuse", "p.aml"]).status.code(), Some(2));
}

#[test]
fn trace_out_writes_json() {
    let s = Sandbox::new();
    s.file("p.aml", "(mod (write (num 2)))");
    let o = s.aml(&["run", "--trace-out", "t.json", "p.aml"]);
    assert!(o.status.success());
    let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(s.dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(j["kind"], "mod");
    assert_eq!(j["loc"], 0);
    assert_eq!(j["body"]["kind"], "write");
}

#[test]
fn pure_examples() {
    let s = Sandbox::new();
    s.file("a.aml", "(mod (write (num 3)))");
    s.file("b.aml", "(val 1)");
    s.file("c.aml", "(val (loc 0))");
    assert_eq!(stdout(&s.aml(&["pure", "a.aml"])), "(num 3)\n");
    assert_eq!(stdout(&s.aml(&["pure", "b.aml"])), "(num 1)\n");
    assert_eq!(s.aml(&["pure", "c.aml"]).status.code(), Some(3));
}

#[test]
fn pure_agrees_with_lifted_run() {
    let s = Sandbox::new();
    s.file("p.aml", MEMO);
    assert_eq!(stdout(&s.aml(&["pure", "p.aml"])), "(inl (num 3))\n");
    assert!(stdout(&s.aml(&["run", "p.aml"])).contains("= (inl (num 3))"));
}

#[test]
fn incr_mod_write() {
    let s = Sandbox::new();
    s.file("p.aml", "(mod (write (num 2)))");
    s.file("e.edits", "l0 = 7\n");
    let o = s.aml(&["incr", "p.aml", "e.edits"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict: EQUAL"));
}

#[test]
fn incr_without_edits_keeps_trace() {
    let s = Sandbox::new();
    s.file("p.aml", MEMO);
    s.file("e.edits", "");
    let out = stdout(&s.aml(&["incr", "p.aml", "e.edits"]));
    assert!(out.contains("verdict: EQUAL"));
    assert!(out.contains("trace: unchanged"));
    assert!(out.contains("re-executed reads: none"));
}

#[test]
fn incr_refires_read() {
    let s = Sandbox::new();
    s.file("p.aml", "(mod (read (loc 0) (x) (write (pair x x))))");
    s.file("s.store", "l0 = 1\n");
    s.file("e.edits", "l0 = 9\n");
    let out = stdout(&s.aml(&["incr", "--store", "s.store", "p.aml", "e.edits"]));
    assert!(out.contains("verdict: EQUAL"), "{out}");
    assert!(out.contains("re-executed reads: {l0}"));
    assert!(out.contains("l1 = (pair (num 9) (num 9))"));
    assert!(out.contains("trace: changed"));
}

#[test]
fn incr_rejects_edits_with_locations() {
    let s = Sandbox::new();
    s.file("p.aml", "(mod (write (num 2)))");
    s.file("e.edits", "l0 = (loc 0)\n");
    assert_eq!(s.aml(&["incr", "p.aml", "e.edits"]).status.code(), Some(2));
}

#[test]
fn fuzz_is_deterministic() {
    let s = Sandbox::new();
    let args = ["fuzz", "--n", "100", "--seed", "1", "--no-timing", "--jsonl", "out.jsonl"];
    let a = s.aml(&args);
    let first = fs::read_to_string(s.dir.path().join("out.jsonl")).unwrap();
    let b = s.aml(&args);
    let second = fs::read_to_string(s.dir.path().join("out.jsonl")).unwrap();
    assert!(a.status.success(), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(first, second);
    assert_eq!(first.lines().count(), 100);
    assert!(!stdout(&a).contains("elapsed"));
}

#[test]
fn fuzz_selected_checks_and_empty_run() {
    let s = Sandbox::new();
    let o = s.aml(&["fuzz", "--n", "20", "--checks", "correctness,incremental", "--no-timing"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("correctness") && out.contains("incremental") && !out.contains("consistency"));
    let o = s.aml(&["fuzz", "--n", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("elapsed"));
    assert_eq!(s.aml(&["fuzz", "--checks", "bogus"]).status.code(), Some(2));
}
