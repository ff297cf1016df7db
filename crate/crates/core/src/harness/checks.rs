//! The metatheorem, invariant and incremental checks run on one program.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{
    run_stable, validate, Allocator, EvalError, FreshAllocator, MemoTableOracle, NullOracle, Oracle, Outcome,
    RecyclingAllocator, RunReport,
};
use crate::propagate::{propagate_stable, PropagationReport};
use crate::pure::pure_eval_s;
use crate::store::{lift_stable, lift_value, reach_stable, LocSet, Location, Store, WfError};
use crate::syntax::{alpha_eq_value, Program, StableExpr, Value};
use crate::trace::{duplicate_labels, trace_to_json, Alloc, STrace, Trace};

use super::gen::{gen_case, gen_program, perturb_value, GenConfig};

/// Whether `v1` in `s1` and `v2` in `s2` lift to the same value. Functions
/// are compared up to renaming of bound variables.
pub fn lift_equal(v1: &Value, s1: &Store, v2: &Value, s2: &Store) -> Result<bool, WfError> {
    let a = lift_value(v1, s1)?;
    let b = lift_value(v2, s2)?;
    Ok(alpha_eq_value(&a, &b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Correctness,
    Consistency,
    MemoFreedom,
    Invariants,
    Incremental,
}

impl CheckKind {
    pub const ALL: [CheckKind; 5] = [
        CheckKind::Correctness,
        CheckKind::Consistency,
        CheckKind::MemoFreedom,
        CheckKind::Invariants,
        CheckKind::Incremental,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Correctness => "correctness",
            CheckKind::Consistency => "consistency",
            CheckKind::MemoFreedom => "memo_freedom",
            CheckKind::Invariants => "invariants",
            CheckKind::Incremental => "incremental",
        }
    }
}

impl std::str::FromStr for CheckKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().replace('-', "_");
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown check `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail(String),
    Discarded(String),
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: CheckKind,
    pub verdict: Verdict,
}

/// Evidence attached to a failed check: stores, traces and lifted values,
/// all rendered as text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub check: CheckKind,
    pub items: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub seed: u64,
    pub program: String,
    pub checks: Vec<CheckResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
}

impl CheckOutcome {
    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.verdict.is_fail())
    }

    pub fn verdict(&self, kind: CheckKind) -> Option<&Verdict> {
        self.checks.iter().find(|c| c.name == kind).map(|c| &c.verdict)
    }
}

/// A check's verdict plus the witness to attach if it failed.
struct Judged {
    verdict: Verdict,
    witness: BTreeMap<String, String>,
}

impl Judged {
    fn pass() -> Self {
        Judged { verdict: Verdict::Pass, witness: BTreeMap::new() }
    }

    fn discard(reason: impl Into<String>) -> Self {
        Judged { verdict: Verdict::Discarded(reason.into()), witness: BTreeMap::new() }
    }

    fn fail(reason: impl Into<String>, witness: BTreeMap<String, String>) -> Self {
        Judged { verdict: Verdict::Fail(reason.into()), witness }
    }
}

fn witness_of(items: &[(&str, String)]) -> BTreeMap<String, String> {
    items.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn report_witness(label: &str, r: &RunReport) -> Vec<(String, String)> {
    let value = match &r.outcome {
        Outcome::Value(v) => v.to_string(),
        Outcome::Target(l) => format!("target {l}"),
    };
    let lifted = match &r.outcome {
        Outcome::Value(v) => lift_value(v, &r.final_store).map(|v| v.to_string()).unwrap_or_else(|e| e.to_string()),
        Outcome::Target(l) => r.final_store.get(*l).map(|v| v.to_string()).unwrap_or_default(),
    };
    vec![
        (format!("{label}.value"), value),
        (format!("{label}.lifted"), lifted),
        (format!("{label}.initial_store"), r.initial_store.to_string()),
        (format!("{label}.final_store"), r.final_store.to_string()),
        (format!("{label}.trace"), trace_to_json(&r.trace).to_string()),
    ]
}

fn witness_reports(program: &StableExpr, reports: &[(&str, &RunReport)]) -> BTreeMap<String, String> {
    let mut w = witness_of(&[("program", program.to_string())]);
    for (label, r) in reports {
        w.extend(report_witness(label, r));
    }
    w
}

/// Maps an engine error to a discard (stuck or out of fuel) or a failure.
fn judge_error(what: &str, program: &StableExpr, store: &Store, e: &EvalError) -> Judged {
    if e.is_discard() {
        Judged::discard(format!("{what}: {e}"))
    } else {
        Judged::fail(
            format!("{what}: {e}"),
            witness_of(&[("program", program.to_string()), ("initial_store", store.to_string())]),
        )
    }
}

/// The evaluation invariants of a finished run, computed independently of
/// the engine's own audit, followed by that audit.
pub fn invariant_violations(r: &RunReport) -> Vec<String> {
    let mut out = Vec::new();
    let alloc = r.trace.alloc();
    let target = match r.outcome {
        Outcome::Target(l) => Some(l),
        Outcome::Value(_) => None,
    };
    let mut expected: LocSet = r.initial_store.dom().union(&alloc).copied().collect();
    expected.extend(target);
    if r.final_store.dom() != expected {
        out.push("store growth: dom(after) differs from dom(before) plus the allocated set".to_string());
    }
    for (l, v) in r.final_store.iter() {
        let changed = r.initial_store.get(l) != Some(v);
        if changed && !alloc.contains(&l) && Some(l) != target {
            out.push(format!("frame: {l} changed but was not allocated"));
        }
    }
    let dups = duplicate_labels(&r.trace);
    if !dups.is_empty() {
        out.push(format!("labels: {} label more than one mod", crate::store::fmt_locset(&dups)));
    }
    if let Err(e) = validate(r) {
        out.push(format!("audit: {e}"));
    }
    out
}

/// Checks a single report against the evaluation invariants.
pub fn check_invariants(program: &StableExpr, r: &RunReport) -> (Verdict, Option<Witness>) {
    let j = invariants_judged(program, &[("run", r)]);
    into_pair(CheckKind::Invariants, j)
}

fn invariants_judged(program: &StableExpr, reports: &[(&str, &RunReport)]) -> Judged {
    for (label, r) in reports {
        let v = invariant_violations(r);
        if !v.is_empty() {
            return Judged::fail(format!("{label}: {}", v.join("; ")), witness_reports(program, &[(label, r)]));
        }
    }
    Judged::pass()
}

fn into_pair(kind: CheckKind, j: Judged) -> (Verdict, Option<Witness>) {
    let w = j.verdict.is_fail().then_some(Witness { check: kind, items: j.witness });
    (j.verdict, w)
}

fn audited(label: &str, program: &StableExpr, r: &RunReport) -> Result<(), Judged> {
    match validate(r) {
        Ok(()) => Ok(()),
        Err(e) => Err(Judged::fail(format!("{label} failed its validity audit: {e}"), witness_reports(program, &[(label, r)]))),
    }
}

fn run(store: &Store, e: &StableExpr, oracle: &mut dyn Oracle, alloc: &mut dyn Allocator, fuel: u64) -> Result<RunReport, EvalError> {
    run_stable(store, e, oracle, alloc, fuel)
}

/// A few unreachable cells, so that a recycling allocator has something to
/// reuse.
pub fn garbage_store(seed: u64) -> Store {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = rng.gen_range(0..=3u64);
    (0..n).map(|i| (Location(i), Value::num(rng.gen_range(0..100)))).collect()
}

/// Evaluation is a refinement of the pure semantics: the lifted result of a
/// valid run equals the pure result of the lifted program.
fn correctness(p: &StableExpr, store: &Store, fuel: u64, r: &Result<RunReport, EvalError>) -> Judged {
    let r = match r {
        Ok(r) => r,
        Err(e) => return judge_error("null/fresh run", p, store, e),
    };
    if let Err(j) = audited("null/fresh", p, r) {
        return j;
    }
    let lifted_program = match lift_stable(p, store) {
        Ok(e) => e,
        Err(e) => return Judged::fail(format!("lifting the program: {e}"), witness_reports(p, &[("run", r)])),
    };
    let pure = match pure_eval_s(&lifted_program, fuel) {
        Ok(v) => v,
        Err(EvalError::FuelExhausted) => return Judged::discard("pure evaluation ran out of fuel"),
        Err(e) => return Judged::fail(format!("pure evaluation: {e}"), witness_reports(p, &[("run", r)])),
    };
    let v = r.value().expect("stable run");
    match lift_value(v, &r.final_store) {
        Ok(lifted) if alpha_eq_value(&lifted, &pure) => Judged::pass(),
        Ok(lifted) => {
            let mut w = witness_reports(p, &[("run", r)]);
            w.insert("pure".into(), pure.to_string());
            Judged::fail(format!("lifted result {lifted} differs from pure result {pure}"), w)
        }
        Err(e) => Judged::fail(format!("lifting the result: {e}"), witness_reports(p, &[("run", r)])),
    }
}

/// Runs of the three engine configurations on one program.
struct Configs {
    null_fresh: Result<RunReport, EvalError>,
    memo_fresh: Result<RunReport, EvalError>,
    null_recycling: Result<RunReport, EvalError>,
}

fn run_configs(p: &StableExpr, store: &Store, seed: u64, fuel: u64) -> Configs {
    let null_fresh = run(store, p, &mut NullOracle, &mut FreshAllocator::new(), fuel);
    let memo_fresh = {
        let mut table = MemoTableOracle::new();
        let mut alloc = FreshAllocator::new();
        match run(store, p, &mut table, &mut alloc, fuel) {
            Ok(_) => {
                table.commit();
                run(store, p, &mut table, &mut alloc, fuel)
            }
            Err(e) => Err(e),
        }
    };
    let null_recycling = run(store, p, &mut NullOracle, &mut RecyclingAllocator::new(seed), fuel);
    Configs { null_fresh, memo_fresh, null_recycling }
}

fn compare(p: &StableExpr, a: (&str, &RunReport), b: (&str, &RunReport)) -> Option<Judged> {
    let (va, vb) = (a.1.value()?, b.1.value()?);
    match lift_equal(va, &a.1.final_store, vb, &b.1.final_store) {
        Ok(true) => None,
        Ok(false) => Some(Judged::fail(
            format!("{} and {} results are not lift-equal", a.0, b.0),
            witness_reports(p, &[a, b]),
        )),
        Err(e) => Some(Judged::fail(format!("lifting {}/{}: {e}", a.0, b.0), witness_reports(p, &[a, b]))),
    }
}

/// Valid runs under every configuration have lift-equal results.
fn consistency(p: &StableExpr, store: &Store, c: &Configs) -> Judged {
    let runs = [("null/fresh", &c.null_fresh), ("memo/fresh", &c.memo_fresh), ("null/recycling", &c.null_recycling)];
    let mut ok = Vec::new();
    for (label, r) in runs {
        match r {
            Ok(r) => ok.push((label, r)),
            Err(e) => return judge_error(label, p, store, e),
        }
    }
    for (label, r) in &ok {
        if let Err(j) = audited(label, p, r) {
            return j;
        }
    }
    for i in 0..ok.len() {
        for j in i + 1..ok.len() {
            if let Some(fail) = compare(p, ok[i], ok[j]) {
                return fail;
            }
        }
    }
    Judged::pass()
}

/// A run that used memo hits agrees with the memo-free run.
fn memo_freedom(p: &StableExpr, store: &Store, c: &Configs) -> Judged {
    let (hit, free) = match (&c.memo_fresh, &c.null_fresh) {
        (Ok(h), Ok(f)) => (h, f),
        (Err(e), _) | (_, Err(e)) => return judge_error("run", p, store, e),
    };
    if hit.stats.memo_hits == 0 {
        return Judged::discard("no memo hit");
    }
    for (label, r) in [("memo/fresh", hit), ("null/fresh", free)] {
        if let Err(j) = audited(label, p, r) {
            return j;
        }
    }
    compare(p, ("memo/fresh", hit), ("null/fresh", free)).unwrap_or_else(Judged::pass)
}

fn invariants(p: &StableExpr, store: &Store, c: &Configs) -> Judged {
    let mut reports = Vec::new();
    for (label, r) in [("null/fresh", &c.null_fresh), ("memo/fresh", &c.memo_fresh), ("null/recycling", &c.null_recycling)] {
        match r {
            Ok(r) => reports.push((label, r)),
            Err(e) if e.is_discard() => {}
            Err(e) => return judge_error(label, p, store, e),
        }
    }
    if reports.is_empty() {
        return Judged::discard("no run terminated");
    }
    invariants_judged(p, &reports)
}

/// Labels of the mod nodes not nested inside another mod: the cells the
/// program's stable part allocates directly.
pub fn outer_mod_labels(t: &STrace) -> Vec<Location> {
    fn go(t: &STrace, out: &mut Vec<Location>) {
        match t {
            STrace::Empty => {}
            STrace::Mod(l, _) => out.push(*l),
            STrace::Let(a, b) => {
                go(a, out);
                go(b, out);
            }
        }
    }
    let mut out = Vec::new();
    crate::grow(|| go(t, &mut out));
    out
}

/// Everything the incremental pipeline produced for one program and edit set.
#[derive(Clone, Debug)]
pub struct IncrementalReport {
    pub original: RunReport,
    pub edited_store: Store,
    pub propagated: PropagationReport,
    pub scratch: RunReport,
    pub equal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IncrementalError {
    /// Evaluation or propagation failed; the label says which.
    Eval(&'static str, EvalError),
    Audit(&'static str, String),
    Lift(WfError),
}

impl std::fmt::Display for IncrementalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IncrementalError::Eval(what, e) => write!(f, "{what}: {e}"),
            IncrementalError::Audit(what, e) => write!(f, "{what} failed its audit: {e}"),
            IncrementalError::Lift(e) => write!(f, "lifting: {e}"),
        }
    }
}

/// Evaluates `p` from `store`, applies `edits` to the resulting store,
/// propagates the trace and compares with evaluating from scratch on the
/// edited store.
pub fn run_incremental(p: &StableExpr, store: &Store, edits: &Store, fuel: u64) -> Result<IncrementalReport, IncrementalError> {
    let original = run(store, p, &mut NullOracle, &mut FreshAllocator::new(), fuel)
        .map_err(|e| IncrementalError::Eval("initial run", e))?;
    validate(&original).map_err(|e| IncrementalError::Audit("initial run", e.to_string()))?;
    let mut edited_store = original.final_store.clone();
    for (l, v) in edits.iter() {
        edited_store.insert(l, v.clone());
    }
    let trace = original.stable_trace().expect("stable run").clone();
    let protected = reach_stable(p, &edited_store).map_err(IncrementalError::Lift)?;
    let mut alloc = FreshAllocator::new();
    let propagated = propagate_stable(&edited_store, &trace, &protected, &mut NullOracle, &mut alloc, fuel)
        .map_err(|e| IncrementalError::Eval("propagation", e))?;
    let dups = duplicate_labels(&Trace::Stable(propagated.trace.clone()));
    if !dups.is_empty() {
        return Err(IncrementalError::Audit("propagation", format!("duplicate labels {}", crate::store::fmt_locset(&dups))));
    }
    let scratch = run(&edited_store, p, &mut NullOracle, &mut FreshAllocator::new(), fuel)
        .map_err(|e| IncrementalError::Eval("from-scratch run", e))?;
    validate(&scratch).map_err(|e| IncrementalError::Audit("from-scratch run", e.to_string()))?;
    let v = original.value().expect("stable run");
    let equal = lift_equal(v, &propagated.final_store, scratch.value().expect("stable run"), &scratch.final_store)
        .map_err(IncrementalError::Lift)?;
    Ok(IncrementalReport { original, edited_store, propagated, scratch, equal })
}

/// Picks edits for the input cells and outer mod cells of a finished run.
pub fn choose_edits(report: &RunReport, inputs: &Store, seed: u64) -> Store {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
    let mut cells: Vec<Location> = inputs.dom().into_iter().collect();
    if let Some(t) = report.stable_trace() {
        cells.extend(outer_mod_labels(t));
    }
    let mut edits = Store::new();
    for &l in &cells {
        if rng.gen_bool(0.6) {
            if let Some(v) = report.final_store.get(l).and_then(|v| perturb_value(v, &mut rng)) {
                edits.insert(l, v);
            }
        }
    }
    if edits.is_empty() {
        if let Some(&l) = cells.first() {
            if let Some(v) = report.final_store.get(l).and_then(|v| perturb_value(v, &mut rng)) {
                edits.insert(l, v);
            }
        }
    }
    edits
}

fn incremental(cfg: &GenConfig) -> (String, Judged) {
    let case = gen_case(cfg);
    let p = &case.program.root;
    let text = p.to_string();
    let original = match run(&case.inputs, p, &mut NullOracle, &mut FreshAllocator::new(), cfg.fuel) {
        Ok(r) => r,
        Err(e) => return (text, judge_error("initial run", p, &case.inputs, &e)),
    };
    if outer_mod_labels(original.stable_trace().expect("stable run")).is_empty() {
        return (text, Judged::discard("no outer mod"));
    }
    let edits = choose_edits(&original, &case.inputs, cfg.seed);
    let j = match run_incremental(p, &case.inputs, &edits, cfg.fuel) {
        Ok(r) if r.equal => {
            let edited_inputs: Store = case
                .inputs
                .iter()
                .map(|(l, v)| (l, edits.get(l).unwrap_or(v).clone()))
                .collect();
            cross_store_memo(p, &case.inputs, &edited_inputs, cfg.fuel)
        }
        Ok(r) => {
            let mut w = witness_reports(p, &[("original", &r.original), ("scratch", &r.scratch)]);
            w.insert("edits".into(), edits.to_string());
            w.insert("propagated.final_store".into(), r.propagated.final_store.to_string());
            w.insert("propagated.trace".into(), crate::trace::strace_to_json(&r.propagated.trace).to_string());
            Judged::fail("propagated result is not lift-equal to the from-scratch result", w)
        }
        Err(IncrementalError::Eval(_, e)) if e.is_discard() => Judged::discard(e.to_string()),
        Err(e) => {
            let w = witness_of(&[
                ("program", text.clone()),
                ("inputs", case.inputs.to_string()),
                ("edits", edits.to_string()),
            ]);
            Judged::fail(e.to_string(), w)
        }
    };
    (text, j)
}

/// Warms a memo table on `before`, then evaluates on `after`: the hits come
/// from a different store and must be brought up to date by propagation.
fn cross_store_memo(p: &StableExpr, before: &Store, after: &Store, fuel: u64) -> Judged {
    let mut table = MemoTableOracle::new();
    let mut alloc = FreshAllocator::new();
    if let Err(e) = run(before, p, &mut table, &mut alloc, fuel) {
        return judge_error("memo warm-up", p, before, &e);
    }
    table.commit();
    let hit = match run(after, p, &mut table, &mut alloc, fuel) {
        Ok(r) => r,
        Err(e) => return judge_error("memo run on edited inputs", p, after, &e),
    };
    let free = match run(after, p, &mut NullOracle, &mut FreshAllocator::new(), fuel) {
        Ok(r) => r,
        Err(e) => return judge_error("null run on edited inputs", p, after, &e),
    };
    for (label, r) in [("memo/edited", &hit), ("null/edited", &free)] {
        if let Err(j) = audited(label, p, r) {
            return j;
        }
    }
    compare(p, ("memo/edited", &hit), ("null/edited", &free)).unwrap_or_else(Judged::pass)
}

/// Runs the selected checks on the program generated from `cfg`.
pub fn check_program(cfg: &GenConfig, checks: &[CheckKind]) -> CheckOutcome {
    let theorem_checks = checks.iter().any(|k| *k != CheckKind::Incremental);
    let program = gen_program(cfg);
    let p = &program.root;
    let store = garbage_store(cfg.seed);
    let mut results = Vec::new();
    let mut witnesses = Vec::new();
    let mut push = |kind: CheckKind, j: Judged| {
        if j.verdict.is_fail() {
            witnesses.push(Witness { check: kind, items: j.witness });
        }
        results.push(CheckResult { name: kind, verdict: j.verdict });
    };
    let configs = theorem_checks.then(|| run_configs(p, &store, cfg.seed, cfg.fuel));
    let mut incremental_program = None;
    for &kind in checks {
        let j = match (kind, &configs) {
            (CheckKind::Correctness, Some(c)) => correctness(p, &store, cfg.fuel, &c.null_fresh),
            (CheckKind::Consistency, Some(c)) => consistency(p, &store, c),
            (CheckKind::MemoFreedom, Some(c)) => memo_freedom(p, &store, c),
            (CheckKind::Invariants, Some(c)) => invariants(p, &store, c),
            (CheckKind::Incremental, _) => {
                let (text, j) = incremental(&GenConfig { input_cells: cfg.input_cells, ..cfg.clone() });
                incremental_program = Some(text);
                j
            }
            (_, None) => unreachable!("configs exist whenever a theorem check is requested"),
        };
        push(kind, j);
    }
    let program = if theorem_checks {
        p.to_string()
    } else {
        incremental_program.unwrap_or_default()
    };
    CheckOutcome { seed: cfg.seed, program, checks: results, witnesses }
}

/// Checks a single program under the three configurations; used for
/// programs that do not come from the generator.
pub fn check_given(program: &Program, store: &Store, seed: u64, fuel: u64) -> CheckOutcome {
    let p = &program.root;
    let c = run_configs(p, store, seed, fuel);
    let mut checks = Vec::new();
    let mut witnesses = Vec::new();
    for (kind, j) in [
        (CheckKind::Correctness, correctness(p, store, fuel, &c.null_fresh)),
        (CheckKind::Consistency, consistency(p, store, &c)),
        (CheckKind::MemoFreedom, memo_freedom(p, store, &c)),
        (CheckKind::Invariants, invariants(p, store, &c)),
    ] {
        if j.verdict.is_fail() {
            witnesses.push(Witness { check: kind, items: j.witness });
        }
        checks.push(CheckResult { name: kind, verdict: j.verdict });
    }
    CheckOutcome { seed, program: p.to_string(), checks, witnesses }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_stable;

    fn l(n: u64) -> Location {
        Location(n)
    }

    #[test]
    fn lift_equal_examples() {
        let empty = Store::new();
        assert_eq!(lift_equal(&Value::num(3), &empty, &Value::num(3), &empty), Ok(true));
        let s0 = Store::new().update(l(0), Value::num(1));
        let s5 = Store::new().update(l(5), Value::num(1));
        assert_eq!(lift_equal(&Value::Loc(l(0)), &s0, &Value::Loc(l(5)), &s5), Ok(true));
        let s0b = Store::new().update(l(0), Value::num(2));
        assert_eq!(lift_equal(&Value::Loc(l(0)), &s0, &Value::Loc(l(0)), &s0b), Ok(false));
        assert!(lift_equal(&Value::Loc(l(9)), &s0, &Value::Unit, &s0).is_err());
    }

    #[test]
    fn smallest_incremental_case() {
        let p = parse_stable("(mod (write (num 2)))").unwrap();
        let edits = Store::new().update(l(0), Value::num(7));
        let r = run_incremental(&p, &Store::new(), &edits, 1000).unwrap();
        assert!(r.equal);
        assert_eq!(r.propagated.final_store.get(l(0)), Some(&Value::num(2)));
    }

    #[test]
    fn edited_input_refires_read() {
        let p = parse_stable("(mod (read (loc 0) (x) (write (pair x x))))").unwrap();
        let inputs = Store::new().update(l(0), Value::num(1));
        let edits = Store::new().update(l(0), Value::num(4));
        let r = run_incremental(&p, &inputs, &edits, 1000).unwrap();
        assert!(r.equal);
        assert_eq!(r.propagated.stats.reads_reexecuted, vec![l(0)]);
        assert_eq!(r.propagated.final_store.get(l(1)), Some(&Value::pair(Value::num(4), Value::num(4))));
    }

    #[test]
    fn given_program_passes_all_checks() {
        let p = Program { root: parse_stable("(let (m (memo (mod (write (num 3))))) (memo (mod (read m (x) (write (inl x))))))").unwrap() };
        let o = check_given(&p, &garbage_store(3), 3, 10_000);
        assert!(!o.failed(), "{o:?}");
        assert_eq!(o.verdict(CheckKind::MemoFreedom), Some(&Verdict::Pass));
    }

    #[test]
    fn outcome_json_round_trips() {
        let o = check_program(&GenConfig { seed: 11, ..GenConfig::default() }, &CheckKind::ALL);
        let s = serde_json::to_string(&o).unwrap();
        let back: CheckOutcome = serde_json::from_str(&s).unwrap();
        assert_eq!(back, o);
    }

    #[test]
    fn check_kinds_parse() {
        assert_eq!("memo-freedom".parse::<CheckKind>(), Ok(CheckKind::MemoFreedom));
        assert!("nope".parse::<CheckKind>().is_err());
    }
}
