//! The store-passing, trace-producing evaluator.
//!
//! [`Engine::eval_s`] and [`Engine::eval_c`] follow the big-step rules for
//! stable and changeable expressions one rule per match arm. Changeable
//! evaluation is destination passing: the enclosing `mod` supplies the
//! location that the final `write` fills. `memo` asks the [`Oracle`]; on a
//! hit the returned trace is brought up to date by change propagation (see
//! [`crate::propagate`]).

mod alloc;
mod oracle;
mod validate;

use thiserror::Error;

pub use alloc::{Allocator, FreshAllocator, RecyclingAllocator};
pub use oracle::{Answer, Evidence, MemoTableOracle, NullOracle, Oracle};
pub use validate::{validate, validate_c, validate_s, ValidityError};

use crate::grow;
use crate::store::{reach_changeable, reach_stable, DanglingError, LocSet, Location, Store, WfError};
use crate::syntax::{ChangeableExpr, Name, StableExpr, Term, Value};
use crate::trace::{assert_disjoint_alloc, Alloc, CTrace, STrace, SideConditionError, Trace};

pub const DEFAULT_FUEL: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("stuck in rule `{rule}` at {expr}")]
    Stuck { rule: &'static str, expr: String },
    #[error("side condition failed: {0}")]
    SideCondition(#[from] SideConditionError),
    #[error("fuel exhausted")]
    FuelExhausted,
    #[error(transparent)]
    Dangling(#[from] DanglingError),
    #[error("ill-formed: {0}")]
    Wf(#[from] WfError),
    #[error("location {0} reached the pure evaluator")]
    LocationEncountered(Location),
}

impl EvalError {
    /// Stuck and out-of-fuel runs are not failures of the semantics, just
    /// programs without a (short enough) derivation.
    pub fn is_discard(&self) -> bool {
        matches!(self, EvalError::Stuck { .. } | EvalError::FuelExhausted)
    }

    pub(crate) fn stuck(rule: &'static str, e: &impl std::fmt::Display) -> Self {
        let mut expr = e.to_string();
        if expr.len() > 160 {
            let cut = (0..=160).rev().find(|i| expr.is_char_boundary(*i)).unwrap_or(0);
            expr.truncate(cut);
            expr.push_str("...");
        }
        EvalError::Stuck { rule, expr }
    }
}

/// A budget of rule applications shared by evaluation and propagation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fuel {
    limit: u64,
    used: u64,
}

impl Fuel {
    pub fn new(limit: u64) -> Self {
        Fuel { limit, used: 0 }
    }

    pub fn tick(&mut self) -> Result<(), EvalError> {
        if self.used >= self.limit {
            return Err(EvalError::FuelExhausted);
        }
        self.used += 1;
        Ok(())
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.used
    }
}

impl Default for Fuel {
    fn default() -> Self {
        Fuel::new(DEFAULT_FUEL)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub memo_hits: u64,
    pub memo_misses: u64,
    /// Hits whose trace allocates a location this run already owns; they
    /// are treated as misses.
    pub rejected_hits: u64,
    pub fuel_used: u64,
    /// Reads whose recorded value still matched during propagation.
    pub reads_reused: u64,
    /// Locations of reads re-executed during propagation, in order.
    pub reads_reexecuted: Vec<Location>,
}

/// What a run produced: a value for a stable run, the target for a
/// changeable one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Value(Value),
    Target(Location),
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub outcome: Outcome,
    pub initial_store: Store,
    pub final_store: Store,
    pub trace: Trace,
    pub alloc_set: LocSet,
    pub reach_before: LocSet,
    pub stats: Stats,
}

impl RunReport {
    pub fn value(&self) -> Option<&Value> {
        match &self.outcome {
            Outcome::Value(v) => Some(v),
            Outcome::Target(_) => None,
        }
    }

    pub fn stable_trace(&self) -> Option<&STrace> {
        match &self.trace {
            Trace::Stable(t) => Some(t),
            Trace::Changeable(_) => None,
        }
    }
}

/// One evaluation session: an oracle, an allocator and a fuel budget.
///
/// `claimed` holds every location the run must not allocate again: the
/// locations reachable from the root expression and everything allocated
/// (or adopted from a memo hit) so far.
pub struct Engine<'a> {
    oracle: &'a mut dyn Oracle,
    allocator: &'a mut dyn Allocator,
    pub(crate) fuel: Fuel,
    pub(crate) claimed: LocSet,
    pub(crate) stats: Stats,
}

impl<'a> Engine<'a> {
    pub fn new(oracle: &'a mut dyn Oracle, allocator: &'a mut dyn Allocator, fuel: u64) -> Self {
        Engine {
            oracle,
            allocator,
            fuel: Fuel::new(fuel),
            claimed: LocSet::new(),
            stats: Stats::default(),
        }
    }

    /// Adds locations that allocation must avoid.
    pub fn claim(&mut self, locs: impl IntoIterator<Item = Location>) {
        self.claimed.extend(locs);
    }

    pub fn stats(&self) -> Stats {
        Stats { fuel_used: self.fuel.used(), ..self.stats.clone() }
    }

    fn allocate(&mut self, store: &Store) -> Location {
        let l = self.allocator.next(store, &self.claimed);
        debug_assert!(!self.claimed.contains(&l), "allocator returned claimed location {l}");
        self.claimed.insert(l);
        l
    }

    /// Accepts a memo hit only if its trace allocates nothing this run owns.
    fn adopt(&mut self, t: &impl Alloc) -> bool {
        let alloc = t.alloc();
        if alloc.is_disjoint(&self.claimed) {
            self.claimed.extend(alloc);
            self.stats.memo_hits += 1;
            true
        } else {
            self.stats.rejected_hits += 1;
            false
        }
    }

    pub fn eval_s(&mut self, store: &mut Store, e: &StableExpr) -> Result<(Value, STrace), EvalError> {
        grow(|| self.eval_s_inner(store, e))
    }

    fn eval_s_inner(&mut self, store: &mut Store, e: &StableExpr) -> Result<(Value, STrace), EvalError> {
        self.fuel.tick()?;
        match e {
            StableExpr::Val(v) => Ok((v.clone(), STrace::Empty)),
            StableExpr::Prim(op, args) => match op.apply(args) {
                Some(v) => Ok((v, STrace::Empty)),
                None => Err(EvalError::stuck("prim", e)),
            },
            StableExpr::Mod(body) => {
                let l = self.allocate(store);
                let t = self.eval_c(store, l, body)?;
                if t.alloc().contains(&l) {
                    return Err(SideConditionError::SelfAllocated { rule: "mod", loc: l }.into());
                }
                Ok((Value::Loc(l), STrace::Mod(l, Box::new(t))))
            }
            StableExpr::Memo(body) => self.memo_s(store, body),
            StableExpr::Apply(f, arg) => match f {
                Value::FunS(g, x, body) => self.eval_s(store, &body.subst_app(g, f, x, arg)),
                _ => Err(EvalError::stuck("apply", e)),
            },
            StableExpr::Let(e1, x, e2) => {
                let (v1, t1) = self.eval_s(store, e1)?;
                let (v2, t2) = self.eval_s(store, &e2.subst(x, &v1))?;
                assert_disjoint_alloc(&t1, &t2)?;
                Ok((v2, STrace::Let(Box::new(t1), Box::new(t2))))
            }
            StableExpr::LetPair(p, x1, x2, body) => match p {
                Value::Pair(v1, v2) => self.eval_s(store, &subst_pair(&**body, x1, v1, x2, v2)),
                _ => Err(EvalError::stuck("letpair", e)),
            },
            StableExpr::Case(s, x1, e1, x2, e2) => match s {
                Value::Inl(v) => self.eval_s(store, &e1.subst(x1, v)),
                Value::Inr(v) => self.eval_s(store, &e2.subst(x2, v)),
                _ => Err(EvalError::stuck("case", e)),
            },
        }
    }

    fn memo_s(&mut self, store: &mut Store, body: &StableExpr) -> Result<(Value, STrace), EvalError> {
        let recording = self.oracle.wants_records();
        let reach_before = recording.then(|| reach_stable(body, store));
        let result = match self.oracle.query_s(store, body) {
            Answer::Hit((v, t)) if self.adopt(&t) => {
                let t = self.propagate_s(store, &t)?;
                (v, t)
            }
            _ => {
                self.stats.memo_misses += 1;
                self.eval_s(store, body)?
            }
        };
        if let Some(reach) = reach_before {
            let evidence = stable_evidence(reach, &result.1);
            self.oracle.record_s(body, &result.0, &result.1, evidence);
        }
        Ok(result)
    }

    pub fn eval_c(&mut self, store: &mut Store, target: Location, e: &ChangeableExpr) -> Result<CTrace, EvalError> {
        grow(|| self.eval_c_inner(store, target, e))
    }

    fn eval_c_inner(&mut self, store: &mut Store, target: Location, e: &ChangeableExpr) -> Result<CTrace, EvalError> {
        self.fuel.tick()?;
        match e {
            ChangeableExpr::Write(v) => {
                store.insert(target, v.clone());
                Ok(CTrace::Write(v.clone()))
            }
            ChangeableExpr::Read(r, x, body) => {
                let Value::Loc(l) = r else {
                    return Err(EvalError::stuck("read", e));
                };
                let value = store.lookup(*l)?.clone();
                let rest = self.eval_c(store, target, &body.subst(x, &value))?;
                Ok(CTrace::Read {
                    loc: *l,
                    value,
                    var: x.clone(),
                    body: body.clone(),
                    rest: Box::new(rest),
                })
            }
            ChangeableExpr::Memo(body) => self.memo_c(store, target, body),
            ChangeableExpr::Apply(f, arg) => match f {
                Value::FunC(g, x, body) => self.eval_c(store, target, &body.subst_app(g, f, x, arg)),
                _ => Err(EvalError::stuck("apply", e)),
            },
            ChangeableExpr::Let(e1, x, e2) => {
                let (v, t1) = self.eval_s(store, e1)?;
                let t2 = self.eval_c(store, target, &e2.subst(x, &v))?;
                assert_disjoint_alloc(&t1, &t2)?;
                Ok(CTrace::Let(Box::new(t1), Box::new(t2)))
            }
            ChangeableExpr::LetPair(p, x1, x2, body) => match p {
                Value::Pair(v1, v2) => self.eval_c(store, target, &subst_pair(&**body, x1, v1, x2, v2)),
                _ => Err(EvalError::stuck("letpair", e)),
            },
            ChangeableExpr::Case(s, x1, e1, x2, e2) => match s {
                Value::Inl(v) => self.eval_c(store, target, &e1.subst(x1, v)),
                Value::Inr(v) => self.eval_c(store, target, &e2.subst(x2, v)),
                _ => Err(EvalError::stuck("case", e)),
            },
        }
    }

    fn memo_c(&mut self, store: &mut Store, target: Location, body: &ChangeableExpr) -> Result<CTrace, EvalError> {
        let recording = self.oracle.wants_records();
        let reach_before = recording.then(|| reach_changeable(body, store));
        let t = match self.oracle.query_c(store, body) {
            Answer::Hit(t) if self.adopt(&t) => self.propagate_c(store, target, &t)?,
            _ => {
                self.stats.memo_misses += 1;
                self.eval_c(store, target, body)?
            }
        };
        if let Some(reach) = reach_before {
            let evidence = changeable_evidence(reach, target, &t);
            self.oracle.record_c(body, &t, evidence);
        }
        Ok(t)
    }
}

/// `[v1/x1, v2/x2] e`; when the binders coincide the second one wins.
pub(crate) fn subst_pair<T: Term>(e: &T, x1: &Name, v1: &Value, x2: &Name, v2: &Value) -> T {
    e.subst(x2, v2).subst(x1, v1)
}

fn stable_evidence(reach: Result<LocSet, WfError>, t: &STrace) -> Evidence {
    let reach = reach.map_err(|_| ValidityError::AllocMismatch {
        reported: "ill-formed".into(),
        actual: "ill-formed".into(),
    })?;
    match t.alloc().intersection(&reach).next() {
        Some(l) => Err(ValidityError::AllocReachable(*l)),
        None => Ok(()),
    }
}

fn changeable_evidence(reach: Result<LocSet, WfError>, target: Location, t: &CTrace) -> Evidence {
    let reach = reach.map_err(|_| ValidityError::AllocMismatch {
        reported: "ill-formed".into(),
        actual: "ill-formed".into(),
    })?;
    let alloc = t.alloc();
    if let Some(l) = alloc.intersection(&reach).next() {
        return Err(ValidityError::AllocReachable(*l));
    }
    if reach.contains(&target) {
        return Err(ValidityError::TargetReachable(target));
    }
    if alloc.contains(&target) {
        return Err(ValidityError::TargetAllocated(target));
    }
    Ok(())
}

/// Evaluates a stable expression from `store` and packages the result with
/// what the audit needs.
pub fn run_stable(
    store: &Store,
    e: &StableExpr,
    oracle: &mut dyn Oracle,
    allocator: &mut dyn Allocator,
    fuel: u64,
) -> Result<RunReport, EvalError> {
    let reach_before = reach_stable(e, store)?;
    let mut engine = Engine::new(oracle, allocator, fuel);
    engine.claim(reach_before.iter().copied());
    let mut final_store = store.clone();
    let (v, t) = engine.eval_s(&mut final_store, e)?;
    Ok(RunReport {
        outcome: Outcome::Value(v),
        initial_store: store.clone(),
        final_store,
        alloc_set: t.alloc(),
        trace: Trace::Stable(t),
        reach_before,
        stats: engine.stats(),
    })
}

/// Evaluates a changeable expression with destination `target`.
pub fn run_changeable(
    store: &Store,
    target: Location,
    e: &ChangeableExpr,
    oracle: &mut dyn Oracle,
    allocator: &mut dyn Allocator,
    fuel: u64,
) -> Result<RunReport, EvalError> {
    let reach_before = reach_changeable(e, store)?;
    let mut engine = Engine::new(oracle, allocator, fuel);
    engine.claim(reach_before.iter().copied());
    engine.claim([target]);
    let mut final_store = store.clone();
    let t = engine.eval_c(&mut final_store, target, e)?;
    Ok(RunReport {
        outcome: Outcome::Target(target),
        initial_store: store.clone(),
        final_store,
        alloc_set: t.alloc(),
        trace: Trace::Changeable(t),
        reach_before,
        stats: engine.stats(),
    })
}
