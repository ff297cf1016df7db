//! Change propagation.
//!
//! Propagation replays a trace against a (possibly different) store. Writes
//! are performed again, allocations keep their labels, and a read whose
//! location now holds a different value is re-executed from its recorded
//! body, which re-enters the evaluator with the same target.

use crate::engine::{Allocator, Engine, EvalError, Oracle, Stats};
use crate::grow;
use crate::store::{LocSet, Location, Store};
use crate::syntax::Term;
use crate::trace::{assert_disjoint_alloc, Alloc, CTrace, STrace, SideConditionError};

impl Engine<'_> {
    pub fn propagate_s(&mut self, store: &mut Store, t: &STrace) -> Result<STrace, EvalError> {
        grow(|| {
            self.fuel.tick()?;
            match t {
                STrace::Empty => Ok(STrace::Empty),
                STrace::Mod(l, body) => {
                    let body = self.propagate_c(store, *l, body)?;
                    if body.alloc().contains(l) {
                        return Err(SideConditionError::SelfAllocated { rule: "propagate mod", loc: *l }.into());
                    }
                    Ok(STrace::Mod(*l, Box::new(body)))
                }
                STrace::Let(t1, t2) => {
                    let t1 = self.propagate_s(store, t1)?;
                    let t2 = self.propagate_s(store, t2)?;
                    assert_disjoint_alloc(&t1, &t2)?;
                    Ok(STrace::Let(Box::new(t1), Box::new(t2)))
                }
            }
        })
    }

    pub fn propagate_c(&mut self, store: &mut Store, target: Location, t: &CTrace) -> Result<CTrace, EvalError> {
        grow(|| {
            self.fuel.tick()?;
            match t {
                CTrace::Write(v) => {
                    store.insert(target, v.clone());
                    Ok(CTrace::Write(v.clone()))
                }
                CTrace::Let(t1, t2) => {
                    let t1 = self.propagate_s(store, t1)?;
                    let t2 = self.propagate_c(store, target, t2)?;
                    assert_disjoint_alloc(&t1, &t2)?;
                    Ok(CTrace::Let(Box::new(t1), Box::new(t2)))
                }
                CTrace::Read { loc, value, var, body, rest } => {
                    let current = store.lookup(*loc)?.clone();
                    let rest = if current == *value {
                        self.stats.reads_reused += 1;
                        self.propagate_c(store, target, rest)?
                    } else {
                        self.stats.reads_reexecuted.push(*loc);
                        self.eval_c(store, target, &body.subst(var, &current))?
                    };
                    Ok(CTrace::Read {
                        loc: *loc,
                        value: current,
                        var: var.clone(),
                        body: body.clone(),
                        rest: Box::new(rest),
                    })
                }
            }
        })
    }
}

/// Locations a trace mentions anywhere: allocation labels, read locations
/// and locations inside recorded values. Re-execution must not allocate any
/// of them.
pub fn trace_locations(t: &STrace) -> LocSet {
    use crate::store::locations_in;
    fn s(t: &STrace, out: &mut LocSet) {
        match t {
            STrace::Empty => {}
            STrace::Mod(l, body) => {
                out.insert(*l);
                c(body, out);
            }
            STrace::Let(a, b) => {
                s(a, out);
                s(b, out);
            }
        }
    }
    fn c(t: &CTrace, out: &mut LocSet) {
        match t {
            CTrace::Write(v) => out.extend(locations_in(&v.clone().into())),
            CTrace::Let(a, b) => {
                s(a, out);
                c(b, out);
            }
            CTrace::Read { loc, value, body, rest, .. } => {
                out.insert(*loc);
                out.extend(locations_in(&value.clone().into()));
                out.extend(locations_in(&(**body).clone().into()));
                c(rest, out);
            }
        }
    }
    let mut out = LocSet::new();
    grow(|| s(t, &mut out));
    out
}

#[derive(Clone, Debug)]
pub struct PropagationReport {
    pub final_store: Store,
    pub trace: STrace,
    pub stats: Stats,
}

/// Propagates a whole stable trace through `store`.
///
/// `protected` lists further locations that re-execution must not allocate,
/// typically the locations reachable from the program being updated.
pub fn propagate_stable(
    store: &Store,
    trace: &STrace,
    protected: &LocSet,
    oracle: &mut dyn Oracle,
    allocator: &mut dyn Allocator,
    fuel: u64,
) -> Result<PropagationReport, EvalError> {
    let mut engine = Engine::new(oracle, allocator, fuel);
    engine.claim(trace_locations(trace));
    engine.claim(protected.iter().copied());
    let mut final_store = store.clone();
    let trace = engine.propagate_s(&mut final_store, trace)?;
    Ok(PropagationReport { final_store, trace, stats: engine.stats() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_changeable, FreshAllocator, NullOracle, DEFAULT_FUEL};
    use crate::syntax::{parse_changeable, ChangeableExpr, Value};
    use crate::trace::Trace;

    fn l(n: u64) -> Location {
        Location(n)
    }

    fn engine_parts() -> (NullOracle, FreshAllocator) {
        (NullOracle, FreshAllocator::starting_at(100))
    }

    fn read_trace(seen: i64) -> CTrace {
        CTrace::Read {
            loc: l(1),
            value: Value::num(seen),
            var: "x".into(),
            body: Box::new(ChangeableExpr::Write(Value::var("x"))),
            rest: Box::new(CTrace::Write(Value::num(seen))),
        }
    }

    #[test]
    fn empty_propagates_to_empty() {
        let (mut o, mut a) = engine_parts();
        let store = Store::new().update(l(0), Value::num(1));
        let r = propagate_stable(&store, &STrace::Empty, &LocSet::new(), &mut o, &mut a, 10).unwrap();
        assert_eq!(r.trace, STrace::Empty);
        assert_eq!(r.final_store, store);
    }

    #[test]
    fn mod_write_redoes_the_write() {
        let (mut o, mut a) = engine_parts();
        let store = Store::new().update(l(0), Value::num(9));
        let t = STrace::Mod(l(0), Box::new(CTrace::Write(Value::num(2))));
        let r = propagate_stable(&store, &t, &LocSet::new(), &mut o, &mut a, 10).unwrap();
        assert_eq!(r.trace, t);
        assert_eq!(r.final_store, store.update(l(0), Value::num(2)));
    }

    #[test]
    fn write_rule() {
        let (mut o, mut a) = engine_parts();
        let mut e = Engine::new(&mut o, &mut a, 10);
        let mut store = Store::new().update(l(0), Value::num(9));
        let t = e.propagate_c(&mut store, l(0), &CTrace::Write(Value::num(2))).unwrap();
        assert_eq!(t, CTrace::Write(Value::num(2)));
        assert_eq!(store, Store::new().update(l(0), Value::num(2)));
    }

    #[test]
    fn unchanged_read_keeps_trace() {
        let (mut o, mut a) = engine_parts();
        let mut e = Engine::new(&mut o, &mut a, 10);
        let mut store = Store::new().update(l(1), Value::num(2));
        let t = e.propagate_c(&mut store, l(0), &read_trace(2)).unwrap();
        assert_eq!(t, read_trace(2));
        assert_eq!(store, Store::new().update(l(1), Value::num(2)).update(l(0), Value::num(2)));
        assert_eq!(e.stats().reads_reused, 1);
    }

    #[test]
    fn changed_read_reexecutes_and_matches_scratch() {
        let (mut o, mut a) = engine_parts();
        let mut e = Engine::new(&mut o, &mut a, 10);
        let start = Store::new().update(l(1), Value::num(7));
        let mut store = start.clone();
        let t = e.propagate_c(&mut store, l(0), &read_trace(2)).unwrap();
        assert_eq!(t, read_trace(7));
        assert_eq!(store, start.update(l(0), Value::num(7)));
        assert_eq!(e.stats().reads_reexecuted, vec![l(1)]);

        // from scratch on the same store
        let body = parse_changeable("(read (loc 1) (x) (write x))").unwrap();
        let (mut o, mut a) = engine_parts();
        let scratch = run_changeable(&start, l(0), &body, &mut o, &mut a, DEFAULT_FUEL).unwrap();
        assert_eq!(scratch.final_store, store);
        assert_eq!(scratch.trace, Trace::Changeable(t));
    }

    #[test]
    fn read_of_missing_location_dangles() {
        let (mut o, mut a) = engine_parts();
        let mut e = Engine::new(&mut o, &mut a, 10);
        let r = e.propagate_c(&mut Store::new(), l(0), &read_trace(2));
        assert!(matches!(r, Err(EvalError::Dangling(_))));
    }

    #[test]
    fn overlapping_let_halves_fail() {
        let (mut o, mut a) = engine_parts();
        let m = STrace::Mod(l(3), Box::new(CTrace::Write(Value::Unit)));
        let t = STrace::Let(Box::new(m.clone()), Box::new(m));
        let r = propagate_stable(&Store::new(), &t, &LocSet::new(), &mut o, &mut a, 10);
        assert!(matches!(r, Err(EvalError::SideCondition(SideConditionError::Overlap { .. }))));
    }

    #[test]
    fn trace_locations_cover_reads_and_values() {
        let t = STrace::Mod(
            l(0),
            Box::new(CTrace::Read {
                loc: l(1),
                value: Value::Loc(l(2)),
                var: "x".into(),
                body: Box::new(ChangeableExpr::Write(Value::Loc(l(3)))),
                rest: Box::new(CTrace::Write(Value::Loc(l(4)))),
            }),
        );
        assert_eq!(trace_locations(&t), (0..5).map(Location).collect());
    }
}
