//! Sources of memo hits.
//!
//! An oracle may answer a `memo` with the result of an earlier evaluation of
//! the same expression, from any store. The evaluator then runs change
//! propagation on the returned trace to bring it in line with the current
//! store.

use std::collections::HashMap;

use crate::store::{LocSet, Store};
use crate::syntax::{ChangeableExpr, StableExpr, Value};
use crate::trace::{Alloc, CTrace, STrace};

use super::validate::ValidityError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answer<T> {
    Miss,
    Hit(T),
}

/// Outcome of auditing a memoized sub-evaluation at the time it was
/// recorded. Only `Ok` entries may later be returned as hits.
pub type Evidence = Result<(), ValidityError>;

pub trait Oracle {
    fn query_s(&mut self, store: &Store, e: &StableExpr) -> Answer<(Value, STrace)>;

    fn query_c(&mut self, store: &Store, e: &ChangeableExpr) -> Answer<CTrace>;

    /// Whether the evaluator should audit memoized sub-evaluations and
    /// report them through `record_*`. Auditing costs a reach computation.
    fn wants_records(&self) -> bool {
        false
    }

    fn record_s(&mut self, _e: &StableExpr, _v: &Value, _t: &STrace, _evidence: Evidence) {}

    fn record_c(&mut self, _e: &ChangeableExpr, _t: &CTrace, _evidence: Evidence) {}
}

/// Always misses, so every evaluation is memo-free.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullOracle;

impl Oracle for NullOracle {
    fn query_s(&mut self, _: &Store, _: &StableExpr) -> Answer<(Value, STrace)> {
        Answer::Miss
    }

    fn query_c(&mut self, _: &Store, _: &ChangeableExpr) -> Answer<CTrace> {
        Answer::Miss
    }
}

#[derive(Clone, Debug)]
struct Entry<T> {
    payload: T,
    alloc: LocSet,
}

/// A memo table keyed by the structure of the (already substituted)
/// expression.
///
/// Records made during a run stay pending until [`MemoTableOracle::commit`],
/// so a run never hits its own entries. A hit consumes the entry together
/// with every other entry that shares an allocated location with it, so no
/// location is ever handed out twice.
#[derive(Clone, Debug, Default)]
pub struct MemoTableOracle {
    stable: HashMap<StableExpr, Vec<Entry<(Value, STrace)>>>,
    changeable: HashMap<ChangeableExpr, Vec<Entry<CTrace>>>,
    pending_stable: Vec<(StableExpr, Entry<(Value, STrace)>)>,
    pending_changeable: Vec<(ChangeableExpr, Entry<CTrace>)>,
    rejected: usize,
}

impl MemoTableOracle {
    pub fn new() -> Self {
        Self::default()
    }

    /// Makes the entries recorded since the last commit available for hits.
    pub fn commit(&mut self) {
        for (e, entry) in self.pending_stable.drain(..) {
            self.stable.entry(e).or_default().push(entry);
        }
        for (e, entry) in self.pending_changeable.drain(..) {
            self.changeable.entry(e).or_default().push(entry);
        }
    }

    /// Drops the entries recorded since the last commit.
    pub fn discard_pending(&mut self) {
        self.pending_stable.clear();
        self.pending_changeable.clear();
    }

    /// Number of entries that can currently be returned.
    pub fn resident(&self) -> usize {
        self.stable.values().map(Vec::len).sum::<usize>() + self.changeable.values().map(Vec::len).sum::<usize>()
    }

    pub fn pending(&self) -> usize {
        self.pending_stable.len() + self.pending_changeable.len()
    }

    /// Records that arrived with failed validity evidence.
    pub fn rejected_records(&self) -> usize {
        self.rejected
    }

    fn evict_overlapping(&mut self, alloc: &LocSet) {
        if alloc.is_empty() {
            return;
        }
        for entries in self.stable.values_mut() {
            entries.retain(|en| en.alloc.is_disjoint(alloc));
        }
        for entries in self.changeable.values_mut() {
            entries.retain(|en| en.alloc.is_disjoint(alloc));
        }
        self.stable.retain(|_, v| !v.is_empty());
        self.changeable.retain(|_, v| !v.is_empty());
    }
}

impl Oracle for MemoTableOracle {
    fn query_s(&mut self, _store: &Store, e: &StableExpr) -> Answer<(Value, STrace)> {
        let Some(entries) = self.stable.get_mut(e) else {
            return Answer::Miss;
        };
        let entry = entries.remove(0);
        if entries.is_empty() {
            self.stable.remove(e);
        }
        self.evict_overlapping(&entry.alloc);
        Answer::Hit(entry.payload)
    }

    fn query_c(&mut self, _store: &Store, e: &ChangeableExpr) -> Answer<CTrace> {
        let Some(entries) = self.changeable.get_mut(e) else {
            return Answer::Miss;
        };
        let entry = entries.remove(0);
        if entries.is_empty() {
            self.changeable.remove(e);
        }
        self.evict_overlapping(&entry.alloc);
        Answer::Hit(entry.payload)
    }

    fn wants_records(&self) -> bool {
        true
    }

    fn record_s(&mut self, e: &StableExpr, v: &Value, t: &STrace, evidence: Evidence) {
        if evidence.is_err() {
            self.rejected += 1;
            return;
        }
        let entry = Entry { payload: (v.clone(), t.clone()), alloc: t.alloc() };
        self.pending_stable.push((e.clone(), entry));
    }

    fn record_c(&mut self, e: &ChangeableExpr, t: &CTrace, evidence: Evidence) {
        if evidence.is_err() {
            self.rejected += 1;
            return;
        }
        let entry = Entry { payload: t.clone(), alloc: t.alloc() };
        self.pending_changeable.push((e.clone(), entry));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Location;

    fn mod_write(l: u64, n: i64) -> STrace {
        STrace::Mod(Location(l), Box::new(CTrace::Write(Value::num(n))))
    }

    fn key() -> StableExpr {
        StableExpr::Mod(Box::new(ChangeableExpr::Write(Value::num(3))))
    }

    #[test]
    fn empty_table_misses() {
        let mut o = MemoTableOracle::new();
        assert_eq!(o.query_s(&Store::new(), &key()), Answer::Miss);
        assert_eq!(o.query_c(&Store::new(), &ChangeableExpr::Write(Value::Unit)), Answer::Miss);
    }

    #[test]
    fn hit_is_consumed() {
        let mut o = MemoTableOracle::new();
        let t = mod_write(0, 3);
        o.record_s(&key(), &Value::Loc(Location(0)), &t, Ok(()));
        // pending entries are not visible yet
        assert_eq!(o.query_s(&Store::new(), &key()), Answer::Miss);
        o.commit();
        assert_eq!(o.query_s(&Store::new(), &key()), Answer::Hit((Value::Loc(Location(0)), t)));
        assert_eq!(o.query_s(&Store::new(), &key()), Answer::Miss);
    }

    #[test]
    fn structurally_different_key_misses() {
        let mut o = MemoTableOracle::new();
        o.record_s(&key(), &Value::Loc(Location(0)), &mod_write(0, 3), Ok(()));
        o.commit();
        let other = StableExpr::Mod(Box::new(ChangeableExpr::Write(Value::num(4))));
        assert_eq!(o.query_s(&Store::new(), &other), Answer::Miss);
        assert_eq!(o.resident(), 1);
    }

    #[test]
    fn invalid_evidence_is_not_recorded() {
        let mut o = MemoTableOracle::new();
        let bad = Err(ValidityError::AllocReachable(Location(0)));
        o.record_s(&key(), &Value::Loc(Location(0)), &mod_write(0, 3), bad);
        o.commit();
        assert_eq!(o.resident(), 0);
        assert_eq!(o.rejected_records(), 1);
    }

    #[test]
    fn hit_evicts_entries_sharing_locations() {
        let mut o = MemoTableOracle::new();
        let inner = ChangeableExpr::Write(Value::num(3));
        o.record_c(&inner, &CTrace::Let(Box::new(mod_write(5, 1)), Box::new(CTrace::Write(Value::Unit))), Ok(()));
        o.record_s(&key(), &Value::Loc(Location(4)), &STrace::Let(Box::new(mod_write(4, 3)), Box::new(mod_write(5, 1))), Ok(()));
        o.commit();
        assert_eq!(o.resident(), 2);
        assert!(matches!(o.query_s(&Store::new(), &key()), Answer::Hit(_)));
        assert_eq!(o.resident(), 0);
        assert_eq!(o.query_c(&Store::new(), &inner), Answer::Miss);
    }
}
