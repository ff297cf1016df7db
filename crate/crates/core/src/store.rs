//! Locations, stores, and lifting.
//!
//! Lifting replaces every location reachable from an expression by the
//! (recursively lifted) value stored there. It is defined only when every
//! reachable location is bound and the reachable part of the store is
//! acyclic; the set of locations visited on the way is the expression's
//! reach.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grow;
use crate::syntax::{ChangeableExpr, Expr, StableExpr, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Location(pub u64);

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

pub type LocSet = BTreeSet<Location>;

pub fn fmt_locset(set: &LocSet) -> String {
    let items: Vec<String> = set.iter().map(Location::to_string).collect();
    format!("{{{}}}", items.join(", "))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("dangling location {0}")]
pub struct DanglingError(pub Location);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum WfError {
    #[error("location {0} is reachable but not in the store")]
    Dangling(Location),
    #[error("location {0} is reachable from itself")]
    Cycle(Location),
}

/// A finite map from locations to values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Store {
    cells: BTreeMap<Location, Value>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    /// `σ[l ← v]` as a new store.
    pub fn update(&self, l: Location, v: Value) -> Store {
        let mut next = self.clone();
        next.insert(l, v);
        next
    }

    /// In-place `σ[l ← v]`; replaces any previous binding of `l`.
    pub fn insert(&mut self, l: Location, v: Value) {
        self.cells.insert(l, v);
    }

    pub fn lookup(&self, l: Location) -> Result<&Value, DanglingError> {
        self.cells.get(&l).ok_or(DanglingError(l))
    }

    pub fn get(&self, l: Location) -> Option<&Value> {
        self.cells.get(&l)
    }

    pub fn contains(&self, l: Location) -> bool {
        self.cells.contains_key(&l)
    }

    pub fn dom(&self) -> LocSet {
        self.cells.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Location, &Value)> {
        self.cells.iter().map(|(l, v)| (*l, v))
    }

    /// Largest bound index, if any.
    pub fn max_location(&self) -> Option<Location> {
        self.cells.keys().next_back().copied()
    }

    /// Locations whose binding differs between `self` and `other`,
    /// including locations bound in only one of them.
    pub fn changed_locations(&self, other: &Store) -> LocSet {
        let mut out = LocSet::new();
        for (l, v) in &self.cells {
            if other.cells.get(l) != Some(v) {
                out.insert(*l);
            }
        }
        for l in other.cells.keys() {
            if !self.cells.contains_key(l) {
                out.insert(*l);
            }
        }
        out
    }
}

impl FromIterator<(Location, Value)> for Store {
    fn from_iter<I: IntoIterator<Item = (Location, Value)>>(iter: I) -> Self {
        Store { cells: iter.into_iter().collect() }
    }
}

/// Store literal: one `lN = <value>` line per binding, in location order.
impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (l, v) in &self.cells {
            writeln!(f, "{l} = {v}")?;
        }
        Ok(())
    }
}

/// Locations that occur syntactically in `e` (not following the store).
pub fn locations_in(e: &Expr) -> LocSet {
    fn value(v: &Value, out: &mut LocSet) {
        match v {
            Value::Loc(l) => {
                out.insert(*l);
            }
            Value::Unit | Value::Num(_) | Value::Var(_) => {}
            Value::Pair(a, b) => {
                value(a, out);
                value(b, out);
            }
            Value::Inl(a) | Value::Inr(a) => value(a, out),
            Value::FunS(_, _, body) => stable(body, out),
            Value::FunC(_, _, body) => changeable(body, out),
        }
    }
    fn stable(e: &StableExpr, out: &mut LocSet) {
        match e {
            StableExpr::Val(v) => value(v, out),
            StableExpr::Prim(_, args) => args.iter().for_each(|a| value(a, out)),
            StableExpr::Mod(c) => changeable(c, out),
            StableExpr::Memo(s) => stable(s, out),
            StableExpr::Apply(f, a) => {
                value(f, out);
                value(a, out);
            }
            StableExpr::Let(e1, _, e2) => {
                stable(e1, out);
                stable(e2, out);
            }
            StableExpr::LetPair(v, _, _, e) => {
                value(v, out);
                stable(e, out);
            }
            StableExpr::Case(v, _, e1, _, e2) => {
                value(v, out);
                stable(e1, out);
                stable(e2, out);
            }
        }
    }
    fn changeable(e: &ChangeableExpr, out: &mut LocSet) {
        match e {
            ChangeableExpr::Write(v) => value(v, out),
            ChangeableExpr::Read(v, _, e) => {
                value(v, out);
                changeable(e, out);
            }
            ChangeableExpr::Memo(c) => changeable(c, out),
            ChangeableExpr::Apply(f, a) => {
                value(f, out);
                value(a, out);
            }
            ChangeableExpr::Let(e1, _, e2) => {
                stable(e1, out);
                changeable(e2, out);
            }
            ChangeableExpr::LetPair(v, _, _, e) => {
                value(v, out);
                changeable(e, out);
            }
            ChangeableExpr::Case(v, _, e1, _, e2) => {
                value(v, out);
                changeable(e1, out);
                changeable(e2, out);
            }
        }
    }
    let mut out = LocSet::new();
    match e {
        Expr::Value(v) => value(v, &mut out),
        Expr::Stable(s) => stable(s, &mut out),
        Expr::Changeable(c) => changeable(c, &mut out),
    }
    out
}

/// One lifting pass over a store. Lifted locations are cached, so a store
/// shaped like a DAG is walked once per location.
pub struct Lifter<'s> {
    store: &'s Store,
    on_path: BTreeSet<Location>,
    done: HashMap<Location, (Value, LocSet)>,
}

impl<'s> Lifter<'s> {
    pub fn new(store: &'s Store) -> Self {
        Lifter {
            store,
            on_path: BTreeSet::new(),
            done: HashMap::new(),
        }
    }

    fn location(&mut self, l: Location, reach: &mut LocSet) -> Result<Value, WfError> {
        if let Some((v, r)) = self.done.get(&l) {
            reach.extend(r.iter().copied());
            return Ok(v.clone());
        }
        if self.on_path.contains(&l) {
            return Err(WfError::Cycle(l));
        }
        let stored = self.store.get(l).ok_or(WfError::Dangling(l))?;
        self.on_path.insert(l);
        let mut inner = LocSet::new();
        let lifted = self.value(stored, &mut inner);
        self.on_path.remove(&l);
        let lifted = lifted?;
        inner.insert(l);
        reach.extend(inner.iter().copied());
        self.done.insert(l, (lifted.clone(), inner));
        Ok(lifted)
    }

    pub fn value(&mut self, v: &Value, reach: &mut LocSet) -> Result<Value, WfError> {
        grow(|| {
            Ok(match v {
                Value::Unit | Value::Num(_) | Value::Var(_) => v.clone(),
                Value::Loc(l) => self.location(*l, reach)?,
                Value::Pair(a, b) => {
                    Value::Pair(Box::new(self.value(a, reach)?), Box::new(self.value(b, reach)?))
                }
                Value::Inl(a) => Value::Inl(Box::new(self.value(a, reach)?)),
                Value::Inr(a) => Value::Inr(Box::new(self.value(a, reach)?)),
                Value::FunS(f, x, body) => {
                    Value::FunS(f.clone(), x.clone(), Box::new(self.stable(body, reach)?))
                }
                Value::FunC(f, x, body) => {
                    Value::FunC(f.clone(), x.clone(), Box::new(self.changeable(body, reach)?))
                }
            })
        })
    }

    pub fn stable(&mut self, e: &StableExpr, reach: &mut LocSet) -> Result<StableExpr, WfError> {
        grow(|| {
            Ok(match e {
                StableExpr::Val(v) => StableExpr::Val(self.value(v, reach)?),
                StableExpr::Prim(op, args) => StableExpr::Prim(
                    *op,
                    args.iter().map(|a| self.value(a, reach)).collect::<Result<_, _>>()?,
                ),
                StableExpr::Mod(c) => StableExpr::Mod(Box::new(self.changeable(c, reach)?)),
                StableExpr::Memo(s) => StableExpr::Memo(Box::new(self.stable(s, reach)?)),
                StableExpr::Apply(f, a) => StableExpr::Apply(self.value(f, reach)?, self.value(a, reach)?),
                StableExpr::Let(e1, x, e2) => StableExpr::Let(
                    Box::new(self.stable(e1, reach)?),
                    x.clone(),
                    Box::new(self.stable(e2, reach)?),
                ),
                StableExpr::LetPair(v, x1, x2, e) => StableExpr::LetPair(
                    self.value(v, reach)?,
                    x1.clone(),
                    x2.clone(),
                    Box::new(self.stable(e, reach)?),
                ),
                StableExpr::Case(v, x1, e1, x2, e2) => StableExpr::Case(
                    self.value(v, reach)?,
                    x1.clone(),
                    Box::new(self.stable(e1, reach)?),
                    x2.clone(),
                    Box::new(self.stable(e2, reach)?),
                ),
            })
        })
    }

    pub fn changeable(&mut self, e: &ChangeableExpr, reach: &mut LocSet) -> Result<ChangeableExpr, WfError> {
        grow(|| {
            Ok(match e {
                ChangeableExpr::Write(v) => ChangeableExpr::Write(self.value(v, reach)?),
                ChangeableExpr::Read(v, x, e) => ChangeableExpr::Read(
                    self.value(v, reach)?,
                    x.clone(),
                    Box::new(self.changeable(e, reach)?),
                ),
                ChangeableExpr::Memo(c) => ChangeableExpr::Memo(Box::new(self.changeable(c, reach)?)),
                ChangeableExpr::Apply(f, a) => {
                    ChangeableExpr::Apply(self.value(f, reach)?, self.value(a, reach)?)
                }
                ChangeableExpr::Let(e1, x, e2) => ChangeableExpr::Let(
                    Box::new(self.stable(e1, reach)?),
                    x.clone(),
                    Box::new(self.changeable(e2, reach)?),
                ),
                ChangeableExpr::LetPair(v, x1, x2, e) => ChangeableExpr::LetPair(
                    self.value(v, reach)?,
                    x1.clone(),
                    x2.clone(),
                    Box::new(self.changeable(e, reach)?),
                ),
                ChangeableExpr::Case(v, x1, e1, x2, e2) => ChangeableExpr::Case(
                    self.value(v, reach)?,
                    x1.clone(),
                    Box::new(self.changeable(e1, reach)?),
                    x2.clone(),
                    Box::new(self.changeable(e2, reach)?),
                ),
            })
        })
    }

    pub fn expr(&mut self, e: &Expr, reach: &mut LocSet) -> Result<Expr, WfError> {
        Ok(match e {
            Expr::Value(v) => Expr::Value(self.value(v, reach)?),
            Expr::Stable(s) => Expr::Stable(self.stable(s, reach)?),
            Expr::Changeable(c) => Expr::Changeable(self.changeable(c, reach)?),
        })
    }
}

/// The lifted expression together with its reach.
pub fn lift(e: &Expr, store: &Store) -> Result<(Expr, LocSet), WfError> {
    let mut reach = LocSet::new();
    let lifted = Lifter::new(store).expr(e, &mut reach)?;
    Ok((lifted, reach))
}

pub fn lift_value(v: &Value, store: &Store) -> Result<Value, WfError> {
    Lifter::new(store).value(v, &mut LocSet::new())
}

pub fn lift_stable(e: &StableExpr, store: &Store) -> Result<StableExpr, WfError> {
    Lifter::new(store).stable(e, &mut LocSet::new())
}

pub fn reach(e: &Expr, store: &Store) -> Result<LocSet, WfError> {
    lift(e, store).map(|(_, r)| r)
}

pub fn reach_value(v: &Value, store: &Store) -> Result<LocSet, WfError> {
    let mut r = LocSet::new();
    Lifter::new(store).value(v, &mut r)?;
    Ok(r)
}

pub fn reach_stable(e: &StableExpr, store: &Store) -> Result<LocSet, WfError> {
    let mut r = LocSet::new();
    Lifter::new(store).stable(e, &mut r)?;
    Ok(r)
}

pub fn reach_changeable(e: &ChangeableExpr, store: &Store) -> Result<LocSet, WfError> {
    let mut r = LocSet::new();
    Lifter::new(store).changeable(e, &mut r)?;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Term;

    fn l(n: u64) -> Location {
        Location(n)
    }

    fn set(ls: &[u64]) -> LocSet {
        ls.iter().map(|n| Location(*n)).collect()
    }

    #[test]
    fn update_semantics() {
        let s0 = Store::new().update(l(0), Value::num(2));
        assert_eq!(s0.lookup(l(0)), Ok(&Value::num(2)));
        let s1 = s0.update(l(0), Value::num(3));
        assert_eq!(s1.lookup(l(0)), Ok(&Value::num(3)));
        assert_eq!(s1.len(), 1);
        let s2 = s0.update(l(1), Value::num(5));
        assert_eq!(s2.dom(), set(&[0, 1]));
        assert_eq!(s2.lookup(l(0)), Ok(&Value::num(2)));
        // the original is untouched
        assert_eq!(s0.len(), 1);
    }

    #[test]
    fn lookup_in_empty_store_dangles() {
        assert_eq!(Store::new().lookup(l(0)), Err(DanglingError(l(0))));
    }

    #[test]
    fn lift_constant_is_identity() {
        let (e, r) = lift(&Value::num(3).into(), &Store::new()).unwrap();
        assert_eq!(e, Expr::Value(Value::num(3)));
        assert!(r.is_empty());
    }

    #[test]
    fn lift_location_replaces_with_contents() {
        let s = Store::new().update(l(0), Value::pair(Value::num(1), Value::num(2)));
        let (e, r) = lift(&Value::Loc(l(0)).into(), &s).unwrap();
        assert_eq!(e, Expr::Value(Value::pair(Value::num(1), Value::num(2))));
        assert_eq!(r, set(&[0]));
    }

    #[test]
    fn lift_detects_self_cycle() {
        let s = Store::new().update(l(0), Value::Loc(l(0)));
        assert_eq!(lift(&Value::Loc(l(0)).into(), &s), Err(WfError::Cycle(l(0))));
    }

    #[test]
    fn lift_detects_longer_cycle() {
        let s: Store = [(l(0), Value::Loc(l(1))), (l(1), Value::inl(Value::Loc(l(0))))]
            .into_iter()
            .collect();
        assert!(matches!(reach(&Value::Loc(l(1)).into(), &s), Err(WfError::Cycle(_))));
    }

    #[test]
    fn lift_detects_dangling() {
        assert_eq!(lift(&Value::Loc(l(0)).into(), &Store::new()), Err(WfError::Dangling(l(0))));
    }

    #[test]
    fn shared_location_is_not_a_cycle() {
        let s: Store = [(l(0), Value::num(1)), (l(1), Value::pair(Value::Loc(l(0)), Value::Loc(l(0))))]
            .into_iter()
            .collect();
        let (e, r) = lift(&Value::Loc(l(1)).into(), &s).unwrap();
        assert_eq!(e, Expr::Value(Value::pair(Value::num(1), Value::num(1))));
        assert_eq!(r, set(&[0, 1]));
    }

    #[test]
    fn reach_examples() {
        let s = Store::new().update(l(0), Value::num(1));
        assert_eq!(reach(&Value::num(3).into(), &s).unwrap(), LocSet::new());
        assert_eq!(reach(&Value::Loc(l(0)).into(), &s).unwrap(), set(&[0]));
        let s = s.update(l(1), Value::num(2));
        let p = Value::pair(Value::Loc(l(0)), Value::Loc(l(1)));
        assert_eq!(reach(&p.into(), &s).unwrap(), set(&[0, 1]));
    }

    #[test]
    fn lift_goes_under_binders() {
        let s = Store::new().update(l(4), Value::num(9));
        let body = StableExpr::Mod(Box::new(ChangeableExpr::Read(
            Value::Loc(l(4)),
            "x".into(),
            Box::new(ChangeableExpr::Write(Value::var("x"))),
        )));
        let f = Value::fun_s("f", "y", body);
        let (e, r) = lift(&f.into(), &s).unwrap();
        assert_eq!(r, set(&[4]));
        assert!(!e.mentions_location());
    }
}
