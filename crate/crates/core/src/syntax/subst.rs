//! Substitution of closed values for variables.
//!
//! Evaluation only ever substitutes closed values, so replacing a variable
//! cannot capture anything: a binder that shadows the variable simply stops
//! the rewrite.

use std::collections::BTreeSet;

use super::ast::{ChangeableExpr, Expr, Name, StableExpr, Value};
use crate::grow;

/// Syntax that supports substitution and free-variable queries.
pub trait Term: Sized {
    /// `[v/x] self`. `v` must be closed.
    fn subst(&self, x: &Name, v: &Value) -> Self;

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>);

    /// True if a `Loc` node occurs anywhere, including under binders.
    fn mentions_location(&self) -> bool;

    fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Substitutes the argument and then the function itself, as function
    /// application does. When the parameter and self names coincide the
    /// parameter wins.
    fn subst_app(&self, self_name: &Name, fun: &Value, param: &Name, arg: &Value) -> Self {
        self.subst(param, arg).subst(self_name, fun)
    }
}

pub fn substitute<T: Term>(term: &T, x: &Name, v: &Value) -> T {
    term.subst(x, v)
}

fn subst_under<T: Term + Clone>(body: &T, binders: &[&Name], x: &Name, v: &Value) -> T {
    if binders.contains(&x) {
        body.clone()
    } else {
        body.subst(x, v)
    }
}

fn free_under<T: Term>(body: &T, binders: &[&Name], bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    let depth = bound.len();
    bound.extend(binders.iter().map(|b| (*b).clone()));
    body.collect_free(bound, out);
    bound.truncate(depth);
}

impl Term for Value {
    fn subst(&self, x: &Name, v: &Value) -> Value {
        grow(|| match self {
            Value::Var(y) if y == x => v.clone(),
            Value::Unit | Value::Num(_) | Value::Var(_) | Value::Loc(_) => self.clone(),
            Value::Pair(a, b) => Value::Pair(Box::new(a.subst(x, v)), Box::new(b.subst(x, v))),
            Value::Inl(a) => Value::Inl(Box::new(a.subst(x, v))),
            Value::Inr(a) => Value::Inr(Box::new(a.subst(x, v))),
            Value::FunS(f, p, body) => {
                Value::FunS(f.clone(), p.clone(), Box::new(subst_under(&**body, &[f, p], x, v)))
            }
            Value::FunC(f, p, body) => {
                Value::FunC(f.clone(), p.clone(), Box::new(subst_under(&**body, &[f, p], x, v)))
            }
        })
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Value::Var(y) => {
                if !bound.contains(y) {
                    out.insert(y.clone());
                }
            }
            Value::Unit | Value::Num(_) | Value::Loc(_) => {}
            Value::Pair(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Value::Inl(a) | Value::Inr(a) => a.collect_free(bound, out),
            Value::FunS(f, p, body) => free_under(&**body, &[f, p], bound, out),
            Value::FunC(f, p, body) => free_under(&**body, &[f, p], bound, out),
        }
    }

    fn mentions_location(&self) -> bool {
        match self {
            Value::Loc(_) => true,
            Value::Unit | Value::Num(_) | Value::Var(_) => false,
            Value::Pair(a, b) => a.mentions_location() || b.mentions_location(),
            Value::Inl(a) | Value::Inr(a) => a.mentions_location(),
            Value::FunS(_, _, body) => body.mentions_location(),
            Value::FunC(_, _, body) => body.mentions_location(),
        }
    }
}

impl Term for StableExpr {
    fn subst(&self, x: &Name, v: &Value) -> StableExpr {
        grow(|| match self {
            StableExpr::Val(a) => StableExpr::Val(a.subst(x, v)),
            StableExpr::Prim(op, args) => {
                StableExpr::Prim(*op, args.iter().map(|a| a.subst(x, v)).collect())
            }
            StableExpr::Mod(e) => StableExpr::Mod(Box::new(e.subst(x, v))),
            StableExpr::Memo(e) => StableExpr::Memo(Box::new(e.subst(x, v))),
            StableExpr::Apply(f, a) => StableExpr::Apply(f.subst(x, v), a.subst(x, v)),
            StableExpr::Let(e1, y, e2) => StableExpr::Let(
                Box::new(e1.subst(x, v)),
                y.clone(),
                Box::new(subst_under(&**e2, &[y], x, v)),
            ),
            StableExpr::LetPair(p, y1, y2, e) => StableExpr::LetPair(
                p.subst(x, v),
                y1.clone(),
                y2.clone(),
                Box::new(subst_under(&**e, &[y1, y2], x, v)),
            ),
            StableExpr::Case(s, y1, e1, y2, e2) => StableExpr::Case(
                s.subst(x, v),
                y1.clone(),
                Box::new(subst_under(&**e1, &[y1], x, v)),
                y2.clone(),
                Box::new(subst_under(&**e2, &[y2], x, v)),
            ),
        })
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            StableExpr::Val(a) => a.collect_free(bound, out),
            StableExpr::Prim(_, args) => args.iter().for_each(|a| a.collect_free(bound, out)),
            StableExpr::Mod(e) => e.collect_free(bound, out),
            StableExpr::Memo(e) => e.collect_free(bound, out),
            StableExpr::Apply(f, a) => {
                f.collect_free(bound, out);
                a.collect_free(bound, out);
            }
            StableExpr::Let(e1, y, e2) => {
                e1.collect_free(bound, out);
                free_under(&**e2, &[y], bound, out);
            }
            StableExpr::LetPair(p, y1, y2, e) => {
                p.collect_free(bound, out);
                free_under(&**e, &[y1, y2], bound, out);
            }
            StableExpr::Case(s, y1, e1, y2, e2) => {
                s.collect_free(bound, out);
                free_under(&**e1, &[y1], bound, out);
                free_under(&**e2, &[y2], bound, out);
            }
        }
    }

    fn mentions_location(&self) -> bool {
        match self {
            StableExpr::Val(a) => a.mentions_location(),
            StableExpr::Prim(_, args) => args.iter().any(Value::mentions_location),
            StableExpr::Mod(e) => e.mentions_location(),
            StableExpr::Memo(e) => e.mentions_location(),
            StableExpr::Apply(f, a) => f.mentions_location() || a.mentions_location(),
            StableExpr::Let(e1, _, e2) => e1.mentions_location() || e2.mentions_location(),
            StableExpr::LetPair(p, _, _, e) => p.mentions_location() || e.mentions_location(),
            StableExpr::Case(s, _, e1, _, e2) => {
                s.mentions_location() || e1.mentions_location() || e2.mentions_location()
            }
        }
    }
}

impl Term for ChangeableExpr {
    fn subst(&self, x: &Name, v: &Value) -> ChangeableExpr {
        grow(|| match self {
            ChangeableExpr::Write(a) => ChangeableExpr::Write(a.subst(x, v)),
            ChangeableExpr::Read(r, y, e) => ChangeableExpr::Read(
                r.subst(x, v),
                y.clone(),
                Box::new(subst_under(&**e, &[y], x, v)),
            ),
            ChangeableExpr::Memo(e) => ChangeableExpr::Memo(Box::new(e.subst(x, v))),
            ChangeableExpr::Apply(f, a) => ChangeableExpr::Apply(f.subst(x, v), a.subst(x, v)),
            ChangeableExpr::Let(e1, y, e2) => ChangeableExpr::Let(
                Box::new(e1.subst(x, v)),
                y.clone(),
                Box::new(subst_under(&**e2, &[y], x, v)),
            ),
            ChangeableExpr::LetPair(p, y1, y2, e) => ChangeableExpr::LetPair(
                p.subst(x, v),
                y1.clone(),
                y2.clone(),
                Box::new(subst_under(&**e, &[y1, y2], x, v)),
            ),
            ChangeableExpr::Case(s, y1, e1, y2, e2) => ChangeableExpr::Case(
                s.subst(x, v),
                y1.clone(),
                Box::new(subst_under(&**e1, &[y1], x, v)),
                y2.clone(),
                Box::new(subst_under(&**e2, &[y2], x, v)),
            ),
        })
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            ChangeableExpr::Write(a) => a.collect_free(bound, out),
            ChangeableExpr::Read(r, y, e) => {
                r.collect_free(bound, out);
                free_under(&**e, &[y], bound, out);
            }
            ChangeableExpr::Memo(e) => e.collect_free(bound, out),
            ChangeableExpr::Apply(f, a) => {
                f.collect_free(bound, out);
                a.collect_free(bound, out);
            }
            ChangeableExpr::Let(e1, y, e2) => {
                e1.collect_free(bound, out);
                free_under(&**e2, &[y], bound, out);
            }
            ChangeableExpr::LetPair(p, y1, y2, e) => {
                p.collect_free(bound, out);
                free_under(&**e, &[y1, y2], bound, out);
            }
            ChangeableExpr::Case(s, y1, e1, y2, e2) => {
                s.collect_free(bound, out);
                free_under(&**e1, &[y1], bound, out);
                free_under(&**e2, &[y2], bound, out);
            }
        }
    }

    fn mentions_location(&self) -> bool {
        match self {
            ChangeableExpr::Write(a) => a.mentions_location(),
            ChangeableExpr::Read(r, _, e) => r.mentions_location() || e.mentions_location(),
            ChangeableExpr::Memo(e) => e.mentions_location(),
            ChangeableExpr::Apply(f, a) => f.mentions_location() || a.mentions_location(),
            ChangeableExpr::Let(e1, _, e2) => e1.mentions_location() || e2.mentions_location(),
            ChangeableExpr::LetPair(p, _, _, e) => p.mentions_location() || e.mentions_location(),
            ChangeableExpr::Case(s, _, e1, _, e2) => {
                s.mentions_location() || e1.mentions_location() || e2.mentions_location()
            }
        }
    }
}

impl Term for Expr {
    fn subst(&self, x: &Name, v: &Value) -> Expr {
        match self {
            Expr::Value(a) => Expr::Value(a.subst(x, v)),
            Expr::Stable(e) => Expr::Stable(e.subst(x, v)),
            Expr::Changeable(e) => Expr::Changeable(e.subst(x, v)),
        }
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Expr::Value(a) => a.collect_free(bound, out),
            Expr::Stable(e) => e.collect_free(bound, out),
            Expr::Changeable(e) => e.collect_free(bound, out),
        }
    }

    fn mentions_location(&self) -> bool {
        match self {
            Expr::Value(a) => a.mentions_location(),
            Expr::Stable(e) => e.mentions_location(),
            Expr::Changeable(e) => e.mentions_location(),
        }
    }
}
