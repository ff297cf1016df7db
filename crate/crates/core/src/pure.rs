//! The store-free reference semantics for location-free programs.
//!
//! `mod`, `memo` and `write` are identities and `read` is just another
//! binder, so both stable and changeable expressions evaluate to values.

use crate::engine::{subst_pair, EvalError, Fuel};
use crate::grow;
use crate::store::locations_in;
use crate::syntax::{ChangeableExpr, Expr, StableExpr, Term, Value};

fn reject_locations(e: Expr) -> Result<(), EvalError> {
    match locations_in(&e).into_iter().next() {
        Some(l) => Err(EvalError::LocationEncountered(l)),
        None => Ok(()),
    }
}

pub fn pure_eval_s(e: &StableExpr, fuel: u64) -> Result<Value, EvalError> {
    reject_locations(e.clone().into())?;
    Pure { fuel: Fuel::new(fuel) }.stable(e)
}

pub fn pure_eval_c(e: &ChangeableExpr, fuel: u64) -> Result<Value, EvalError> {
    reject_locations(e.clone().into())?;
    Pure { fuel: Fuel::new(fuel) }.changeable(e)
}

struct Pure {
    fuel: Fuel,
}

impl Pure {
    fn stable(&mut self, e: &StableExpr) -> Result<Value, EvalError> {
        grow(|| {
            self.fuel.tick()?;
            match e {
                StableExpr::Val(v) => Ok(v.clone()),
                StableExpr::Prim(op, args) => op.apply(args).ok_or_else(|| EvalError::stuck("prim", e)),
                StableExpr::Mod(c) => self.changeable(c),
                StableExpr::Memo(s) => self.stable(s),
                StableExpr::Apply(f, arg) => match f {
                    Value::FunS(g, x, body) => self.stable(&body.subst_app(g, f, x, arg)),
                    _ => Err(EvalError::stuck("apply", e)),
                },
                StableExpr::Let(e1, x, e2) => {
                    let v1 = self.stable(e1)?;
                    self.stable(&e2.subst(x, &v1))
                }
                StableExpr::LetPair(p, x1, x2, body) => match p {
                    Value::Pair(v1, v2) => self.stable(&subst_pair(&**body, x1, v1, x2, v2)),
                    _ => Err(EvalError::stuck("letpair", e)),
                },
                StableExpr::Case(s, x1, e1, x2, e2) => match s {
                    Value::Inl(v) => self.stable(&e1.subst(x1, v)),
                    Value::Inr(v) => self.stable(&e2.subst(x2, v)),
                    _ => Err(EvalError::stuck("case", e)),
                },
            }
        })
    }

    fn changeable(&mut self, e: &ChangeableExpr) -> Result<Value, EvalError> {
        grow(|| {
            self.fuel.tick()?;
            match e {
                ChangeableExpr::Write(v) => Ok(v.clone()),
                ChangeableExpr::Read(v, x, body) => self.changeable(&body.subst(x, v)),
                ChangeableExpr::Memo(c) => self.changeable(c),
                ChangeableExpr::Apply(f, arg) => match f {
                    Value::FunC(g, x, body) => self.changeable(&body.subst_app(g, f, x, arg)),
                    _ => Err(EvalError::stuck("apply", e)),
                },
                ChangeableExpr::Let(e1, x, e2) => {
                    let v = self.stable(e1)?;
                    self.changeable(&e2.subst(x, &v))
                }
                ChangeableExpr::LetPair(p, x1, x2, body) => match p {
                    Value::Pair(v1, v2) => self.changeable(&subst_pair(&**body, x1, v1, x2, v2)),
                    _ => Err(EvalError::stuck("letpair", e)),
                },
                ChangeableExpr::Case(s, x1, e1, x2, e2) => match s {
                    Value::Inl(v) => self.changeable(&e1.subst(x1, v)),
                    Value::Inr(v) => self.changeable(&e2.subst(x2, v)),
                    _ => Err(EvalError::stuck("case", e)),
                },
            }
        })
    }
}
