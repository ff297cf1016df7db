//! Equality up to renaming of bound variables.

use super::ast::{ChangeableExpr, Name, StableExpr, Value};

/// Pairs of binders currently in scope, innermost last.
struct Scope<'a> {
    pairs: Vec<(&'a Name, &'a Name)>,
}

impl<'a> Scope<'a> {
    fn var_eq(&self, x: &Name, y: &Name) -> bool {
        for (a, b) in self.pairs.iter().rev() {
            let hit_a = *a == x;
            let hit_b = *b == y;
            if hit_a || hit_b {
                return hit_a && hit_b;
            }
        }
        x == y
    }

    fn under<R>(&mut self, binders: &[(&'a Name, &'a Name)], k: impl FnOnce(&mut Self) -> R) -> R {
        let depth = self.pairs.len();
        self.pairs.extend_from_slice(binders);
        let out = k(self);
        self.pairs.truncate(depth);
        out
    }

    fn value(&mut self, u: &'a Value, v: &'a Value) -> bool {
        match (u, v) {
            (Value::Unit, Value::Unit) => true,
            (Value::Num(a), Value::Num(b)) => a == b,
            (Value::Var(x), Value::Var(y)) => self.var_eq(x, y),
            (Value::Loc(a), Value::Loc(b)) => a == b,
            (Value::Pair(a1, b1), Value::Pair(a2, b2)) => self.value(a1, a2) && self.value(b1, b2),
            (Value::Inl(a), Value::Inl(b)) | (Value::Inr(a), Value::Inr(b)) => self.value(a, b),
            (Value::FunS(f1, x1, e1), Value::FunS(f2, x2, e2)) => {
                self.under(&[(f1, f2), (x1, x2)], |s| s.stable(e1, e2))
            }
            (Value::FunC(f1, x1, e1), Value::FunC(f2, x2, e2)) => {
                self.under(&[(f1, f2), (x1, x2)], |s| s.changeable(e1, e2))
            }
            _ => false,
        }
    }

    fn values(&mut self, us: &'a [Value], vs: &'a [Value]) -> bool {
        us.len() == vs.len() && us.iter().zip(vs).all(|(u, v)| self.value(u, v))
    }

    fn stable(&mut self, a: &'a StableExpr, b: &'a StableExpr) -> bool {
        use StableExpr as S;
        match (a, b) {
            (S::Val(u), S::Val(v)) => self.value(u, v),
            (S::Prim(o1, a1), S::Prim(o2, a2)) => o1 == o2 && self.values(a1, a2),
            (S::Mod(c1), S::Mod(c2)) => self.changeable(c1, c2),
            (S::Memo(s1), S::Memo(s2)) => self.stable(s1, s2),
            (S::Apply(f1, a1), S::Apply(f2, a2)) => self.value(f1, f2) && self.value(a1, a2),
            (S::Let(a1, x1, b1), S::Let(a2, x2, b2)) => {
                self.stable(a1, a2) && self.under(&[(x1, x2)], |s| s.stable(b1, b2))
            }
            (S::LetPair(v1, x1, y1, e1), S::LetPair(v2, x2, y2, e2)) => {
                self.value(v1, v2) && self.under(&[(x1, x2), (y1, y2)], |s| s.stable(e1, e2))
            }
            (S::Case(v1, x1, l1, y1, r1), S::Case(v2, x2, l2, y2, r2)) => {
                self.value(v1, v2)
                    && self.under(&[(x1, x2)], |s| s.stable(l1, l2))
                    && self.under(&[(y1, y2)], |s| s.stable(r1, r2))
            }
            _ => false,
        }
    }

    fn changeable(&mut self, a: &'a ChangeableExpr, b: &'a ChangeableExpr) -> bool {
        use ChangeableExpr as C;
        match (a, b) {
            (C::Write(u), C::Write(v)) => self.value(u, v),
            (C::Read(v1, x1, e1), C::Read(v2, x2, e2)) => {
                self.value(v1, v2) && self.under(&[(x1, x2)], |s| s.changeable(e1, e2))
            }
            (C::Memo(c1), C::Memo(c2)) => self.changeable(c1, c2),
            (C::Apply(f1, a1), C::Apply(f2, a2)) => self.value(f1, f2) && self.value(a1, a2),
            (C::Let(a1, x1, b1), C::Let(a2, x2, b2)) => {
                self.stable(a1, a2) && self.under(&[(x1, x2)], |s| s.changeable(b1, b2))
            }
            (C::LetPair(v1, x1, y1, e1), C::LetPair(v2, x2, y2, e2)) => {
                self.value(v1, v2) && self.under(&[(x1, x2), (y1, y2)], |s| s.changeable(e1, e2))
            }
            (C::Case(v1, x1, l1, y1, r1), C::Case(v2, x2, l2, y2, r2)) => {
                self.value(v1, v2)
                    && self.under(&[(x1, x2)], |s| s.changeable(l1, l2))
                    && self.under(&[(y1, y2)], |s| s.changeable(r1, r2))
            }
            _ => false,
        }
    }
}

pub fn alpha_eq_value(a: &Value, b: &Value) -> bool {
    Scope { pairs: Vec::new() }.value(a, b)
}

pub fn alpha_eq_stable(a: &StableExpr, b: &StableExpr) -> bool {
    Scope { pairs: Vec::new() }.stable(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renamed_functions_are_equal() {
        let f = Value::fun_s("f", "x", StableExpr::Val(Value::var("x")));
        let g = Value::fun_s("g", "y", StableExpr::Val(Value::var("y")));
        assert!(alpha_eq_value(&f, &g));
    }

    #[test]
    fn self_reference_vs_parameter_differ() {
        let f = Value::fun_s("f", "x", StableExpr::Val(Value::var("f")));
        let g = Value::fun_s("f", "x", StableExpr::Val(Value::var("x")));
        assert!(!alpha_eq_value(&f, &g));
    }

    #[test]
    fn free_variables_compare_by_name() {
        assert!(alpha_eq_value(&Value::var("z"), &Value::var("z")));
        assert!(!alpha_eq_value(&Value::var("z"), &Value::var("w")));
        // z bound on one side only
        let f = Value::fun_s("f", "z", StableExpr::Val(Value::var("z")));
        let g = Value::fun_s("f", "x", StableExpr::Val(Value::var("z")));
        assert!(!alpha_eq_value(&f, &g));
    }

    #[test]
    fn shadowing_is_respected() {
        // funs f x. let x = 1 in x   vs   funs f y. let z = 1 in z
        let e1 = StableExpr::Let(
            Box::new(StableExpr::Val(Value::num(1))),
            "x".into(),
            Box::new(StableExpr::Val(Value::var("x"))),
        );
        let e2 = StableExpr::Let(
            Box::new(StableExpr::Val(Value::num(1))),
            "z".into(),
            Box::new(StableExpr::Val(Value::var("z"))),
        );
        assert!(alpha_eq_value(&Value::fun_s("f", "x", e1.clone()), &Value::fun_s("f", "y", e2)));
        // funs f x. let y = 1 in x  vs  funs f y. let y = 1 in y
        let e3 = StableExpr::Let(
            Box::new(StableExpr::Val(Value::num(1))),
            "y".into(),
            Box::new(StableExpr::Val(Value::var("x"))),
        );
        let e4 = StableExpr::Let(
            Box::new(StableExpr::Val(Value::num(1))),
            "y".into(),
            Box::new(StableExpr::Val(Value::var("y"))),
        );
        assert!(!alpha_eq_value(&Value::fun_s("f", "x", e3), &Value::fun_s("f", "y", e4)));
    }
}
