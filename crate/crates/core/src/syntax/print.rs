use std::fmt::{self, Display, Formatter, Write};

use super::ast::{ChangeableExpr, Expr, Program, StableExpr, Value};

/// Renders any syntax class in the s-expression surface syntax.
pub fn pretty(e: &Expr) -> String {
    e.to_string()
}

impl Display for Value {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("(unit)"),
            Value::Num(n) => write!(f, "(num {n})"),
            Value::Var(x) => write!(f, "{x}"),
            Value::Loc(l) => write!(f, "(loc {})", l.0),
            Value::Pair(a, b) => write!(f, "(pair {a} {b})"),
            Value::Inl(a) => write!(f, "(inl {a})"),
            Value::Inr(a) => write!(f, "(inr {a})"),
            Value::FunS(g, x, body) => write!(f, "(funs {g} {x} {body})"),
            Value::FunC(g, x, body) => write!(f, "(func {g} {x} {body})"),
        }
    }
}

fn write_args(f: &mut Formatter<'_>, args: &[Value]) -> fmt::Result {
    for a in args {
        f.write_char(' ')?;
        a.fmt(f)?;
    }
    Ok(())
}

impl Display for StableExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            // numerals directly under `val` use the short form
            StableExpr::Val(Value::Num(n)) => write!(f, "(val {n})"),
            StableExpr::Val(v) => write!(f, "(val {v})"),
            StableExpr::Prim(op, args) => {
                write!(f, "(prim {}", op.name())?;
                write_args(f, args)?;
                f.write_char(')')
            }
            StableExpr::Mod(e) => write!(f, "(mod {e})"),
            StableExpr::Memo(e) => write!(f, "(memo {e})"),
            StableExpr::Apply(g, a) => write!(f, "(apps {g} {a})"),
            StableExpr::Let(e1, x, e2) => write!(f, "(let ({x} {e1}) {e2})"),
            StableExpr::LetPair(v, x1, x2, e) => write!(f, "(letp ({x1} {x2} {v}) {e})"),
            StableExpr::Case(v, x1, e1, x2, e2) => {
                write!(f, "(case {v} ({x1} {e1}) ({x2} {e2}))")
            }
        }
    }
}

impl Display for ChangeableExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ChangeableExpr::Write(v) => write!(f, "(write {v})"),
            ChangeableExpr::Read(v, x, e) => write!(f, "(read {v} ({x}) {e})"),
            ChangeableExpr::Memo(e) => write!(f, "(memo {e})"),
            ChangeableExpr::Apply(g, a) => write!(f, "(appc {g} {a})"),
            ChangeableExpr::Let(e1, x, e2) => write!(f, "(let ({x} {e1}) {e2})"),
            ChangeableExpr::LetPair(v, x1, x2, e) => write!(f, "(letp ({x1} {x2} {v}) {e})"),
            ChangeableExpr::Case(v, x1, e1, x2, e2) => {
                write!(f, "(case {v} ({x1} {e1}) ({x2} {e2}))")
            }
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Value(v) => v.fmt(f),
            Expr::Stable(e) => e.fmt(f),
            Expr::Changeable(e) => e.fmt(f),
        }
    }
}

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
