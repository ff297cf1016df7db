use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;

use crate::store::Location;

/// An identifier. Cloning is a reference-count bump.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrimOp {
    Not,
    Add,
    Sub,
    Eq,
    Lt,
}

impl PrimOp {
    pub const ALL: [PrimOp; 5] = [PrimOp::Not, PrimOp::Add, PrimOp::Sub, PrimOp::Eq, PrimOp::Lt];

    pub fn name(self) -> &'static str {
        match self {
            PrimOp::Not => "not",
            PrimOp::Add => "add",
            PrimOp::Sub => "sub",
            PrimOp::Eq => "eq",
            PrimOp::Lt => "lt",
        }
    }

    pub fn from_name(s: &str) -> Option<PrimOp> {
        PrimOp::ALL.into_iter().find(|op| op.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            PrimOp::Not => 1,
            _ => 2,
        }
    }

    /// Applies the operator. `None` when the arguments do not have the
    /// shape the operator expects (wrong arity or non-numeric operands).
    ///
    /// Booleans are numbers: `0` is false and every other number is true.
    /// `eq` and `lt` answer `1` or `0`.
    pub fn apply(self, args: &[Value]) -> Option<Value> {
        if args.len() != self.arity() {
            return None;
        }
        let num = |v: &Value| match v {
            Value::Num(n) => Some(n.clone()),
            _ => None,
        };
        let truth = |b: bool| Value::Num(BigInt::from(b as u8));
        Some(match self {
            PrimOp::Not => {
                let n = num(&args[0])?;
                truth(n == BigInt::from(0))
            }
            PrimOp::Add => Value::Num(num(&args[0])? + num(&args[1])?),
            PrimOp::Sub => Value::Num(num(&args[0])? - num(&args[1])?),
            PrimOp::Eq => truth(num(&args[0])? == num(&args[1])?),
            PrimOp::Lt => truth(num(&args[0])? < num(&args[1])?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Unit,
    Num(BigInt),
    Var(Name),
    Loc(Location),
    Pair(Box<Value>, Box<Value>),
    Inl(Box<Value>),
    Inr(Box<Value>),
    /// Stable function `funs f x. e`; `f` names the function itself inside `e`.
    FunS(Name, Name, Box<StableExpr>),
    /// Changeable function `func f x. e`.
    FunC(Name, Name, Box<ChangeableExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StableExpr {
    Val(Value),
    Prim(PrimOp, Vec<Value>),
    Mod(Box<ChangeableExpr>),
    Memo(Box<StableExpr>),
    Apply(Value, Value),
    Let(Box<StableExpr>, Name, Box<StableExpr>),
    LetPair(Value, Name, Name, Box<StableExpr>),
    Case(Value, Name, Box<StableExpr>, Name, Box<StableExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ChangeableExpr {
    Write(Value),
    Read(Value, Name, Box<ChangeableExpr>),
    Memo(Box<ChangeableExpr>),
    Apply(Value, Value),
    Let(Box<StableExpr>, Name, Box<ChangeableExpr>),
    LetPair(Value, Name, Name, Box<ChangeableExpr>),
    Case(Value, Name, Box<ChangeableExpr>, Name, Box<ChangeableExpr>),
}

/// A whole program is a stable expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub root: StableExpr,
}

/// Any of the three syntactic classes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Value(Value),
    Stable(StableExpr),
    Changeable(ChangeableExpr),
}

impl Value {
    pub fn num(n: i64) -> Value {
        Value::Num(BigInt::from(n))
    }

    pub fn var(x: &str) -> Value {
        Value::Var(Name::new(x))
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn inl(v: Value) -> Value {
        Value::Inl(Box::new(v))
    }

    pub fn inr(v: Value) -> Value {
        Value::Inr(Box::new(v))
    }

    pub fn fun_s(f: &str, x: &str, body: StableExpr) -> Value {
        Value::FunS(Name::new(f), Name::new(x), Box::new(body))
    }

    pub fn fun_c(f: &str, x: &str, body: ChangeableExpr) -> Value {
        Value::FunC(Name::new(f), Name::new(x), Box::new(body))
    }

    pub fn is_function(&self) -> bool {
        matches!(self, Value::FunS(..) | Value::FunC(..))
    }
}

impl From<Value> for Expr {
    fn from(v: Value) -> Self {
        Expr::Value(v)
    }
}

impl From<StableExpr> for Expr {
    fn from(e: StableExpr) -> Self {
        Expr::Stable(e)
    }
}

impl From<ChangeableExpr> for Expr {
    fn from(e: ChangeableExpr) -> Self {
        Expr::Changeable(e)
    }
}
