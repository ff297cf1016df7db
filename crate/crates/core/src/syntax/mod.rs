//! Abstract syntax, substitution, and the s-expression surface syntax.

mod alpha;
mod ast;
mod parse;
mod print;
mod subst;

pub use alpha::{alpha_eq_stable, alpha_eq_value};
pub use ast::{ChangeableExpr, Expr, Name, PrimOp, Program, StableExpr, Value};
pub use parse::{
    parse, parse_changeable, parse_edits, parse_stable, parse_store, parse_value, Class, ParseError, Pos,
};
pub use print::pretty;
pub use subst::{substitute, Term};
