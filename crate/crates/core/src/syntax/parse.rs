//! Reader for the s-expression surface syntax.
//!
//! Parsing happens in two passes: text to a positioned s-expression tree,
//! then tree to AST. The second pass knows which syntactic class it expects
//! at each position, so a changeable form in stable position (or the
//! reverse) gets its own diagnostic instead of a generic syntax error.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use thiserror::Error;

use super::ast::{ChangeableExpr, Name, PrimOp, Program, StableExpr, Value};
use super::subst::Term;
use crate::store::{Location, Store};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    Stable,
    Changeable,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::Stable => "stable",
            Class::Changeable => "changeable",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: `{form}` is a {found} form but a {expected} expression is expected here")]
    Stratification {
        pos: Pos,
        form: String,
        found: Class,
        expected: Class,
    },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::Stratification { pos, .. } => *pos,
        }
    }

    fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        ParseError::Syntax { pos, msg: msg.into() }
    }
}

type Result<T> = std::result::Result<T, ParseError>;

#[derive(Debug, Clone)]
enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Reader {
            chars: text.chars().peekable(),
            pos: Pos { line, col: 1 },
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexp> {
        self.skip_trivia();
        let start = self.pos;
        match self.chars.peek() {
            None => Err(ParseError::syntax(start, "unexpected end of input")),
            Some(')') => Err(ParseError::syntax(start, "unexpected `)`")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return Err(ParseError::syntax(start, "unclosed `(`")),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut atom = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    atom.push(c);
                    self.bump();
                }
                Ok(Sexp::Atom(atom, start))
            }
        }
    }

    /// Reads exactly one datum and requires nothing but trivia after it.
    fn read_only(mut self) -> Result<Sexp> {
        let s = self.read()?;
        self.skip_trivia();
        if self.chars.peek().is_some() {
            return Err(ParseError::syntax(self.pos, "trailing input after expression"));
        }
        Ok(s)
    }
}

fn is_integer(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn integer(s: &str, pos: Pos) -> Result<BigInt> {
    if !is_integer(s) {
        return Err(ParseError::syntax(pos, format!("expected an integer, found `{s}`")));
    }
    BigInt::from_str(s).map_err(|e| ParseError::syntax(pos, e.to_string()))
}

fn ident(s: &Sexp) -> Result<Name> {
    match s {
        Sexp::Atom(a, pos) if is_integer(a) => {
            Err(ParseError::syntax(*pos, format!("expected an identifier, found `{a}`")))
        }
        Sexp::Atom(a, _) => Ok(Name::new(a)),
        Sexp::List(_, pos) => Err(ParseError::syntax(*pos, "expected an identifier, found a list")),
    }
}

fn head(items: &[Sexp], pos: Pos) -> Result<&str> {
    match items.first() {
        Some(Sexp::Atom(a, _)) => Ok(a),
        Some(other) => Err(ParseError::syntax(other.pos(), "expected a keyword")),
        None => Err(ParseError::syntax(pos, "empty list")),
    }
}

fn arity(items: &[Sexp], n: usize, form: &str, pos: Pos) -> Result<()> {
    if items.len() != n + 1 {
        return Err(ParseError::syntax(
            pos,
            format!("`{form}` takes {n} argument(s), found {}", items.len() - 1),
        ));
    }
    Ok(())
}

fn list(s: &Sexp, what: &str) -> Result<Vec<Sexp>> {
    match s {
        Sexp::List(items, _) => Ok(items.clone()),
        Sexp::Atom(_, pos) => Err(ParseError::syntax(*pos, format!("expected {what}"))),
    }
}

const STABLE_ONLY: &[&str] = &["val", "prim", "mod", "apps"];
const CHANGEABLE_ONLY: &[&str] = &["write", "read", "appc"];

fn value(s: &Sexp) -> Result<Value> {
    let (items, pos) = match s {
        Sexp::Atom(a, pos) if is_integer(a) => return Ok(Value::Num(integer(a, *pos)?)),
        Sexp::Atom(a, _) => return Ok(Value::Var(Name::new(a))),
        Sexp::List(items, pos) => (items, *pos),
    };
    let kw = head(items, pos)?;
    match kw {
        "unit" => {
            arity(items, 0, kw, pos)?;
            Ok(Value::Unit)
        }
        "num" => {
            arity(items, 1, kw, pos)?;
            match &items[1] {
                Sexp::Atom(a, p) => Ok(Value::Num(integer(a, *p)?)),
                other => Err(ParseError::syntax(other.pos(), "expected an integer")),
            }
        }
        "loc" => {
            arity(items, 1, kw, pos)?;
            match &items[1] {
                Sexp::Atom(a, p) => a
                    .parse::<u64>()
                    .map(|n| Value::Loc(Location(n)))
                    .map_err(|_| ParseError::syntax(*p, format!("expected a location index, found `{a}`"))),
                other => Err(ParseError::syntax(other.pos(), "expected a location index")),
            }
        }
        "pair" => {
            arity(items, 2, kw, pos)?;
            Ok(Value::pair(value(&items[1])?, value(&items[2])?))
        }
        "inl" => {
            arity(items, 1, kw, pos)?;
            Ok(Value::inl(value(&items[1])?))
        }
        "inr" => {
            arity(items, 1, kw, pos)?;
            Ok(Value::inr(value(&items[1])?))
        }
        "funs" => {
            arity(items, 3, kw, pos)?;
            Ok(Value::FunS(ident(&items[1])?, ident(&items[2])?, Box::new(stable(&items[3])?)))
        }
        "func" => {
            arity(items, 3, kw, pos)?;
            Ok(Value::FunC(
                ident(&items[1])?,
                ident(&items[2])?,
                Box::new(changeable(&items[3])?),
            ))
        }
        other => Err(ParseError::syntax(pos, format!("`{other}` is not a value form"))),
    }
}

/// `(x e)` as used by `let`.
fn let_binding<T>(s: &Sexp, bound: impl Fn(&Sexp) -> Result<T>) -> Result<(Name, T)> {
    let items = list(s, "a `(name expr)` binding")?;
    if items.len() != 2 {
        return Err(ParseError::syntax(s.pos(), "a let binding has the form `(name expr)`"));
    }
    Ok((ident(&items[0])?, bound(&items[1])?))
}

/// `(x1 x2 v)` as used by `letp`.
fn pair_binding(s: &Sexp) -> Result<(Name, Name, Value)> {
    let items = list(s, "a `(name name value)` binding")?;
    if items.len() != 3 {
        return Err(ParseError::syntax(s.pos(), "a letp binding has the form `(name name value)`"));
    }
    Ok((ident(&items[0])?, ident(&items[1])?, value(&items[2])?))
}

/// `(x e)` as used by `case` branches.
fn branch<T>(s: &Sexp, body: impl Fn(&Sexp) -> Result<T>) -> Result<(Name, T)> {
    let items = list(s, "a `(name expr)` case branch")?;
    if items.len() != 2 {
        return Err(ParseError::syntax(s.pos(), "a case branch has the form `(name expr)`"));
    }
    Ok((ident(&items[0])?, body(&items[1])?))
}

fn misplaced(s: &Sexp, kw: &str, expected: Class) -> ParseError {
    ParseError::Stratification {
        pos: s.pos(),
        form: kw.to_string(),
        found: match expected {
            Class::Stable => Class::Changeable,
            Class::Changeable => Class::Stable,
        },
        expected,
    }
}

fn stable(s: &Sexp) -> Result<StableExpr> {
    let (items, pos) = match s {
        Sexp::List(items, pos) => (items, *pos),
        Sexp::Atom(a, pos) => {
            return Err(ParseError::syntax(*pos, format!("expected a stable expression, found `{a}`")))
        }
    };
    let kw = head(items, pos)?;
    if CHANGEABLE_ONLY.contains(&kw) {
        return Err(misplaced(s, kw, Class::Stable));
    }
    match kw {
        "val" => {
            arity(items, 1, kw, pos)?;
            Ok(StableExpr::Val(value(&items[1])?))
        }
        "prim" => {
            let Some(op_sexp) = items.get(1) else {
                return Err(ParseError::syntax(pos, "`prim` needs an operator name"));
            };
            let op = match op_sexp {
                Sexp::Atom(a, p) => PrimOp::from_name(a)
                    .ok_or_else(|| ParseError::syntax(*p, format!("unknown primitive `{a}`")))?,
                other => return Err(ParseError::syntax(other.pos(), "expected an operator name")),
            };
            let args = items[2..].iter().map(value).collect::<Result<Vec<_>>>()?;
            Ok(StableExpr::Prim(op, args))
        }
        "mod" => {
            arity(items, 1, kw, pos)?;
            Ok(StableExpr::Mod(Box::new(changeable(&items[1])?)))
        }
        "memo" => {
            arity(items, 1, kw, pos)?;
            Ok(StableExpr::Memo(Box::new(stable(&items[1])?)))
        }
        "apps" => {
            arity(items, 2, kw, pos)?;
            Ok(StableExpr::Apply(value(&items[1])?, value(&items[2])?))
        }
        "let" => {
            arity(items, 2, kw, pos)?;
            let (x, e1) = let_binding(&items[1], stable)?;
            Ok(StableExpr::Let(Box::new(e1), x, Box::new(stable(&items[2])?)))
        }
        "letp" => {
            arity(items, 2, kw, pos)?;
            let (x1, x2, v) = pair_binding(&items[1])?;
            Ok(StableExpr::LetPair(v, x1, x2, Box::new(stable(&items[2])?)))
        }
        "case" => {
            arity(items, 3, kw, pos)?;
            let v = value(&items[1])?;
            let (x1, e1) = branch(&items[2], stable)?;
            let (x2, e2) = branch(&items[3], stable)?;
            Ok(StableExpr::Case(v, x1, Box::new(e1), x2, Box::new(e2)))
        }
        other => Err(ParseError::syntax(pos, format!("`{other}` is not a stable expression form"))),
    }
}

fn changeable(s: &Sexp) -> Result<ChangeableExpr> {
    let (items, pos) = match s {
        Sexp::List(items, pos) => (items, *pos),
        Sexp::Atom(a, pos) => {
            return Err(ParseError::syntax(
                *pos,
                format!("expected a changeable expression, found `{a}`"),
            ))
        }
    };
    let kw = head(items, pos)?;
    if STABLE_ONLY.contains(&kw) {
        return Err(misplaced(s, kw, Class::Changeable));
    }
    match kw {
        "write" => {
            arity(items, 1, kw, pos)?;
            Ok(ChangeableExpr::Write(value(&items[1])?))
        }
        "read" => {
            arity(items, 3, kw, pos)?;
            let v = value(&items[1])?;
            let binder = list(&items[2], "a `(name)` binder")?;
            if binder.len() != 1 {
                return Err(ParseError::syntax(items[2].pos(), "a read binder has the form `(name)`"));
            }
            let x = ident(&binder[0])?;
            Ok(ChangeableExpr::Read(v, x, Box::new(changeable(&items[3])?)))
        }
        "memo" => {
            arity(items, 1, kw, pos)?;
            Ok(ChangeableExpr::Memo(Box::new(changeable(&items[1])?)))
        }
        "appc" => {
            arity(items, 2, kw, pos)?;
            Ok(ChangeableExpr::Apply(value(&items[1])?, value(&items[2])?))
        }
        "let" => {
            arity(items, 2, kw, pos)?;
            let (x, e1) = let_binding(&items[1], stable)?;
            Ok(ChangeableExpr::Let(Box::new(e1), x, Box::new(changeable(&items[2])?)))
        }
        "letp" => {
            arity(items, 2, kw, pos)?;
            let (x1, x2, v) = pair_binding(&items[1])?;
            Ok(ChangeableExpr::LetPair(v, x1, x2, Box::new(changeable(&items[2])?)))
        }
        "case" => {
            arity(items, 3, kw, pos)?;
            let v = value(&items[1])?;
            let (x1, e1) = branch(&items[2], changeable)?;
            let (x2, e2) = branch(&items[3], changeable)?;
            Ok(ChangeableExpr::Case(v, x1, Box::new(e1), x2, Box::new(e2)))
        }
        other => Err(ParseError::syntax(
            pos,
            format!("`{other}` is not a changeable expression form"),
        )),
    }
}

/// Parses a program, which is a single stable expression.
pub fn parse(text: &str) -> Result<Program> {
    parse_stable(text).map(|root| Program { root })
}

pub fn parse_stable(text: &str) -> Result<StableExpr> {
    stable(&Reader::new(text, 1).read_only()?)
}

pub fn parse_changeable(text: &str) -> Result<ChangeableExpr> {
    changeable(&Reader::new(text, 1).read_only()?)
}

pub fn parse_value(text: &str) -> Result<Value> {
    value(&Reader::new(text, 1).read_only()?)
}

/// Splits `lN = <value>` lines. Blank lines and `;` comments are skipped.
fn binding_lines(text: &str) -> Result<Vec<(Location, Value, Pos)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let content = line.split(';').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let pos = Pos { line: lineno, col: 1 };
        let Some((lhs, rhs)) = content.split_once('=') else {
            return Err(ParseError::syntax(pos, "expected `lN = <value>`"));
        };
        let loc = lhs
            .trim()
            .strip_prefix('l')
            .and_then(|n| n.parse::<u64>().ok())
            .map(Location)
            .ok_or_else(|| ParseError::syntax(pos, format!("`{}` is not a location name", lhs.trim())))?;
        let col = lhs.chars().count() + 2;
        let mut reader = Reader::new(rhs, lineno);
        reader.pos.col = col;
        let v = value(&reader.read_only()?)?;
        if !v.is_closed() {
            return Err(ParseError::syntax(pos, format!("value bound to {loc} has free variables")));
        }
        out.push((loc, v, pos));
    }
    Ok(out)
}

/// Parses a store literal. Each value may only mention locations with a
/// smaller index than the one it is bound to, which rules out cycles.
pub fn parse_store(text: &str) -> Result<Store> {
    let mut store = Store::new();
    for (loc, v, pos) in binding_lines(text)? {
        if store.contains(loc) {
            return Err(ParseError::syntax(pos, format!("{loc} is bound twice")));
        }
        if let Some(bad) = crate::store::locations_in(&v.clone().into()).into_iter().find(|l| *l >= loc) {
            return Err(ParseError::syntax(
                pos,
                format!("{loc} may only refer to lower-numbered locations, found {bad}"),
            ));
        }
        store.insert(loc, v);
    }
    Ok(store)
}

/// Parses an edits file: `lN = <value>` lines whose values are location-free.
pub fn parse_edits(text: &str) -> Result<Vec<(Location, Value)>> {
    binding_lines(text)?
        .into_iter()
        .map(|(loc, v, pos)| {
            if v.mentions_location() {
                Err(ParseError::syntax(pos, format!("edit of {loc} must be location-free")))
            } else {
                Ok((loc, v))
            }
        })
        .collect()
}
