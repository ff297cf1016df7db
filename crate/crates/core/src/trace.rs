//! Execution traces.
//!
//! A stable trace records the modifiables allocated by a stable
//! evaluation. A changeable trace additionally records every read: the
//! location, the value seen, and the body that consumed it, which is what
//! change propagation re-runs when the value is different.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::store::{fmt_locset, LocSet, Location};
use crate::syntax::{parse_changeable, parse_value, ChangeableExpr, Name, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum STrace {
    Empty,
    Mod(Location, Box<CTrace>),
    Let(Box<STrace>, Box<STrace>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CTrace {
    Write(Value),
    Let(Box<STrace>, Box<CTrace>),
    Read {
        loc: Location,
        value: Value,
        var: Name,
        body: Box<ChangeableExpr>,
        rest: Box<CTrace>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SideConditionError {
    #[error("{rule}: both halves allocate {}", fmt_locset(.overlap))]
    Overlap { rule: &'static str, overlap: LocSet },
    #[error("{rule}: {loc} is also allocated by its own body")]
    SelfAllocated { rule: &'static str, loc: Location },
}

/// Either kind of trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trace {
    Stable(STrace),
    Changeable(CTrace),
}

pub trait Alloc {
    fn collect_alloc(&self, out: &mut LocSet);

    /// Every `mod` label in the trace, in left-to-right order, duplicates kept.
    fn collect_labels(&self, out: &mut Vec<Location>);

    /// The set of locations allocated by the trace.
    fn alloc(&self) -> LocSet {
        let mut out = LocSet::new();
        self.collect_alloc(&mut out);
        out
    }

    fn mod_labels(&self) -> Vec<Location> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }
}

impl Alloc for STrace {
    fn collect_alloc(&self, out: &mut LocSet) {
        crate::grow(|| match self {
            STrace::Empty => {}
            STrace::Mod(l, body) => {
                out.insert(*l);
                body.collect_alloc(out);
            }
            STrace::Let(t1, t2) => {
                t1.collect_alloc(out);
                t2.collect_alloc(out);
            }
        })
    }

    fn collect_labels(&self, out: &mut Vec<Location>) {
        crate::grow(|| match self {
            STrace::Empty => {}
            STrace::Mod(l, body) => {
                out.push(*l);
                body.collect_labels(out);
            }
            STrace::Let(t1, t2) => {
                t1.collect_labels(out);
                t2.collect_labels(out);
            }
        })
    }
}

impl Alloc for CTrace {
    fn collect_alloc(&self, out: &mut LocSet) {
        crate::grow(|| match self {
            CTrace::Write(_) => {}
            CTrace::Let(t1, t2) => {
                t1.collect_alloc(out);
                t2.collect_alloc(out);
            }
            CTrace::Read { rest, .. } => rest.collect_alloc(out),
        })
    }

    fn collect_labels(&self, out: &mut Vec<Location>) {
        crate::grow(|| match self {
            CTrace::Write(_) => {}
            CTrace::Let(t1, t2) => {
                t1.collect_labels(out);
                t2.collect_labels(out);
            }
            CTrace::Read { rest, .. } => rest.collect_labels(out),
        })
    }
}

impl Alloc for Trace {
    fn collect_alloc(&self, out: &mut LocSet) {
        match self {
            Trace::Stable(t) => t.collect_alloc(out),
            Trace::Changeable(t) => t.collect_alloc(out),
        }
    }

    fn collect_labels(&self, out: &mut Vec<Location>) {
        match self {
            Trace::Stable(t) => t.collect_labels(out),
            Trace::Changeable(t) => t.collect_labels(out),
        }
    }
}

pub fn alloc<T: Alloc + ?Sized>(t: &T) -> LocSet {
    t.alloc()
}

/// The side condition of the `let` rules: the two halves allocate
/// disjoint sets of locations.
pub fn assert_disjoint_alloc(
    first: &impl Alloc,
    second: &impl Alloc,
) -> Result<(), SideConditionError> {
    let a = first.alloc();
    let b = second.alloc();
    let overlap: LocSet = a.intersection(&b).copied().collect();
    if overlap.is_empty() {
        Ok(())
    } else {
        Err(SideConditionError::Overlap { rule: "let", overlap })
    }
}

/// Labels that occur on more than one `mod` node.
pub fn duplicate_labels(t: &impl Alloc) -> LocSet {
    let mut seen = LocSet::new();
    let mut dups = LocSet::new();
    for l in t.mod_labels() {
        if !seen.insert(l) {
            dups.insert(l);
        }
    }
    dups
}

impl CTrace {
    /// The write that ends this changeable trace, following let bodies and
    /// read continuations.
    pub fn final_write(&self) -> &Value {
        let mut t = self;
        loop {
            match t {
                CTrace::Write(v) => return v,
                CTrace::Let(_, rest) => t = rest,
                CTrace::Read { rest, .. } => t = rest,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("malformed trace JSON: {0}")]
pub struct TraceJsonError(pub String);

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Node ids are content hashes, so a subtrace kept by propagation keeps its id.
fn node(kind: &str, mut fields: Map<String, Json>) -> Json {
    let mut key = kind.to_string();
    let sorted: BTreeMap<_, _> = fields.iter().collect();
    for (k, v) in sorted {
        key.push('|');
        key.push_str(k);
        key.push('=');
        match v {
            Json::Object(o) => key.push_str(o.get("id").and_then(Json::as_str).unwrap_or("")),
            other => key.push_str(&other.to_string()),
        }
    }
    fields.insert("id".into(), json!(format!("{:016x}", fnv1a(key.as_bytes()))));
    fields.insert("kind".into(), json!(kind));
    Json::Object(fields)
}

fn fields(pairs: Vec<(&str, Json)>) -> Map<String, Json> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn strace_to_json(t: &STrace) -> Json {
    crate::grow(|| match t {
        STrace::Empty => node("empty", Map::new()),
        STrace::Mod(l, body) => node("mod", fields(vec![("loc", json!(l.0)), ("body", ctrace_to_json(body))])),
        STrace::Let(t1, t2) => node(
            "let",
            fields(vec![("first", strace_to_json(t1)), ("second", strace_to_json(t2))]),
        ),
    })
}

pub fn ctrace_to_json(t: &CTrace) -> Json {
    crate::grow(|| match t {
        CTrace::Write(v) => node("write", fields(vec![("value", json!(v.to_string()))])),
        CTrace::Let(t1, t2) => node(
            "let",
            fields(vec![("first", strace_to_json(t1)), ("second", ctrace_to_json(t2))]),
        ),
        CTrace::Read { loc, value, var, body, rest } => node(
            "read",
            fields(vec![
                ("loc", json!(loc.0)),
                ("value", json!(value.to_string())),
                ("var", json!(var.as_str())),
                ("expr", json!(body.to_string())),
                ("rest", ctrace_to_json(rest)),
            ]),
        ),
    })
}

pub fn trace_to_json(t: &Trace) -> Json {
    match t {
        Trace::Stable(s) => strace_to_json(s),
        Trace::Changeable(c) => ctrace_to_json(c),
    }
}

fn err(msg: impl Into<String>) -> TraceJsonError {
    TraceJsonError(msg.into())
}

fn get<'a>(j: &'a Json, key: &str) -> Result<&'a Json, TraceJsonError> {
    j.get(key).ok_or_else(|| err(format!("missing field `{key}`")))
}

fn kind(j: &Json) -> Result<&str, TraceJsonError> {
    get(j, "kind")?.as_str().ok_or_else(|| err("`kind` must be a string"))
}

fn loc(j: &Json) -> Result<Location, TraceJsonError> {
    get(j, "loc")?.as_u64().map(Location).ok_or_else(|| err("`loc` must be a natural number"))
}

fn text<'a>(j: &'a Json, key: &str) -> Result<&'a str, TraceJsonError> {
    get(j, key)?.as_str().ok_or_else(|| err(format!("`{key}` must be a string")))
}

fn value_field(j: &Json) -> Result<Value, TraceJsonError> {
    parse_value(text(j, "value")?).map_err(|e| err(e.to_string()))
}

pub fn strace_from_json(j: &Json) -> Result<STrace, TraceJsonError> {
    match kind(j)? {
        "empty" => Ok(STrace::Empty),
        "mod" => Ok(STrace::Mod(loc(j)?, Box::new(ctrace_from_json(get(j, "body")?)?))),
        "let" => Ok(STrace::Let(
            Box::new(strace_from_json(get(j, "first")?)?),
            Box::new(strace_from_json(get(j, "second")?)?),
        )),
        other => Err(err(format!("`{other}` is not a stable trace node"))),
    }
}

pub fn ctrace_from_json(j: &Json) -> Result<CTrace, TraceJsonError> {
    match kind(j)? {
        "write" => Ok(CTrace::Write(value_field(j)?)),
        "let" => Ok(CTrace::Let(
            Box::new(strace_from_json(get(j, "first")?)?),
            Box::new(ctrace_from_json(get(j, "second")?)?),
        )),
        "read" => Ok(CTrace::Read {
            loc: loc(j)?,
            value: value_field(j)?,
            var: Name::new(text(j, "var")?),
            body: Box::new(parse_changeable(text(j, "expr")?).map_err(|e| err(e.to_string()))?),
            rest: Box::new(ctrace_from_json(get(j, "rest")?)?),
        }),
        other => Err(err(format!("`{other}` is not a changeable trace node"))),
    }
}

/// Ids of every node in a serialized trace, in pre-order.
pub fn node_ids(j: &Json) -> Vec<String> {
    let mut out = Vec::new();
    fn walk(j: &Json, out: &mut Vec<String>) {
        if let Some(id) = j.get("id").and_then(Json::as_str) {
            out.push(id.to_string());
        }
        for key in ["body", "first", "second", "rest"] {
            if let Some(child) = j.get(key).filter(|c| c.is_object()) {
                walk(child, out);
            }
        }
    }
    walk(j, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(n: u64) -> Location {
        Location(n)
    }

    /// let (mod l1 (write 2)) (read l1 -> 2, x.e, write 3)
    fn sample() -> CTrace {
        CTrace::Let(
            Box::new(STrace::Mod(l(1), Box::new(CTrace::Write(Value::num(2))))),
            Box::new(CTrace::Read {
                loc: l(1),
                value: Value::num(2),
                var: "x".into(),
                body: Box::new(ChangeableExpr::Write(Value::var("x"))),
                rest: Box::new(CTrace::Write(Value::num(3))),
            }),
        )
    }

    #[test]
    fn alloc_of_leaves_is_empty() {
        assert!(STrace::Empty.alloc().is_empty());
        assert!(CTrace::Write(Value::num(1)).alloc().is_empty());
    }

    #[test]
    fn alloc_of_sample() {
        assert_eq!(sample().alloc(), [l(1)].into_iter().collect());
    }

    #[test]
    fn disjointness() {
        let m = |n, v| STrace::Mod(l(n), Box::new(CTrace::Write(Value::num(v))));
        assert!(assert_disjoint_alloc(&STrace::Empty, &STrace::Empty).is_ok());
        let e = assert_disjoint_alloc(&m(0, 1), &m(0, 2)).unwrap_err();
        assert_eq!(e, SideConditionError::Overlap { rule: "let", overlap: [l(0)].into_iter().collect() });
        assert!(assert_disjoint_alloc(&m(0, 1), &m(1, 1)).is_ok());
    }

    #[test]
    fn labels_and_duplicates() {
        let t = STrace::Let(
            Box::new(STrace::Mod(l(0), Box::new(sample()))),
            Box::new(STrace::Mod(l(1), Box::new(CTrace::Write(Value::Unit)))),
        );
        assert_eq!(t.mod_labels(), vec![l(0), l(1), l(1)]);
        assert_eq!(duplicate_labels(&t), [l(1)].into_iter().collect());
    }

    #[test]
    fn final_write_follows_spine() {
        assert_eq!(sample().final_write(), &Value::num(3));
    }

    #[test]
    fn json_round_trip() {
        let t = STrace::Let(
            Box::new(STrace::Mod(l(0), Box::new(sample()))),
            Box::new(STrace::Empty),
        );
        let j = strace_to_json(&t);
        assert_eq!(j["kind"], "let");
        assert_eq!(j["first"]["kind"], "mod");
        assert_eq!(j["first"]["loc"], 0);
        assert_eq!(strace_from_json(&j).unwrap(), t);
        let text = serde_json::to_string(&j).unwrap();
        let back: Json = serde_json::from_str(&text).unwrap();
        assert_eq!(strace_from_json(&back).unwrap(), t);
    }

    #[test]
    fn ids_depend_only_on_content() {
        let a = ctrace_to_json(&sample());
        let b = ctrace_to_json(&sample());
        assert_eq!(node_ids(&a), node_ids(&b));
        let changed = ctrace_to_json(&CTrace::Write(Value::num(4)));
        assert_ne!(a["id"], changed["id"]);
        // the unchanged left half keeps its id inside a different parent
        let parent = strace_to_json(&STrace::Let(
            Box::new(STrace::Mod(l(1), Box::new(CTrace::Write(Value::num(2))))),
            Box::new(STrace::Empty),
        ));
        assert_eq!(parent["first"]["id"], a["first"]["id"]);
    }

    #[test]
    fn json_rejects_bad_nodes() {
        assert!(strace_from_json(&json!({"kind": "write", "value": "(num 1)"})).is_err());
        assert!(ctrace_from_json(&json!({"kind": "write"})).is_err());
        assert!(strace_from_json(&json!({"kind": "mod", "loc": -1, "body": {"kind": "write", "value": "(unit)"}})).is_err());
    }
}
