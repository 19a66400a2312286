//! A naive, structurally recursive reference evaluator for template bodies,
//! with its own random generator and its own renderer to the on-disk format.
//!
//! Nothing here shares code with the production engine. The generator
//! builds a reference tree, renders it to JSON text (bracket variables and
//! `$cond` objects), and evaluates the tree directly.

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{Map, Value};

/// Names the generator draws from. `sym` is declared as a symbol.
pub const NAMES: [&str; 5] = ["a", "b", "c", "flag", "sym"];
pub const SYMBOLS: [&str; 1] = ["sym"];

#[derive(Clone, Debug)]
pub enum Pred {
    Lit(Value),
    Ident(String),
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Cmp(&'static str, Box<Pred>, Box<Pred>),
    In(Box<Pred>, Vec<Value>),
}

#[derive(Clone, Debug)]
pub enum Seg {
    Text(String),
    Var(String),
}

#[derive(Clone, Debug)]
pub enum Expr {
    Atom(Value),
    Obj(Vec<(String, Expr)>),
    List(Vec<Expr>),
    Var(String),
    Interp(Vec<Seg>),
    Cond(Pred, Option<Box<Expr>>, Option<Box<Expr>>),
}

/// A settings value: an atomic or a list of strings.
pub type Settings = Vec<(String, Value)>;

// ---------------------------------------------------------------------------
// Reference semantics

fn lookup(settings: &Settings, name: &str) -> Value {
    if let Some((_, v)) = settings.iter().find(|(k, _)| k == name) {
        return v.clone();
    }
    if SYMBOLS.contains(&name) {
        return Value::String(name.to_string());
    }
    Value::Null
}

fn number_text(n: f64) -> String {
    if n.fract() == 0.0 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

fn splice(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => number_text(n.as_f64().unwrap()),
        Value::String(s) => s.clone(),
        Value::Array(items) => items
            .iter()
            .map(|i| i.as_str().unwrap().to_string())
            .collect::<Vec<_>>()
            .join(","),
        Value::Object(_) => unreachable!("settings never hold objects"),
    }
}

fn truthy(v: &Value) -> bool {
    match v {
        Value::Null => false,
        Value::Bool(b) => *b,
        Value::Number(n) => n.as_f64().unwrap() != 0.0,
        Value::String(s) => !s.is_empty(),
        Value::Array(a) => !a.is_empty(),
        Value::Object(_) => true,
    }
}

fn same(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        _ => a == b,
    }
}

fn order(a: &Value, b: &Value) -> Option<std::cmp::Ordering> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64().unwrap().partial_cmp(&y.as_f64().unwrap()),
        (Value::String(x), Value::String(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

fn pred_value(p: &Pred, s: &Settings) -> Value {
    match p {
        Pred::Lit(v) => v.clone(),
        Pred::Ident(n) => lookup(s, n),
        Pred::Not(x) => Value::Bool(!truthy(&pred_value(x, s))),
        Pred::And(x, y) => Value::Bool(truthy(&pred_value(x, s)) && truthy(&pred_value(y, s))),
        Pred::Or(x, y) => Value::Bool(truthy(&pred_value(x, s)) || truthy(&pred_value(y, s))),
        Pred::Cmp(op, x, y) => {
            let (x, y) = (pred_value(x, s), pred_value(y, s));
            Value::Bool(match *op {
                "==" => same(&x, &y),
                "!=" => !same(&x, &y),
                "<" => order(&x, &y).is_some_and(|o| o.is_lt()),
                "<=" => order(&x, &y).is_some_and(|o| o.is_le()),
                ">" => order(&x, &y).is_some_and(|o| o.is_gt()),
                ">=" => order(&x, &y).is_some_and(|o| o.is_ge()),
                other => unreachable!("operator {other}"),
            })
        }
        Pred::In(x, options) => {
            let x = pred_value(x, s);
            Value::Bool(options.iter().any(|o| same(&x, o)))
        }
    }
}

pub fn holds(p: &Pred, s: &Settings) -> bool {
    truthy(&pred_value(p, s))
}

/// `None` is bottom.
pub fn eval(e: &Expr, s: &Settings) -> Option<Value> {
    match e {
        Expr::Atom(v) => Some(v.clone()),
        Expr::Obj(fields) => {
            let mut out = Map::new();
            for (k, v) in fields {
                if let Some(v) = eval(v, s) {
                    out.insert(k.clone(), v);
                }
            }
            Some(Value::Object(out))
        }
        Expr::List(items) => Some(Value::Array(items.iter().filter_map(|i| eval(i, s)).collect())),
        Expr::Var(n) => Some(lookup(s, n)),
        Expr::Interp(segs) => Some(Value::String(
            segs.iter()
                .map(|seg| match seg {
                    Seg::Text(t) => t.clone(),
                    Seg::Var(n) => splice(&lookup(s, n)),
                })
                .collect(),
        )),
        Expr::Cond(p, t, f) => {
            let branch = if holds(p, s) { t } else { f };
            branch.as_ref().and_then(|b| eval(b, s))
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering to the document format

fn escape_text(t: &str) -> String {
    t.replace('[', "[[")
}

fn literal_source(v: &Value, double_quotes: bool) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => number_text(n.as_f64().unwrap()),
        Value::String(s) => {
            let q = if double_quotes { '"' } else { '\'' };
            let mut out = String::from(q);
            for c in s.chars() {
                if c == q || c == '\\' {
                    out.push('\\');
                }
                out.push(c);
            }
            out.push(q);
            out
        }
        _ => unreachable!("predicate literals are atomic"),
    }
}

fn level(p: &Pred) -> u8 {
    match p {
        Pred::Or(..) => 0,
        Pred::And(..) => 1,
        Pred::Cmp(..) | Pred::In(..) => 2,
        Pred::Not(..) => 3,
        Pred::Lit(_) | Pred::Ident(_) => 4,
    }
}

/// Renders with the fewest parentheses the precedence needs, plus random
/// redundant ones, random spacing and random quote style.
pub fn pred_source<R: Rng>(p: &Pred, rng: &mut R) -> String {
    fn wrap<R: Rng>(child: &Pred, min_level: u8, rng: &mut R) -> String {
        let inner = pred_source(child, rng);
        if level(child) < min_level || rng.gen_ratio(1, 8) {
            format!("({inner})")
        } else {
            inner
        }
    }
    let sp = |rng: &mut R| if rng.gen_bool(0.5) { " " } else { "" };
    match p {
        Pred::Lit(v) => literal_source(v, rng.gen_bool(0.5)),
        Pred::Ident(n) => n.clone(),
        Pred::Not(x) => format!("!{}", wrap(x, 3, rng)),
        Pred::And(x, y) => {
            let l = wrap(x, 1, rng);
            let r = wrap(y, 2, rng);
            format!("{l}{}&&{}{r}", sp(rng), sp(rng))
        }
        Pred::Or(x, y) => {
            let l = wrap(x, 0, rng);
            let r = wrap(y, 1, rng);
            format!("{l}{}||{}{r}", sp(rng), sp(rng))
        }
        Pred::Cmp(op, x, y) => {
            let spelled = match *op {
                "==" if rng.gen_ratio(1, 4) => "===",
                "!=" if rng.gen_ratio(1, 4) => "!==",
                other => other,
            };
            let l = wrap(x, 3, rng);
            let r = wrap(y, 3, rng);
            format!("{l}{}{spelled}{}{r}", sp(rng), sp(rng))
        }
        Pred::In(x, options) => {
            let l = wrap(x, 3, rng);
            let opts: Vec<String> = options.iter().map(|o| literal_source(o, rng.gen_bool(0.5))).collect();
            format!("{l} in [{}]", opts.join(", "))
        }
    }
}

pub fn to_document<R: Rng>(e: &Expr, rng: &mut R) -> Value {
    match e {
        Expr::Atom(Value::String(s)) => Value::String(escape_text(s)),
        Expr::Atom(v) => v.clone(),
        Expr::Obj(fields) => Value::Object(fields.iter().map(|(k, v)| (k.clone(), to_document(v, rng))).collect()),
        Expr::List(items) => Value::Array(items.iter().map(|i| to_document(i, rng)).collect()),
        Expr::Var(n) => Value::String(format!("[{n}]")),
        Expr::Interp(segs) => Value::String(
            segs.iter()
                .map(|s| match s {
                    Seg::Text(t) => escape_text(t),
                    Seg::Var(n) => format!("[{n}]"),
                })
                .collect(),
        ),
        Expr::Cond(p, t, f) => {
            let mut c = Map::new();
            c.insert("query".into(), Value::String(pred_source(p, rng)));
            if let Some(t) = t {
                c.insert("true".into(), to_document(t, rng));
            }
            if let Some(f) = f {
                c.insert("false".into(), to_document(f, rng));
            }
            let mut o = Map::new();
            o.insert("$cond".into(), Value::Object(c));
            Value::Object(o)
        }
    }
}

pub fn settings_document(s: &Settings) -> Value {
    Value::Object(s.iter().cloned().collect())
}

// ---------------------------------------------------------------------------
// Generation

pub struct Shape {
    pub max_depth: usize,
    pub max_branching: usize,
}

fn number<R: Rng>(rng: &mut R) -> Value {
    let halves: i64 = rng.gen_range(-8..=8);
    if halves % 2 == 0 {
        Value::from(halves / 2)
    } else {
        Value::from(halves as f64 / 2.0)
    }
}

fn text<R: Rng>(rng: &mut R) -> String {
    const ALPHABET: &[&str] = &["x", "y", " ", "-", "[", "]", "é", "0", "ab"];
    let n = rng.gen_range(0..4);
    (0..n).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

pub fn atomic<R: Rng>(rng: &mut R) -> Value {
    match rng.gen_range(0..5) {
        0 => Value::Null,
        1 => Value::Bool(rng.gen()),
        2 => number(rng),
        _ => Value::String(["", "x", "y", "sym", "1", "true"].choose(rng).unwrap().to_string()),
    }
}

fn name<R: Rng>(rng: &mut R) -> String {
    NAMES.choose(rng).unwrap().to_string()
}

pub fn predicate<R: Rng>(rng: &mut R, depth: usize) -> Pred {
    let leaf = depth == 0 || rng.gen_ratio(1, 3);
    if leaf {
        return match rng.gen_range(0..6) {
            0 => Pred::Lit(atomic(rng)),
            1 => Pred::In(
                Box::new(Pred::Ident(name(rng))),
                (0..rng.gen_range(0..4)).map(|_| atomic(rng)).collect(),
            ),
            2 | 3 => Pred::Cmp(
                ["==", "!=", "<", "<=", ">", ">="].choose(rng).unwrap(),
                Box::new(Pred::Ident(name(rng))),
                Box::new(if rng.gen_bool(0.7) { Pred::Lit(atomic(rng)) } else { Pred::Ident(name(rng)) }),
            ),
            _ => Pred::Ident(name(rng)),
        };
    }
    match rng.gen_range(0..4) {
        0 => Pred::Not(Box::new(predicate(rng, depth - 1))),
        1 => Pred::And(Box::new(predicate(rng, depth - 1)), Box::new(predicate(rng, depth - 1))),
        2 => Pred::Or(Box::new(predicate(rng, depth - 1)), Box::new(predicate(rng, depth - 1))),
        _ => Pred::Cmp(
            ["==", "!="].choose(rng).unwrap(),
            Box::new(predicate(rng, depth - 1)),
            Box::new(predicate(rng, depth - 1)),
        ),
    }
}

pub fn expression<R: Rng>(rng: &mut R, shape: &Shape) -> Expr {
    gen_expr(rng, shape, shape.max_depth)
}

fn gen_expr<R: Rng>(rng: &mut R, shape: &Shape, depth: usize) -> Expr {
    let leaf = depth == 0 || rng.gen_ratio(1, 4);
    if leaf {
        return match rng.gen_range(0..8) {
            0 | 1 => Expr::Atom(atomic(rng)),
            2 => Expr::Atom(Value::String(text(rng))),
            3 | 4 => Expr::Var(name(rng)),
            _ => {
                let mut segs = Vec::new();
                let n = rng.gen_range(1..=3);
                for i in 0..n {
                    let t = text(rng);
                    if !t.is_empty() || i == 0 {
                        segs.push(Seg::Text(if t.is_empty() { "z".into() } else { t }));
                    }
                    segs.push(Seg::Var(name(rng)));
                }
                if rng.gen_bool(0.5) {
                    segs.push(Seg::Text(format!("{}!", text(rng))));
                }
                Expr::Interp(segs)
            }
        };
    }
    let width = rng.gen_range(0..=shape.max_branching);
    match rng.gen_range(0..3) {
        0 => {
            let mut fields: Vec<(String, Expr)> = Vec::new();
            for _ in 0..width {
                let key = ["k", "field", "sort", "[a]", "$x", "a b", ""].choose(rng).unwrap().to_string();
                if fields.iter().all(|(k, _)| *k != key) {
                    fields.push((key, gen_expr(rng, shape, depth - 1)));
                }
            }
            Expr::Obj(fields)
        }
        1 => Expr::List((0..width).map(|_| gen_expr(rng, shape, depth - 1)).collect()),
        _ => {
            let p = predicate(rng, 2);
            let (t, f) = match rng.gen_range(0..3) {
                0 => (Some(gen_expr(rng, shape, depth - 1)), None),
                1 => (None, Some(gen_expr(rng, shape, depth - 1))),
                _ => (Some(gen_expr(rng, shape, depth - 1)), Some(gen_expr(rng, shape, depth - 1))),
            };
            Expr::Cond(p, t.map(Box::new), f.map(Box::new))
        }
    }
}

pub fn settings<R: Rng>(rng: &mut R) -> Settings {
    let mut out = Vec::new();
    for n in NAMES {
        if rng.gen_ratio(2, 3) {
            let v = if rng.gen_ratio(1, 6) {
                Value::Array(
                    (0..rng.gen_range(0..3))
                        .map(|_| Value::String(["p", "q", "r s"].choose(rng).unwrap().to_string()))
                        .collect(),
                )
            } else {
                atomic(rng)
            };
            out.push((n.to_string(), v));
        }
    }
    out.shuffle(rng);
    out
}

/// Maximum depth and maximum branching actually present in a tree.
pub fn measure(e: &Expr) -> (usize, usize) {
    match e {
        Expr::Atom(_) | Expr::Var(_) | Expr::Interp(_) => (0, 0),
        Expr::Obj(fields) => children_measure(fields.iter().map(|(_, v)| v)),
        Expr::List(items) => children_measure(items.iter()),
        Expr::Cond(_, t, f) => children_measure(t.iter().chain(f.iter()).map(|b| b.as_ref())),
    }
}

fn children_measure<'a>(children: impl Iterator<Item = &'a Expr>) -> (usize, usize) {
    let mut depth = 0;
    let mut width = 0;
    let mut count = 0;
    for c in children {
        let (d, w) = measure(c);
        depth = depth.max(d);
        width = width.max(w);
        count += 1;
    }
    (depth + 1, width.max(count))
}
