//! Ordered JSON values with finite numbers and a single canonical text form.
//!
//! Every document the engine writes (templates, settings, specs, reports) goes
//! through [`JsonValue::to_canonical_string`]: two-space indentation, object keys
//! in insertion order, numbers in shortest round-trip form. Byte-stable output is
//! what lets fan-out cells, registry fetches and coverage reports be compared as
//! plain text.

use std::fmt;
use std::ops::{Deref, DerefMut};

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JsonError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("non-finite number")]
    NonFinite,
}

impl From<serde_json::Error> for JsonError {
    fn from(e: serde_json::Error) -> Self {
        JsonError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// A finite IEEE double.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Number(f64);

impl Number {
    pub fn new(value: f64) -> Option<Number> {
        value.is_finite().then_some(Number(value))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Shortest text that parses back to the same double; integral values
    /// print without a fractional part.
    pub fn to_canonical_string(self) -> String {
        let n = self.0;
        if n == 0.0 {
            "0".to_string()
        } else if n.fract() == 0.0 && n.abs() < 1e21 {
            format!("{n:.0}")
        } else {
            ryu::Buffer::new().format_finite(n).to_string()
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

impl From<i32> for Number {
    fn from(v: i32) -> Self {
        Number(f64::from(v))
    }
}

/// Insertion-ordered string map whose equality also compares key order.
#[derive(Clone, Debug)]
pub struct Map<V>(IndexMap<String, V>);

impl<V> Default for Map<V> {
    fn default() -> Self {
        Map(IndexMap::new())
    }
}

impl<V> Map<V> {
    pub fn new() -> Self {
        Map(IndexMap::new())
    }

    pub fn into_inner(self) -> IndexMap<String, V> {
        self.0
    }
}

impl<V: PartialEq> PartialEq for Map<V> {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().eq(other.0.iter())
    }
}

impl<V> Deref for Map<V> {
    type Target = IndexMap<String, V>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl<V> DerefMut for Map<V> {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl<V> FromIterator<(String, V)> for Map<V> {
    fn from_iter<I: IntoIterator<Item = (String, V)>>(iter: I) -> Self {
        Map(iter.into_iter().collect())
    }
}

impl<V> IntoIterator for Map<V> {
    type Item = (String, V);
    type IntoIter = indexmap::map::IntoIter<String, V>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a, V> IntoIterator for &'a Map<V> {
    type Item = (&'a String, &'a V);
    type IntoIter = indexmap::map::Iter<'a, String, V>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum JsonValue {
    Null,
    Bool(bool),
    Number(Number),
    String(String),
    Array(Vec<JsonValue>),
    Object(Map<JsonValue>),
}

impl JsonValue {
    pub fn parse(text: &str) -> Result<JsonValue, JsonError> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        JsonValue::try_from(raw)
    }

    pub fn number(n: f64) -> Option<JsonValue> {
        Number::new(n).map(JsonValue::Number)
    }

    pub fn is_atomic(&self) -> bool {
        !matches!(self, JsonValue::Array(_) | JsonValue::Object(_))
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            JsonValue::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            JsonValue::Number(n) => Some(n.get()),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            JsonValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_object(&self) -> Option<&Map<JsonValue>> {
        match self {
            JsonValue::Object(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&Vec<JsonValue>> {
        match self {
            JsonValue::Array(a) => Some(a),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            JsonValue::Null => "null",
            JsonValue::Bool(_) => "boolean",
            JsonValue::Number(_) => "number",
            JsonValue::String(_) => "string",
            JsonValue::Array(_) => "array",
            JsonValue::Object(_) => "object",
        }
    }

    /// Text used when an atomic value is spliced into a larger string.
    /// Containers fall back to their compact JSON form.
    pub fn splice_text(&self) -> String {
        match self {
            JsonValue::Null => String::new(),
            JsonValue::Bool(b) => b.to_string(),
            JsonValue::Number(n) => n.to_canonical_string(),
            JsonValue::String(s) => s.clone(),
            other => other.to_compact_string(),
        }
    }

    /// Resolves an RFC 6901 pointer.
    pub fn pointer(&self, pointer: &str) -> Option<&JsonValue> {
        let tokens = parse_pointer(pointer).ok()?;
        let mut current = self;
        for token in &tokens {
            current = match current {
                JsonValue::Object(map) => map.get(token)?,
                JsonValue::Array(items) => items.get(array_index(token)?)?,
                _ => return None,
            };
        }
        Some(current)
    }

    pub fn pointer_mut(&mut self, pointer: &str) -> Option<&mut JsonValue> {
        let tokens = parse_pointer(pointer).ok()?;
        let mut current = self;
        for token in &tokens {
            current = match current {
                JsonValue::Object(map) => map.get_mut(token)?,
                JsonValue::Array(items) => items.get_mut(array_index(token)?)?,
                _ => return None,
            };
        }
        Some(current)
    }

    /// Removes the value at `pointer`, returning it. The root cannot be removed.
    pub fn remove_pointer(&mut self, pointer: &str) -> Option<JsonValue> {
        let mut tokens = parse_pointer(pointer).ok()?;
        let last = tokens.pop()?;
        let parent = self.pointer_mut(&to_pointer(&tokens))?;
        match parent {
            JsonValue::Object(map) => map.shift_remove(&last),
            JsonValue::Array(items) => {
                let idx = array_index(&last)?;
                (idx < items.len()).then(|| items.remove(idx))
            }
            _ => None,
        }
    }

    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        write_pretty(self, 0, &mut out);
        out
    }

    pub fn to_compact_string(&self) -> String {
        let mut out = String::new();
        write_compact(self, &mut out);
        out
    }

    pub fn to_serde(&self) -> serde_json::Value {
        match self {
            JsonValue::Null => serde_json::Value::Null,
            JsonValue::Bool(b) => serde_json::Value::Bool(*b),
            JsonValue::Number(n) => {
                let v = n.get();
                if v.fract() == 0.0 && v.abs() < 9.0e15 {
                    serde_json::Value::from(v as i64)
                } else {
                    serde_json::Number::from_f64(v)
                        .map(serde_json::Value::Number)
                        .unwrap_or(serde_json::Value::Null)
                }
            }
            JsonValue::String(s) => serde_json::Value::String(s.clone()),
            JsonValue::Array(items) => {
                serde_json::Value::Array(items.iter().map(JsonValue::to_serde).collect())
            }
            JsonValue::Object(map) => serde_json::Value::Object(
                map.iter().map(|(k, v)| (k.clone(), v.to_serde())).collect(),
            ),
        }
    }
}

impl TryFrom<serde_json::Value> for JsonValue {
    type Error = JsonError;

    fn try_from(value: serde_json::Value) -> Result<Self, Self::Error> {
        Ok(match value {
            serde_json::Value::Null => JsonValue::Null,
            serde_json::Value::Bool(b) => JsonValue::Bool(b),
            serde_json::Value::Number(n) => n
                .as_f64()
                .and_then(Number::new)
                .map(JsonValue::Number)
                .ok_or(JsonError::NonFinite)?,
            serde_json::Value::String(s) => JsonValue::String(s),
            serde_json::Value::Array(items) => JsonValue::Array(
                items
                    .into_iter()
                    .map(JsonValue::try_from)
                    .collect::<Result<_, _>>()?,
            ),
            serde_json::Value::Object(map) => JsonValue::Object(
                map.into_iter()
                    .map(|(k, v)| Ok((k, JsonValue::try_from(v)?)))
                    .collect::<Result<_, JsonError>>()?,
            ),
        })
    }
}

impl fmt::Display for JsonValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

impl From<&str> for JsonValue {
    fn from(s: &str) -> Self {
        JsonValue::String(s.to_string())
    }
}

impl From<String> for JsonValue {
    fn from(s: String) -> Self {
        JsonValue::String(s)
    }
}

impl From<bool> for JsonValue {
    fn from(b: bool) -> Self {
        JsonValue::Bool(b)
    }
}

impl From<Number> for JsonValue {
    fn from(n: Number) -> Self {
        JsonValue::Number(n)
    }
}

impl From<i32> for JsonValue {
    fn from(n: i32) -> Self {
        JsonValue::Number(Number::from(n))
    }
}

pub(crate) fn write_string(s: &str, out: &mut String) {
    // serde_json escapes exactly the characters JSON requires.
    out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
}

fn push_indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_pretty(value: &JsonValue, level: usize, out: &mut String) {
    match value {
        JsonValue::Array(items) if !items.is_empty() => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                push_indent(level + 1, out);
                write_pretty(item, level + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            push_indent(level, out);
            out.push(']');
        }
        JsonValue::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (key, item)) in map.iter().enumerate() {
                push_indent(level + 1, out);
                write_string(key, out);
                out.push_str(": ");
                write_pretty(item, level + 1, out);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            push_indent(level, out);
            out.push('}');
        }
        other => write_compact(other, out),
    }
}

fn write_compact(value: &JsonValue, out: &mut String) {
    match value {
        JsonValue::Null => out.push_str("null"),
        JsonValue::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        JsonValue::Number(n) => out.push_str(&n.to_canonical_string()),
        JsonValue::String(s) => write_string(s, out),
        JsonValue::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_compact(item, out);
            }
            out.push(']');
        }
        JsonValue::Object(map) => {
            out.push('{');
            for (i, (key, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(key, out);
                out.push(':');
                write_compact(item, out);
            }
            out.push('}');
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid JSON pointer {0:?}")]
pub struct PointerSyntaxError(pub String);

/// Splits an RFC 6901 pointer into unescaped reference tokens.
pub fn parse_pointer(pointer: &str) -> Result<Vec<String>, PointerSyntaxError> {
    if pointer.is_empty() {
        return Ok(Vec::new());
    }
    let rest = pointer
        .strip_prefix('/')
        .ok_or_else(|| PointerSyntaxError(pointer.to_string()))?;
    rest.split('/')
        .map(|token| {
            let mut out = String::with_capacity(token.len());
            let mut chars = token.chars();
            while let Some(c) = chars.next() {
                if c == '~' {
                    match chars.next() {
                        Some('0') => out.push('~'),
                        Some('1') => out.push('/'),
                        _ => return Err(PointerSyntaxError(pointer.to_string())),
                    }
                } else {
                    out.push(c);
                }
            }
            Ok(out)
        })
        .collect()
}

pub fn escape_pointer_token(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

pub fn to_pointer<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for token in tokens {
        out.push('/');
        out.push_str(&escape_pointer_token(token.as_ref()));
    }
    out
}

pub(crate) fn array_index(token: &str) -> Option<usize> {
    if token.is_empty() || (token.len() > 1 && token.starts_with('0')) {
        return None;
    }
    if !token.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    token.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_print_matches_two_space_layout() {
        let v = JsonValue::parse(r#"{"a":[1,2.5,{}],"b":{"c":null,"d":[]},"e":"x\"y"}"#).unwrap();
        let expected = "{\n  \"a\": [\n    1,\n    2.5,\n    {}\n  ],\n  \"b\": {\n    \"c\": null,\n    \"d\": []\n  },\n  \"e\": \"x\\\"y\"\n}";
        assert_eq!(v.to_canonical_string(), expected);
    }

    #[test]
    fn key_order_is_part_of_equality() {
        let a = JsonValue::parse(r#"{"x":1,"y":2}"#).unwrap();
        let b = JsonValue::parse(r#"{"y":2,"x":1}"#).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, JsonValue::parse(r#"{ "x": 1, "y": 2 }"#).unwrap());
    }

    #[test]
    fn numbers_print_shortest() {
        for (input, printed) in [
            ("2000", "2000"),
            ("2000.0", "2000"),
            ("-0.0", "0"),
            ("0.1", "0.1"),
            ("1e-7", "1e-7"),
            ("123456789012", "123456789012"),
        ] {
            assert_eq!(JsonValue::parse(input).unwrap().to_canonical_string(), printed);
        }
    }

    #[test]
    fn out_of_range_numbers_are_rejected() {
        assert!(JsonValue::parse("1e400").is_err());
    }

    #[test]
    fn pointers_resolve_and_escape() {
        let v = JsonValue::parse(r#"{"a/b":{"~k":[10,20]}}"#).unwrap();
        assert_eq!(v.pointer("/a~1b/~0k/1"), Some(&JsonValue::from(20)));
        assert_eq!(v.pointer("/a~1b/~0k/01"), None);
        assert_eq!(v.pointer(""), Some(&v));
        assert_eq!(to_pointer(&["a/b", "~k"]), "/a~1b/~0k");
        assert!(parse_pointer("nope").is_err());
    }

    #[test]
    fn remove_pointer_keeps_sibling_order() {
        let mut v = JsonValue::parse(r#"{"a":1,"b":2,"c":3}"#).unwrap();
        assert_eq!(v.remove_pointer("/b"), Some(JsonValue::from(2)));
        assert_eq!(v.to_compact_string(), r#"{"a":1,"c":3}"#);
    }
}
