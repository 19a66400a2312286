//! Template and settings documents.
//!
//! A template document is a JSON object with the keys `name`, `description`,
//! `language`, `version`, `params`, `symbols`, `body` and `metadata`. Inside
//! `body`, string values are scanned for `[NAME]` variables (`[[` is a literal
//! `[`), and a single-key object `{"$cond": {"query", "true", "false"}}` is a
//! conditional. Keys are never scanned.

use thiserror::Error;

use crate::json::{escape_pointer_token, JsonError, JsonValue, Map, Number};
use crate::model::{
    is_identifier, ArgumentValue, Conditional, DataRole, Expression, Filter, FilterKind,
    ParamType, Parameter, Segment, Settings, Symbol, Template,
};
use crate::predicate::Predicate;

pub const COND_KEY: &str = "$cond";
pub const FILTERS_KEY: &str = "$filters";

const TOP_LEVEL_KEYS: [&str; 8] = [
    "name",
    "description",
    "language",
    "version",
    "params",
    "symbols",
    "body",
    "metadata",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error(transparent)]
    Json(#[from] JsonError),
    #[error("unknown top-level key `{0}`")]
    UnknownTopLevelKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("{path}: {message}")]
    BadField { path: String, message: String },
    #[error("parameter `{param}`: {message}")]
    BadParamType { param: String, message: String },
    #[error("predicate at {path}, offset {position}: {message}")]
    BadPredicate {
        path: String,
        position: usize,
        message: String,
    },
    #[error("conditional at {path}: {message}")]
    BadConditionalShape { path: String, message: String },
    #[error("filter {index}: {message}")]
    BadFilterShape { index: usize, message: String },
    #[error("setting `{key}`: {message}")]
    BadSettingsValue { key: String, message: String },
}

fn bad(path: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError::BadField {
        path: path.into(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Bracket scanning

/// Splits a string value into literal text and `[NAME]` variables.
pub fn scan_string(s: &str) -> Expression {
    let mut segments: Vec<Segment> = Vec::new();
    let mut text = String::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < s.len() {
        if bytes[i] == b'[' {
            if bytes.get(i + 1) == Some(&b'[') {
                text.push('[');
                i += 2;
                continue;
            }
            if let Some(len) = ident_then_close(&s[i + 1..]) {
                if !text.is_empty() {
                    segments.push(Segment::Text(std::mem::take(&mut text)));
                }
                segments.push(Segment::Variable(s[i + 1..i + 1 + len].to_string()));
                i += len + 2;
                continue;
            }
        }
        let ch = s[i..].chars().next().expect("in bounds");
        text.push(ch);
        i += ch.len_utf8();
    }
    if segments.is_empty() {
        return Expression::Atomic(JsonValue::String(text));
    }
    if !text.is_empty() {
        segments.push(Segment::Text(text));
    }
    if let [Segment::Variable(name)] = segments.as_slice() {
        return Expression::Variable(name.clone());
    }
    Expression::Interpolated(segments)
}

/// Length of an identifier at the start of `s` that is directly followed by `]`.
fn ident_then_close(s: &str) -> Option<usize> {
    let len = s
        .bytes()
        .take_while(|b| *b == b'_' || b.is_ascii_alphanumeric())
        .count();
    (len > 0 && is_identifier(&s[..len]) && s.as_bytes().get(len) == Some(&b']')).then_some(len)
}

/// Escapes literal text so that scanning it yields the same text.
/// `next_is_bracket` tells whether the character after `s` in the output is `[`.
fn escape_text(s: &str, next_is_bracket: bool, out: &mut String) {
    for (i, ch) in s.char_indices() {
        if ch == '[' {
            let rest = &s[i + 1..];
            let escape = rest.starts_with('[')
                || (rest.is_empty() && next_is_bracket)
                || ident_then_close(rest).is_some();
            if escape {
                out.push('[');
            }
        }
        out.push(ch);
    }
}

pub fn escape_literal_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    escape_text(s, false, &mut out);
    out
}

fn segments_to_string(segments: &[Segment]) -> String {
    let mut out = String::new();
    for (i, seg) in segments.iter().enumerate() {
        match seg {
            Segment::Text(t) => {
                let next_is_bracket = matches!(segments.get(i + 1), Some(Segment::Variable(_)));
                escape_text(t, next_is_bracket, &mut out);
            }
            Segment::Variable(name) => {
                out.push('[');
                out.push_str(name);
                out.push(']');
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Expressions

pub fn parse_expression(value: &JsonValue) -> Result<Expression, ParseError> {
    expression_at(value, &mut String::new())
}

fn expression_at(value: &JsonValue, path: &mut String) -> Result<Expression, ParseError> {
    match value {
        JsonValue::String(s) => Ok(scan_string(s)),
        JsonValue::Array(items) => {
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                let len = path.len();
                path.push('/');
                path.push_str(&i.to_string());
                out.push(expression_at(item, path)?);
                path.truncate(len);
            }
            Ok(Expression::List(out))
        }
        JsonValue::Object(map) => {
            if map.contains_key(COND_KEY) {
                return conditional_at(map, path).map(|c| Expression::Conditional(Box::new(c)));
            }
            let mut out = Map::new();
            for (k, v) in map.iter() {
                let len = path.len();
                path.push('/');
                path.push_str(&escape_pointer_token(k));
                out.insert(k.clone(), expression_at(v, path)?);
                path.truncate(len);
            }
            Ok(Expression::Object(out))
        }
        atomic => Ok(Expression::Atomic(atomic.clone())),
    }
}

fn conditional_at(map: &Map<JsonValue>, path: &mut String) -> Result<Conditional, ParseError> {
    let shape = |message: &str| ParseError::BadConditionalShape {
        path: path.clone(),
        message: message.to_string(),
    };
    if map.len() != 1 {
        return Err(shape("`$cond` must be the only key of its object"));
    }
    let inner = map[COND_KEY]
        .as_object()
        .ok_or_else(|| shape("`$cond` value must be an object"))?;
    if let Some(k) = inner.keys().find(|k| !matches!(k.as_str(), "query" | "true" | "false")) {
        return Err(shape(&format!("unexpected key `{k}`")));
    }
    let source = match inner.get("query") {
        Some(JsonValue::String(s)) => s,
        Some(_) => return Err(shape("`query` must be a string")),
        None => return Err(shape("missing `query`")),
    };
    if !inner.contains_key("true") && !inner.contains_key("false") {
        return Err(shape("needs a `true` or `false` branch"));
    }
    let query = Predicate::parse(source).map_err(|e| ParseError::BadPredicate {
        path: format!("{path}/{COND_KEY}/query"),
        position: e.position,
        message: e.message,
    })?;
    let mut branch = |key: &str| -> Result<Option<Expression>, ParseError> {
        match inner.get(key) {
            None => Ok(None),
            Some(v) => {
                let len = path.len();
                path.push_str(&format!("/{COND_KEY}/{key}"));
                let e = expression_at(v, path)?;
                path.truncate(len);
                Ok(Some(e))
            }
        }
    };
    let then_branch = branch("true")?;
    let else_branch = branch("false")?;
    Ok(Conditional {
        query,
        then_branch,
        else_branch,
    })
}

/// The JSON document form of an expression.
pub fn expression_to_json(e: &Expression) -> JsonValue {
    match e {
        Expression::Atomic(JsonValue::String(s)) => JsonValue::String(escape_literal_string(s)),
        Expression::Atomic(v) => v.clone(),
        Expression::Object(map) => JsonValue::Object(
            map.iter()
                .map(|(k, v)| (k.clone(), expression_to_json(v)))
                .collect(),
        ),
        Expression::List(items) => JsonValue::Array(items.iter().map(expression_to_json).collect()),
        Expression::Variable(name) => JsonValue::String(format!("[{name}]")),
        Expression::Interpolated(segments) => JsonValue::String(segments_to_string(segments)),
        Expression::Conditional(c) => {
            let mut inner = Map::new();
            inner.insert("query".to_string(), JsonValue::String(c.query.source().to_string()));
            if let Some(t) = &c.then_branch {
                inner.insert("true".to_string(), expression_to_json(t));
            }
            if let Some(f) = &c.else_branch {
                inner.insert("false".to_string(), expression_to_json(f));
            }
            let mut outer = Map::new();
            outer.insert(COND_KEY.to_string(), JsonValue::Object(inner));
            JsonValue::Object(outer)
        }
    }
}

// ---------------------------------------------------------------------------
// Templates

pub fn parse_template(text: &str) -> Result<Template, ParseError> {
    template_from_json(&JsonValue::parse(text)?)
}

pub fn template_from_json(doc: &JsonValue) -> Result<Template, ParseError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| bad("", "template document must be an object"))?;
    if let Some(k) = obj.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
        return Err(ParseError::UnknownTopLevelKey(k.clone()));
    }
    let require = |key: &str| obj.get(key).ok_or_else(|| ParseError::MissingKey(key.to_string()));
    let string_at = |key: &str| -> Result<String, ParseError> {
        require(key)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| bad(format!("/{key}"), "expected a string"))
    };

    let name = string_at("name")?;
    let description = string_at("description")?;
    let language = string_at("language")?;
    let version = match obj.get("version") {
        None => 1,
        Some(v) => v
            .as_f64()
            .filter(|n| n.fract() == 0.0 && *n >= 0.0 && *n <= u32::MAX as f64)
            .map(|n| n as u64)
            .ok_or_else(|| bad("/version", "expected a non-negative integer"))?,
    };

    let params = require("params")?
        .as_array()
        .ok_or_else(|| bad("/params", "expected a list"))?
        .iter()
        .enumerate()
        .map(|(i, p)| parse_param(p, i))
        .collect::<Result<Vec<_>, _>>()?;

    let symbols = require("symbols")?
        .as_array()
        .ok_or_else(|| bad("/symbols", "expected a list"))?
        .iter()
        .enumerate()
        .map(|(i, s)| parse_symbol(s, i))
        .collect::<Result<Vec<_>, _>>()?;

    let mut path = "/body".to_string();
    let body = expression_at(require("body")?, &mut path)?;

    let metadata = match obj.get("metadata") {
        None => Map::new(),
        Some(JsonValue::Object(m)) => m
            .iter()
            .map(|(k, v)| match v {
                JsonValue::String(s) => Ok((k.clone(), s.clone())),
                _ => Err(bad(format!("/metadata/{}", escape_pointer_token(k)), "expected a string")),
            })
            .collect::<Result<Map<String>, _>>()?,
        Some(_) => return Err(bad("/metadata", "expected an object")),
    };

    Ok(Template {
        name,
        description,
        language,
        params,
        body,
        symbols,
        metadata,
        version,
    })
}

fn parse_symbol(v: &JsonValue, index: usize) -> Result<Symbol, ParseError> {
    let path = format!("/symbols/{index}");
    let obj = v.as_object().ok_or_else(|| bad(&path, "expected an object"))?;
    if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "name" | "description")) {
        return Err(bad(&path, format!("unexpected key `{k}`")));
    }
    let field = |key: &str| {
        obj.get(key)
            .and_then(JsonValue::as_str)
            .map(str::to_string)
            .ok_or_else(|| bad(format!("{path}/{key}"), "expected a string"))
    };
    Ok(Symbol {
        name: field("name")?,
        description: field("description")?,
    })
}

fn parse_param(v: &JsonValue, index: usize) -> Result<Parameter, ParseError> {
    let path = format!("/params/{index}");
    let obj = v.as_object().ok_or_else(|| bad(&path, "expected an object"))?;
    if let Some(k) = obj
        .keys()
        .find(|k| !matches!(k.as_str(), "name" | "type" | "config" | "displayPredicate" | "defaultValue"))
    {
        return Err(bad(&path, format!("unexpected key `{k}`")));
    }
    let name = obj
        .get("name")
        .and_then(JsonValue::as_str)
        .ok_or_else(|| bad(format!("{path}/name"), "expected a string"))?
        .to_string();
    let tag = obj
        .get("type")
        .and_then(JsonValue::as_str)
        .ok_or_else(|| bad(format!("{path}/type"), "expected a string"))?;
    let config = obj
        .get("config")
        .and_then(JsonValue::as_object)
        .ok_or_else(|| bad(format!("{path}/config"), "expected an object"))?;
    let param_type = parse_param_type(tag, config).map_err(|message| ParseError::BadParamType {
        param: name.clone(),
        message,
    })?;

    let display_predicate = match obj.get("displayPredicate") {
        None => None,
        Some(JsonValue::String(src)) => Some(Predicate::parse(src).map_err(|e| ParseError::BadPredicate {
            path: format!("{path}/displayPredicate"),
            position: e.position,
            message: e.message,
        })?),
        Some(_) => return Err(bad(format!("{path}/displayPredicate"), "expected a string")),
    };
    let default_value = match obj.get("defaultValue") {
        None => None,
        Some(v) => Some(
            ArgumentValue::from_json(v)
                .ok_or_else(|| bad(format!("{path}/defaultValue"), "expected an atomic value or a list of strings"))?,
        ),
    };
    Ok(Parameter {
        name,
        param_type,
        display_predicate,
        default_value,
    })
}

fn check_keys(config: &Map<JsonValue>, allowed: &[&str]) -> Result<(), String> {
    match config.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(format!("unexpected config key `{k}`")),
        None => Ok(()),
    }
}

fn number_field(config: &Map<JsonValue>, key: &str) -> Result<f64, String> {
    config
        .get(key)
        .and_then(JsonValue::as_f64)
        .ok_or_else(|| format!("config.{key} must be a number"))
}

fn count_field(config: &Map<JsonValue>, key: &str) -> Result<Option<usize>, String> {
    match config.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .filter(|n| n.fract() == 0.0 && *n >= 0.0)
            .map(|n| Some(n as usize))
            .ok_or_else(|| format!("config.{key} must be a non-negative integer")),
    }
}

fn roles_field(config: &Map<JsonValue>) -> Result<Vec<DataRole>, String> {
    config
        .get("allowedRoles")
        .and_then(JsonValue::as_array)
        .ok_or_else(|| "config.allowedRoles must be a list".to_string())?
        .iter()
        .map(|r| {
            r.as_str()
                .ok_or_else(|| "roles must be strings".to_string())?
                .parse::<DataRole>()
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn required_field(config: &Map<JsonValue>) -> Result<bool, String> {
    config
        .get("required")
        .and_then(JsonValue::as_bool)
        .ok_or_else(|| "config.required must be a boolean".to_string())
}

fn parse_param_type(tag: &str, config: &Map<JsonValue>) -> Result<ParamType, String> {
    let text_field = |key: &str| {
        config
            .get(key)
            .and_then(JsonValue::as_str)
            .map(str::to_string)
            .ok_or_else(|| format!("config.{key} must be a string"))
    };
    match tag {
        "DataTarget" => {
            check_keys(config, &["allowedRoles", "required"])?;
            Ok(ParamType::DataTarget {
                allowed_roles: roles_field(config)?,
                required: required_field(config)?,
            })
        }
        "MultiDataTarget" => {
            check_keys(config, &["allowedRoles", "required", "minCount", "maxCount"])?;
            Ok(ParamType::MultiDataTarget {
                allowed_roles: roles_field(config)?,
                required: required_field(config)?,
                min_count: count_field(config, "minCount")?,
                max_count: count_field(config, "maxCount")?,
            })
        }
        "String" => {
            check_keys(config, &[])?;
            Ok(ParamType::String)
        }
        "Boolean" => {
            check_keys(config, &[])?;
            Ok(ParamType::Boolean)
        }
        "Number" => {
            check_keys(config, &["min", "max", "step"])?;
            Ok(ParamType::Number {
                min: number_field(config, "min")?,
                max: number_field(config, "max")?,
                step: number_field(config, "step")?,
            })
        }
        "Enum" => {
            check_keys(config, &["allowedValues"])?;
            let values = config
                .get("allowedValues")
                .and_then(JsonValue::as_array)
                .ok_or_else(|| "config.allowedValues must be a list".to_string())?
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| "allowed values must be strings".to_string()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ParamType::Enum { allowed_values: values })
        }
        "Text" => {
            check_keys(config, &["text"])?;
            Ok(ParamType::Text { text: text_field("text")? })
        }
        "Section" => {
            check_keys(config, &["label"])?;
            Ok(ParamType::Section { label: text_field("label")? })
        }
        other => Err(format!("unknown parameter type `{other}`")),
    }
}

fn num(n: f64) -> JsonValue {
    JsonValue::Number(Number::new(n).expect("finite by construction"))
}

fn roles_json(roles: &[DataRole]) -> JsonValue {
    JsonValue::Array(roles.iter().map(|r| JsonValue::from(r.as_str())).collect())
}

pub fn param_type_config(t: &ParamType) -> JsonValue {
    let mut c: Map<JsonValue> = Map::new();
    match t {
        ParamType::DataTarget { allowed_roles, required } => {
            c.insert("allowedRoles".into(), roles_json(allowed_roles));
            c.insert("required".into(), JsonValue::Bool(*required));
        }
        ParamType::MultiDataTarget {
            allowed_roles,
            required,
            min_count,
            max_count,
        } => {
            c.insert("allowedRoles".into(), roles_json(allowed_roles));
            c.insert("required".into(), JsonValue::Bool(*required));
            if let Some(n) = min_count {
                c.insert("minCount".into(), num(*n as f64));
            }
            if let Some(n) = max_count {
                c.insert("maxCount".into(), num(*n as f64));
            }
        }
        ParamType::String | ParamType::Boolean => {}
        ParamType::Number { min, max, step } => {
            c.insert("min".into(), num(*min));
            c.insert("max".into(), num(*max));
            c.insert("step".into(), num(*step));
        }
        ParamType::Enum { allowed_values } => {
            c.insert(
                "allowedValues".into(),
                JsonValue::Array(allowed_values.iter().map(|v| JsonValue::from(v.as_str())).collect()),
            );
        }
        ParamType::Text { text } => {
            c.insert("text".into(), JsonValue::from(text.as_str()));
        }
        ParamType::Section { label } => {
            c.insert("label".into(), JsonValue::from(label.as_str()));
        }
    }
    JsonValue::Object(c)
}

pub fn param_to_json(p: &Parameter) -> JsonValue {
    let mut m = Map::new();
    m.insert("name".into(), JsonValue::from(p.name.as_str()));
    m.insert("type".into(), JsonValue::from(p.param_type.tag()));
    m.insert("config".into(), param_type_config(&p.param_type));
    if let Some(pred) = &p.display_predicate {
        m.insert("displayPredicate".into(), JsonValue::from(pred.source()));
    }
    if let Some(v) = &p.default_value {
        m.insert("defaultValue".into(), v.to_json());
    }
    JsonValue::Object(m)
}

pub fn template_to_json(t: &Template) -> JsonValue {
    let mut m = Map::new();
    m.insert("name".into(), JsonValue::from(t.name.as_str()));
    m.insert("description".into(), JsonValue::from(t.description.as_str()));
    m.insert("language".into(), JsonValue::from(t.language.as_str()));
    m.insert("version".into(), num(t.version as f64));
    m.insert("params".into(), JsonValue::Array(t.params.iter().map(param_to_json).collect()));
    m.insert(
        "symbols".into(),
        JsonValue::Array(
            t.symbols
                .iter()
                .map(|s| {
                    let mut o = Map::new();
                    o.insert("name".into(), JsonValue::from(s.name.as_str()));
                    o.insert("description".into(), JsonValue::from(s.description.as_str()));
                    JsonValue::Object(o)
                })
                .collect(),
        ),
    );
    m.insert("body".into(), expression_to_json(&t.body));
    m.insert(
        "metadata".into(),
        JsonValue::Object(
            t.metadata
                .iter()
                .map(|(k, v)| (k.clone(), JsonValue::from(v.as_str())))
                .collect(),
        ),
    );
    JsonValue::Object(m)
}

/// Canonical document text (two-space indent, no trailing newline).
pub fn serialize_template(t: &Template) -> String {
    template_to_json(t).to_canonical_string()
}

// ---------------------------------------------------------------------------
// Settings

pub fn parse_settings(text: &str) -> Result<Settings, ParseError> {
    settings_from_json(&JsonValue::parse(text)?)
}

pub fn settings_from_json(doc: &JsonValue) -> Result<Settings, ParseError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| bad("", "settings document must be an object"))?;
    let mut settings = Settings::new();
    for (key, value) in obj.iter() {
        if key == FILTERS_KEY {
            settings.set_filters(Some(parse_filters(value)?));
            continue;
        }
        let v = ArgumentValue::from_json(value).ok_or_else(|| ParseError::BadSettingsValue {
            key: key.clone(),
            message: "expected an atomic value or a list of strings".into(),
        })?;
        settings.set(key.clone(), v);
    }
    Ok(settings)
}

fn parse_filters(value: &JsonValue) -> Result<Vec<Filter>, ParseError> {
    let items = value.as_array().ok_or(ParseError::BadFilterShape {
        index: 0,
        message: "`$filters` must be a list".into(),
    })?;
    items
        .iter()
        .enumerate()
        .map(|(index, item)| {
            parse_filter(item).map_err(|message| ParseError::BadFilterShape { index, message })
        })
        .collect()
}

fn parse_filter(item: &JsonValue) -> Result<Filter, String> {
    let obj = item.as_object().ok_or("filter must be an object")?;
    let column = obj
        .get("column")
        .and_then(JsonValue::as_str)
        .ok_or("`column` must be a string")?
        .to_string();
    let kind = match obj.get("kind").and_then(JsonValue::as_str) {
        Some("range") => {
            check_keys(obj, &["column", "kind", "min", "max"])?;
            let bound = |k: &str| obj.get(k).and_then(JsonValue::as_f64).ok_or(format!("`{k}` must be a number"));
            let (min, max) = (bound("min")?, bound("max")?);
            if min > max {
                return Err(format!("min {min} exceeds max {max}"));
            }
            FilterKind::Range { min, max }
        }
        Some("oneOf") => {
            check_keys(obj, &["column", "kind", "values"])?;
            let values = obj
                .get("values")
                .and_then(JsonValue::as_array)
                .ok_or("`values` must be a list")?;
            if let Some(v) = values.iter().find(|v| !v.is_atomic()) {
                return Err(format!("`values` must be atomic, found {}", v.type_name()));
            }
            FilterKind::OneOf { values: values.clone() }
        }
        _ => return Err("`kind` must be \"range\" or \"oneOf\"".into()),
    };
    Ok(Filter { column, kind })
}

pub fn filter_to_json(f: &Filter) -> JsonValue {
    let mut m = Map::new();
    m.insert("column".into(), JsonValue::from(f.column.as_str()));
    match &f.kind {
        FilterKind::Range { min, max } => {
            m.insert("kind".into(), JsonValue::from("range"));
            m.insert("min".into(), num(*min));
            m.insert("max".into(), num(*max));
        }
        FilterKind::OneOf { values } => {
            m.insert("kind".into(), JsonValue::from("oneOf"));
            m.insert("values".into(), JsonValue::Array(values.clone()));
        }
    }
    JsonValue::Object(m)
}

/// Values in insertion order, then `$filters` when present.
pub fn settings_to_json(s: &Settings) -> JsonValue {
    let mut m: Map<JsonValue> = s.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
    if let Some(filters) = s.filters() {
        m.insert(
            FILTERS_KEY.into(),
            JsonValue::Array(filters.iter().map(filter_to_json).collect()),
        );
    }
    JsonValue::Object(m)
}

pub fn serialize_settings(s: &Settings) -> String {
    settings_to_json(s).to_canonical_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(n: &str) -> Segment {
        Segment::Variable(n.into())
    }

    fn text(t: &str) -> Segment {
        Segment::Text(t.into())
    }

    #[test]
    fn whole_string_reference() {
        assert_eq!(scan_string("[year]"), Expression::Variable("year".into()));
    }

    #[test]
    fn interpolation() {
        assert_eq!(
            scan_string("pop in [k]"),
            Expression::Interpolated(vec![text("pop in "), var("k")])
        );
        assert_eq!(
            scan_string("[w]x[h]"),
            Expression::Interpolated(vec![var("w"), text("x"), var("h")])
        );
    }

    #[test]
    fn brackets_that_are_not_variables() {
        assert_eq!(scan_string("[1, 2]"), Expression::Atomic("[1, 2]".into()));
        assert_eq!(scan_string("[a b]"), Expression::Atomic("[a b]".into()));
        assert_eq!(scan_string("[[year]"), Expression::Atomic("[year]".into()));
        assert_eq!(scan_string("a[[b"), Expression::Atomic("a[b".into()));
        assert_eq!(scan_string("[9x]"), Expression::Atomic("[9x]".into()));
    }

    #[test]
    fn literal_escaping_round_trips() {
        for s in ["[year]", "[[", "[", "x[", "[[a]", "[a]]", "a[[b]c", "[1]", "ü[é]"] {
            let escaped = escape_literal_string(s);
            assert_eq!(scan_string(&escaped), Expression::Atomic(s.into()), "{s:?} -> {escaped:?}");
        }
        assert_eq!(escape_literal_string("[1, 2]"), "[1, 2]");
    }

    #[test]
    fn text_before_variable_keeps_trailing_bracket() {
        let e = Expression::Interpolated(vec![text("a["), var("b")]);
        let s = segments_to_string(match &e {
            Expression::Interpolated(s) => s,
            _ => unreachable!(),
        });
        assert_eq!(s, "a[[[b]");
        assert_eq!(scan_string(&s), e);
    }

    #[test]
    fn keys_are_not_scanned() {
        let v = JsonValue::parse(r#"{"[k]": "[v]"}"#).unwrap();
        let e = parse_expression(&v).unwrap();
        match e {
            Expression::Object(m) => {
                assert_eq!(m.get("[k]"), Some(&Expression::Variable("v".into())));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn conditional_without_else() {
        let v = JsonValue::parse(r#"{"$cond":{"query":"sort == true","true":"-x"}}"#).unwrap();
        let e = parse_expression(&v).unwrap();
        let Expression::Conditional(c) = &e else { panic!() };
        assert_eq!(c.query.source(), "sort == true");
        assert_eq!(c.then_branch, Some(Expression::Atomic("-x".into())));
        assert_eq!(c.else_branch, None);
        assert_eq!(expression_to_json(&e), v);
    }

    #[test]
    fn conditional_shape_errors() {
        for bad in [
            r#"{"$cond":{"true":1}}"#,
            r#"{"$cond":{"query":"a"}}"#,
            r#"{"$cond":{"query":"a","true":1},"x":1}"#,
            r#"{"$cond":{"query":"a","true":1,"maybe":2}}"#,
            r#"{"$cond":"a"}"#,
        ] {
            let v = JsonValue::parse(bad).unwrap();
            assert!(
                matches!(parse_expression(&v), Err(ParseError::BadConditionalShape { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn predicate_errors_carry_position() {
        let v = JsonValue::parse(r#"{"m":{"$cond":{"query":"a ==","true":1}}}"#).unwrap();
        match parse_expression(&v) {
            Err(ParseError::BadPredicate { path, position, .. }) => {
                assert_eq!(path, "/m/$cond/query");
                assert_eq!(position, 4);
            }
            other => panic!("{other:?}"),
        }
    }

    const DOC: &str = r#"{
  "name": "t",
  "description": "d",
  "language": "vega-lite",
  "version": 1,
  "params": [
    {
      "name": "yDim",
      "type": "DataTarget",
      "config": {
        "allowedRoles": [
          "Measure"
        ],
        "required": true
      }
    },
    {
      "name": "sort",
      "type": "Boolean",
      "config": {},
      "defaultValue": false
    }
  ],
  "symbols": [],
  "body": {
    "y": {
      "field": "[yDim]",
      "sort": {
        "$cond": {
          "query": "sort == true",
          "true": "-x"
        }
      }
    }
  },
  "metadata": {}
}"#;

    #[test]
    fn template_round_trip_is_byte_identical() {
        let t = parse_template(DOC).unwrap();
        assert_eq!(serialize_template(&t), DOC);
        assert!(DOC.contains("\"symbols\": []"));
    }

    #[test]
    fn unknown_top_level_key_rejected() {
        let doc = DOC.replacen("\"name\": \"t\"", "\"name\": \"t\", \"extra\": 1", 1);
        assert_eq!(parse_template(&doc), Err(ParseError::UnknownTopLevelKey("extra".into())));
    }

    #[test]
    fn optional_version_and_metadata() {
        let doc = r#"{"name":"t","description":"","language":"table","params":[],"symbols":[],"body":{}}"#;
        let t = parse_template(doc).unwrap();
        assert_eq!(t.version, 1);
        assert!(t.metadata.is_empty());
    }

    #[test]
    fn bad_param_type() {
        let doc = DOC.replace("\"Boolean\"", "\"Colour\"");
        assert!(matches!(parse_template(&doc), Err(ParseError::BadParamType { .. })));
        let doc = DOC.replace("\"required\": true", "\"required\": true, \"step\": 1");
        assert!(matches!(parse_template(&doc), Err(ParseError::BadParamType { .. })));
    }

    #[test]
    fn settings_examples() {
        let s = parse_settings(r#"{"yDim":"age"}"#).unwrap();
        assert_eq!(s.get("yDim"), Some(&ArgumentValue::string("age")));
        assert_eq!(s.len(), 1);
        assert!(parse_settings("{}").unwrap().is_empty());
        let s = parse_settings(r#"{"$filters":[{"column":"year","kind":"range","min":2000,"max":2010}]}"#).unwrap();
        assert_eq!(s.filters(), Some(&[Filter::range("year", 2000.0, 2010.0)][..]));
    }

    #[test]
    fn settings_round_trip() {
        let text = r#"{
  "cols": [
    "a",
    "b"
  ],
  "n": 2.5,
  "x": null,
  "$filters": [
    {
      "column": "region",
      "kind": "oneOf",
      "values": [
        "Asia",
        1
      ]
    }
  ]
}"#;
        assert_eq!(serialize_settings(&parse_settings(text).unwrap()), text);
        assert_eq!(serialize_settings(&parse_settings("{}").unwrap()), "{}");
    }

    #[test]
    fn bad_settings() {
        assert!(matches!(
            parse_settings(r#"{"$filters":[{"column":"y","kind":"range","min":3,"max":1}]}"#),
            Err(ParseError::BadFilterShape { index: 0, .. })
        ));
        assert!(matches!(
            parse_settings(r#"{"$filters":[{"column":"y","kind":"between"}]}"#),
            Err(ParseError::BadFilterShape { .. })
        ));
        assert!(matches!(
            parse_settings(r#"{"a":{"b":1}}"#),
            Err(ParseError::BadSettingsValue { .. })
        ));
        assert!(matches!(parse_settings(r#"{"a":[1]}"#), Err(ParseError::BadSettingsValue { .. })));
        assert!(matches!(parse_settings("{"), Err(ParseError::Json(_))));
    }
}
