//! Domain types shared by every other module: templates, parameter types,
//! settings, expressions and the results of matching.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::json::{JsonValue, Map, Number};
use crate::predicate::{PredValue, Predicate};

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut bytes = s.bytes();
    matches!(bytes.next(), Some(b) if b == b'_' || b.is_ascii_alphabetic())
        && bytes.all(|b| b == b'_' || b.is_ascii_alphanumeric())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DataRole {
    Measure,
    Dimension,
    Time,
}

impl DataRole {
    pub const ALL: [DataRole; 3] = [DataRole::Measure, DataRole::Dimension, DataRole::Time];

    pub fn as_str(self) -> &'static str {
        match self {
            DataRole::Measure => "Measure",
            DataRole::Dimension => "Dimension",
            DataRole::Time => "Time",
        }
    }
}

impl fmt::Display for DataRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown data role `{0}` (expected Measure, Dimension or Time)")]
pub struct UnknownRole(pub String);

impl std::str::FromStr for DataRole {
    type Err = UnknownRole;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Measure" => Ok(DataRole::Measure),
            "Dimension" => Ok(DataRole::Dimension),
            "Time" => Ok(DataRole::Time),
            other => Err(UnknownRole(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamType {
    DataTarget {
        allowed_roles: Vec<DataRole>,
        required: bool,
    },
    MultiDataTarget {
        allowed_roles: Vec<DataRole>,
        required: bool,
        min_count: Option<usize>,
        max_count: Option<usize>,
    },
    String,
    Number {
        min: f64,
        max: f64,
        step: f64,
    },
    Boolean,
    Enum {
        allowed_values: Vec<String>,
    },
    /// Display-only literal text.
    Text {
        text: String,
    },
    /// Display-only section heading.
    Section {
        label: String,
    },
}

impl ParamType {
    pub fn tag(&self) -> &'static str {
        match self {
            ParamType::DataTarget { .. } => "DataTarget",
            ParamType::MultiDataTarget { .. } => "MultiDataTarget",
            ParamType::String => "String",
            ParamType::Number { .. } => "Number",
            ParamType::Boolean => "Boolean",
            ParamType::Enum { .. } => "Enum",
            ParamType::Text { .. } => "Text",
            ParamType::Section { .. } => "Section",
        }
    }

    pub fn is_data(&self) -> bool {
        matches!(
            self,
            ParamType::DataTarget { .. } | ParamType::MultiDataTarget { .. }
        )
    }

    pub fn is_display_only(&self) -> bool {
        matches!(self, ParamType::Text { .. } | ParamType::Section { .. })
    }

    pub fn allowed_roles(&self) -> &[DataRole] {
        match self {
            ParamType::DataTarget { allowed_roles, .. }
            | ParamType::MultiDataTarget { allowed_roles, .. } => allowed_roles,
            _ => &[],
        }
    }

    pub fn accepts_role(&self, role: DataRole) -> bool {
        self.allowed_roles().contains(&role)
    }

    pub fn is_required(&self) -> bool {
        match self {
            ParamType::DataTarget { required, .. }
            | ParamType::MultiDataTarget { required, .. } => *required,
            _ => false,
        }
    }

    /// Checks the configuration invariants of the type itself.
    pub fn check_config(&self) -> Result<(), String> {
        match self {
            ParamType::DataTarget { allowed_roles, .. } => check_roles(allowed_roles),
            ParamType::MultiDataTarget {
                allowed_roles,
                min_count,
                max_count,
                ..
            } => {
                check_roles(allowed_roles)?;
                match (min_count, max_count) {
                    (Some(lo), Some(hi)) if lo > hi => {
                        Err(format!("minCount {lo} exceeds maxCount {hi}"))
                    }
                    _ => Ok(()),
                }
            }
            ParamType::Number { min, max, step } => {
                if min > max {
                    Err(format!("min {min} exceeds max {max}"))
                } else if *step <= 0.0 {
                    Err(format!("step {step} must be positive"))
                } else {
                    Ok(())
                }
            }
            ParamType::Enum { allowed_values } => {
                if allowed_values.is_empty() {
                    return Err("allowedValues must not be empty".into());
                }
                let mut seen = HashSet::new();
                for v in allowed_values {
                    if !seen.insert(v) {
                        return Err(format!("duplicate allowed value `{v}`"));
                    }
                }
                Ok(())
            }
            ParamType::String
            | ParamType::Boolean
            | ParamType::Text { .. }
            | ParamType::Section { .. } => Ok(()),
        }
    }
}

fn check_roles(roles: &[DataRole]) -> Result<(), String> {
    if roles.is_empty() {
        return Err("allowedRoles must not be empty".into());
    }
    let unique: HashSet<_> = roles.iter().collect();
    if unique.len() != roles.len() {
        return Err("allowedRoles contains duplicates".into());
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub param_type: ParamType,
    pub display_predicate: Option<Predicate>,
    pub default_value: Option<ArgumentValue>,
}

impl Parameter {
    pub fn new(name: impl Into<String>, param_type: ParamType) -> Self {
        Parameter {
            name: name.into(),
            param_type,
            display_predicate: None,
            default_value: None,
        }
    }

    pub fn with_default(mut self, value: ArgumentValue) -> Self {
        self.default_value = Some(value);
        self
    }

    pub fn with_display_predicate(mut self, predicate: Predicate) -> Self {
        self.display_predicate = Some(predicate);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub description: String,
}

/// A parameter's argument: an atomic JSON value, or a list of column names
/// for `MultiDataTarget` parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ArgumentValue {
    Atomic(JsonValue),
    StringList(Vec<String>),
}

impl ArgumentValue {
    pub fn string(s: impl Into<String>) -> Self {
        ArgumentValue::Atomic(JsonValue::String(s.into()))
    }

    pub fn number(n: f64) -> Self {
        ArgumentValue::Atomic(JsonValue::number(n).unwrap_or(JsonValue::Null))
    }

    pub fn boolean(b: bool) -> Self {
        ArgumentValue::Atomic(JsonValue::Bool(b))
    }

    pub fn to_json(&self) -> JsonValue {
        match self {
            ArgumentValue::Atomic(v) => v.clone(),
            ArgumentValue::StringList(items) => {
                JsonValue::Array(items.iter().map(|s| JsonValue::String(s.clone())).collect())
            }
        }
    }

    pub fn from_json(value: &JsonValue) -> Option<ArgumentValue> {
        match value {
            JsonValue::Array(items) => items
                .iter()
                .map(|i| i.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
                .map(ArgumentValue::StringList),
            JsonValue::Object(_) => None,
            atomic => Some(ArgumentValue::Atomic(atomic.clone())),
        }
    }

    /// Text spliced into interpolated strings. Lists join with commas.
    pub fn splice_text(&self) -> String {
        match self {
            ArgumentValue::Atomic(v) => v.splice_text(),
            ArgumentValue::StringList(items) => items.join(","),
        }
    }

    pub fn pred_value(&self) -> PredValue {
        match self {
            ArgumentValue::Atomic(v) => PredValue::from(v),
            ArgumentValue::StringList(items) => PredValue::List(items.clone()),
        }
    }

    /// Column names this value binds when used by a data parameter.
    pub fn column_names(&self) -> Vec<&str> {
        match self {
            ArgumentValue::Atomic(JsonValue::String(s)) => vec![s.as_str()],
            ArgumentValue::StringList(items) => items.iter().map(String::as_str).collect(),
            ArgumentValue::Atomic(_) => Vec::new(),
        }
    }
}

impl From<&str> for ArgumentValue {
    fn from(s: &str) -> Self {
        ArgumentValue::string(s)
    }
}

impl From<bool> for ArgumentValue {
    fn from(b: bool) -> Self {
        ArgumentValue::boolean(b)
    }
}

impl From<i32> for ArgumentValue {
    fn from(n: i32) -> Self {
        ArgumentValue::Atomic(JsonValue::Number(Number::from(n)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FilterKind {
    Range { min: f64, max: f64 },
    OneOf { values: Vec<JsonValue> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Filter {
    pub column: String,
    pub kind: FilterKind,
}

impl Filter {
    pub fn range(column: impl Into<String>, min: f64, max: f64) -> Self {
        Filter {
            column: column.into(),
            kind: FilterKind::Range { min, max },
        }
    }

    pub fn one_of(column: impl Into<String>, values: Vec<JsonValue>) -> Self {
        Filter {
            column: column.into(),
            kind: FilterKind::OneOf { values },
        }
    }
}

/// Argument values keyed by parameter name, plus optional dataset filters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: Map<ArgumentValue>,
    filters: Option<Vec<Filter>>,
}

impl Settings {
    pub fn new() -> Self {
        Settings::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<ArgumentValue>) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: impl Into<ArgumentValue>) {
        self.values.insert(name.into(), value.into());
    }

    pub fn remove(&mut self, name: &str) -> Option<ArgumentValue> {
        self.values.shift_remove(name)
    }

    pub fn get(&self, name: &str) -> Option<&ArgumentValue> {
        self.values.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ArgumentValue)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty() && self.filters.is_none()
    }

    /// `None` when the settings document had no `$filters` entry.
    pub fn filters(&self) -> Option<&[Filter]> {
        self.filters.as_deref()
    }

    pub fn set_filters(&mut self, filters: Option<Vec<Filter>>) {
        self.filters = filters;
    }

    /// Copy with every value from `overrides` applied on top, keeping this
    /// value's key order for keys already present.
    pub fn overridden_by<'a>(
        &self,
        overrides: impl IntoIterator<Item = (&'a String, &'a ArgumentValue)>,
    ) -> Settings {
        let mut out = self.clone();
        for (k, v) in overrides {
            out.values.insert(k.clone(), v.clone());
        }
        out
    }
}

impl<K: Into<String>, V: Into<ArgumentValue>> FromIterator<(K, V)> for Settings {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut s = Settings::new();
        for (k, v) in iter {
            s.set(k, v);
        }
        s
    }
}

/// Template body expression: JSON extended with variables and conditionals.
#[derive(Clone, Debug, PartialEq)]
pub enum Expression {
    /// String, number, boolean or null.
    Atomic(JsonValue),
    Object(Map<Expression>),
    List(Vec<Expression>),
    Variable(String),
    Interpolated(Vec<Segment>),
    Conditional(Box<Conditional>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Segment {
    Text(String),
    Variable(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conditional {
    pub query: Predicate,
    pub then_branch: Option<Expression>,
    pub else_branch: Option<Expression>,
}

impl Expression {
    /// Lifts a plain JSON value without recognising brackets or conditionals.
    pub fn literal(value: &JsonValue) -> Expression {
        match value {
            JsonValue::Object(map) => Expression::Object(
                map.iter()
                    .map(|(k, v)| (k.clone(), Expression::literal(v)))
                    .collect(),
            ),
            JsonValue::Array(items) => Expression::List(items.iter().map(Expression::literal).collect()),
            atomic => Expression::Atomic(atomic.clone()),
        }
    }

    /// Walks the tree, calling `visit` on every variable name (including
    /// interpolation segments) and every predicate.
    pub fn visit_references<'a>(
        &'a self,
        on_variable: &mut dyn FnMut(&'a str),
        on_predicate: &mut dyn FnMut(&'a Predicate),
    ) {
        match self {
            Expression::Atomic(_) => {}
            Expression::Object(map) => {
                for v in map.values() {
                    v.visit_references(on_variable, on_predicate);
                }
            }
            Expression::List(items) => {
                for v in items {
                    v.visit_references(on_variable, on_predicate);
                }
            }
            Expression::Variable(name) => on_variable(name),
            Expression::Interpolated(segments) => {
                for seg in segments {
                    if let Segment::Variable(name) = seg {
                        on_variable(name);
                    }
                }
            }
            Expression::Conditional(cond) => {
                on_predicate(&cond.query);
                if let Some(e) = &cond.then_branch {
                    e.visit_references(on_variable, on_predicate);
                }
                if let Some(e) = &cond.else_branch {
                    e.visit_references(on_variable, on_predicate);
                }
            }
        }
    }

    /// Every name the expression refers to, in first-use order.
    pub fn referenced_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        let push = |n: &str, names: &mut Vec<String>| {
            if !names.iter().any(|x| x == n) {
                names.push(n.to_string());
            }
        };
        let mut vars = Vec::new();
        let mut preds = Vec::new();
        self.visit_references(&mut |n| vars.push(n), &mut |p| preds.push(p));
        for v in vars {
            push(v, &mut names);
        }
        for p in preds {
            for id in p.identifiers() {
                push(id, &mut names);
            }
        }
        names
    }

    /// Resolves a JSON pointer through objects and lists (not conditionals).
    pub fn pointer(&self, pointer: &str) -> Option<&Expression> {
        let tokens = crate::json::parse_pointer(pointer).ok()?;
        let mut current = self;
        for token in &tokens {
            current = match current {
                Expression::Object(map) => map.get(token)?,
                Expression::List(items) => items.get(crate::json::array_index(token)?)?,
                _ => return None,
            };
        }
        Some(current)
    }

    pub fn pointer_mut(&mut self, pointer: &str) -> Option<&mut Expression> {
        let tokens = crate::json::parse_pointer(pointer).ok()?;
        let mut current = self;
        for token in &tokens {
            current = match current {
                Expression::Object(map) => map.get_mut(token)?,
                Expression::List(items) => items.get_mut(crate::json::array_index(token)?)?,
                _ => return None,
            };
        }
        Some(current)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Template {
    pub name: String,
    pub description: String,
    pub language: String,
    pub params: Vec<Parameter>,
    pub body: Expression,
    pub symbols: Vec<Symbol>,
    pub metadata: Map<String>,
    pub version: u64,
}

impl Template {
    pub fn new(name: impl Into<String>, language: impl Into<String>, body: Expression) -> Self {
        Template {
            name: name.into(),
            description: String::new(),
            language: language.into(),
            params: Vec::new(),
            body,
            symbols: Vec::new(),
            metadata: Map::new(),
            version: 1,
        }
    }

    pub fn param(&self, name: &str) -> Option<&Parameter> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn data_params(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter().filter(|p| p.param_type.is_data())
    }

    pub fn is_symbol(&self, name: &str) -> bool {
        self.symbols.iter().any(|s| s.name == name)
    }

    pub fn declares(&self, name: &str) -> bool {
        self.param(name).is_some() || self.is_symbol(name)
    }

    /// Settings with parameter defaults filled in for unset parameters.
    /// Explicit values keep their positions; defaults follow in declaration order.
    pub fn effective_settings(&self, settings: &Settings) -> Settings {
        let mut out = settings.clone();
        for p in &self.params {
            if let Some(default) = &p.default_value {
                if !out.contains(&p.name) {
                    out.set(p.name.clone(), default.clone());
                }
            }
        }
        out
    }

    /// Checks every settings entry against its declared parameter.
    pub fn validate_settings(&self, settings: &Settings) -> Vec<ArgumentViolation> {
        let mut out = Vec::new();
        for (name, value) in settings.iter() {
            match self.param(name) {
                Some(p) => {
                    if let Err(v) = validate_argument(p, value) {
                        out.push(v);
                    }
                }
                None => out.push(ArgumentViolation {
                    parameter: name.clone(),
                    reason: ViolationReason::UnknownParameter,
                }),
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationReason {
    UnknownParameter,
    WrongType { expected: &'static str, found: String },
    OutOfRange { value: f64, min: f64, max: f64 },
    NotAllowed { value: String, allowed: Vec<String> },
    Count { count: usize, min: Option<usize>, max: Option<usize> },
    DisplayOnly,
}

impl fmt::Display for ViolationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationReason::UnknownParameter => f.write_str("no such parameter"),
            ViolationReason::WrongType { expected, found } => {
                write!(f, "expected {expected}, found {found}")
            }
            ViolationReason::OutOfRange { value, min, max } => {
                write!(f, "{value} is outside [{min}, {max}]")
            }
            ViolationReason::NotAllowed { value, allowed } => {
                write!(f, "`{value}` is not one of {allowed:?}")
            }
            ViolationReason::Count { count, min, max } => {
                write!(f, "{count} columns given; allowed count is ")?;
                match (min, max) {
                    (Some(lo), Some(hi)) => write!(f, "{lo}..={hi}"),
                    (Some(lo), None) => write!(f, "at least {lo}"),
                    (None, Some(hi)) => write!(f, "at most {hi}"),
                    (None, None) => f.write_str("unbounded"),
                }
            }
            ViolationReason::DisplayOnly => f.write_str("display-only parameters take no value"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("parameter `{parameter}`: {reason}")]
pub struct ArgumentViolation {
    pub parameter: String,
    pub reason: ViolationReason,
}

fn describe(v: &ArgumentValue) -> String {
    match v {
        ArgumentValue::Atomic(j) => j.type_name().to_string(),
        ArgumentValue::StringList(_) => "list of strings".to_string(),
    }
}

/// Checks that `value` is a legal argument for `param`.
///
/// Enum values are compared by their spliced text, so the number `2000`
/// satisfies an allowed value of `"2000"`.
pub fn validate_argument(param: &Parameter, value: &ArgumentValue) -> Result<(), ArgumentViolation> {
    let violation = |reason| {
        Err(ArgumentViolation {
            parameter: param.name.clone(),
            reason,
        })
    };
    let wrong = |expected: &'static str| {
        violation(ViolationReason::WrongType {
            expected,
            found: describe(value),
        })
    };
    match (&param.param_type, value) {
        (ParamType::DataTarget { .. }, ArgumentValue::Atomic(JsonValue::String(_))) => Ok(()),
        (ParamType::DataTarget { .. }, _) => wrong("a column name string"),
        (
            ParamType::MultiDataTarget {
                min_count,
                max_count,
                ..
            },
            ArgumentValue::StringList(items),
        ) => {
            let n = items.len();
            if min_count.is_some_and(|lo| n < lo) || max_count.is_some_and(|hi| n > hi) {
                violation(ViolationReason::Count {
                    count: n,
                    min: *min_count,
                    max: *max_count,
                })
            } else {
                Ok(())
            }
        }
        (ParamType::MultiDataTarget { .. }, _) => wrong("a list of column names"),
        (ParamType::String, ArgumentValue::Atomic(JsonValue::String(_))) => Ok(()),
        (ParamType::String, _) => wrong("a string"),
        (ParamType::Boolean, ArgumentValue::Atomic(JsonValue::Bool(_))) => Ok(()),
        (ParamType::Boolean, _) => wrong("a boolean"),
        (ParamType::Number { min, max, .. }, ArgumentValue::Atomic(JsonValue::Number(n))) => {
            let n = n.get();
            if n < *min || n > *max {
                violation(ViolationReason::OutOfRange {
                    value: n,
                    min: *min,
                    max: *max,
                })
            } else {
                Ok(())
            }
        }
        (ParamType::Number { .. }, _) => wrong("a number"),
        (ParamType::Enum { allowed_values }, ArgumentValue::Atomic(v))
            if matches!(
                v,
                JsonValue::String(_) | JsonValue::Number(_) | JsonValue::Bool(_)
            ) =>
        {
            let text = v.splice_text();
            if allowed_values.contains(&text) {
                Ok(())
            } else {
                violation(ViolationReason::NotAllowed {
                    value: text,
                    allowed: allowed_values.clone(),
                })
            }
        }
        (ParamType::Enum { .. }, _) => wrong("one of the allowed values"),
        (ParamType::Text { .. } | ParamType::Section { .. }, _) => {
            violation(ViolationReason::DisplayOnly)
        }
    }
}

/// Lint findings for a template. An empty list means well-formed.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    UndeclaredVariable(String),
    UnusedParameter(String),
    DuplicateName(String),
    InvalidName(String),
    InvalidParamType { param: String, reason: String },
    InvalidDefault { param: String, reason: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UndeclaredVariable(n) => write!(f, "`{n}` is not a declared parameter or symbol"),
            Diagnostic::UnusedParameter(n) => write!(f, "parameter `{n}` is never referenced by the body"),
            Diagnostic::DuplicateName(n) => write!(f, "`{n}` is declared more than once"),
            Diagnostic::InvalidName(n) => write!(f, "`{n}` is not a valid identifier"),
            Diagnostic::InvalidParamType { param, reason } => {
                write!(f, "parameter `{param}` has an invalid type configuration: {reason}")
            }
            Diagnostic::InvalidDefault { param, reason } => {
                write!(f, "default value of `{param}` is invalid: {reason}")
            }
        }
    }
}

impl Diagnostic {
    pub fn code(&self) -> &'static str {
        match self {
            Diagnostic::UndeclaredVariable(_) => "UndeclaredVariable",
            Diagnostic::UnusedParameter(_) => "UnusedParameter",
            Diagnostic::DuplicateName(_) => "DuplicateName",
            Diagnostic::InvalidName(_) => "InvalidName",
            Diagnostic::InvalidParamType { .. } => "InvalidParamType",
            Diagnostic::InvalidDefault { .. } => "InvalidDefault",
        }
    }
}

pub fn lint_template(t: &Template) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    let declared = t
        .params
        .iter()
        .map(|p| &p.name)
        .chain(t.symbols.iter().map(|s| &s.name));
    for name in declared {
        if !is_identifier(name) {
            out.push(Diagnostic::InvalidName(name.clone()));
        }
        if !seen.insert(name.as_str()) {
            out.push(Diagnostic::DuplicateName(name.clone()));
        }
    }

    for p in &t.params {
        if let Err(reason) = p.param_type.check_config() {
            out.push(Diagnostic::InvalidParamType {
                param: p.name.clone(),
                reason,
            });
        } else if let Some(default) = &p.default_value {
            if let Err(v) = validate_argument(p, default) {
                out.push(Diagnostic::InvalidDefault {
                    param: p.name.clone(),
                    reason: v.reason.to_string(),
                });
            }
        }
    }

    let used = t.body.referenced_names();
    let mut undeclared: Vec<String> = used.iter().filter(|n| !t.declares(n)).cloned().collect();
    for p in &t.params {
        if let Some(pred) = &p.display_predicate {
            for id in pred.identifiers() {
                if !t.declares(id) && !undeclared.iter().any(|u| u == id) {
                    undeclared.push(id.to_string());
                }
            }
        }
    }
    out.extend(undeclared.into_iter().map(Diagnostic::UndeclaredVariable));

    for p in &t.params {
        if !p.param_type.is_display_only() && !used.iter().any(|u| *u == p.name) {
            out.push(Diagnostic::UnusedParameter(p.name.clone()));
        }
    }
    out
}

/// Outcome of matching a set of columns against a template's data parameters.
/// The mapping goes from column name to parameter name, in query order.
#[derive(Clone, Debug, PartialEq)]
pub enum MatchResult {
    Complete(Map<String>),
    Partial(Map<String>),
    NoMatch,
}

impl MatchResult {
    pub fn is_match(&self) -> bool {
        !matches!(self, MatchResult::NoMatch)
    }

    pub fn mapping(&self) -> Option<&Map<String>> {
        match self {
            MatchResult::Complete(m) | MatchResult::Partial(m) => Some(m),
            MatchResult::NoMatch => None,
        }
    }

    /// `{"kind": ..., "mapping": {column: parameter}}`; no mapping for NoMatch.
    pub fn to_json(&self) -> JsonValue {
        let mut m = Map::new();
        m.insert("kind".to_string(), JsonValue::from(self.kind()));
        if let Some(mapping) = self.mapping() {
            let fields = mapping.iter().map(|(k, v)| (k.clone(), JsonValue::from(v.as_str()))).collect();
            m.insert("mapping".to_string(), JsonValue::Object(fields));
        }
        JsonValue::Object(m)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MatchResult::Complete(_) => "complete",
            MatchResult::Partial(_) => "partial",
            MatchResult::NoMatch => "none",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(roles: &[DataRole], required: bool) -> ParamType {
        ParamType::DataTarget {
            allowed_roles: roles.to_vec(),
            required,
        }
    }

    fn template_with(params: Vec<Parameter>, body: Expression) -> Template {
        let mut t = Template::new("t", "vega-lite", body);
        t.params = params;
        t
    }

    fn obj(fields: Vec<(&str, Expression)>) -> Expression {
        Expression::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("yDim"));
        assert!(is_identifier("_x9"));
        assert!(!is_identifier("9x"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("a-b"));
    }

    #[test]
    fn lint_clean_when_all_references_declared() {
        let t = template_with(
            vec![Parameter::new("yDim", data(&[DataRole::Measure], true))],
            obj(vec![("field", Expression::Variable("yDim".into()))]),
        );
        assert_eq!(lint_template(&t), vec![]);
    }

    #[test]
    fn lint_reports_undeclared_reference() {
        let t = template_with(vec![], obj(vec![("field", Expression::Variable("zDim".into()))]));
        assert_eq!(lint_template(&t), vec![Diagnostic::UndeclaredVariable("zDim".into())]);
    }

    #[test]
    fn lint_reports_unused_parameter() {
        let t = template_with(
            vec![
                Parameter::new("yDim", data(&[DataRole::Measure], true)),
                Parameter::new("sort", ParamType::Boolean),
            ],
            obj(vec![("field", Expression::Variable("yDim".into()))]),
        );
        assert_eq!(lint_template(&t), vec![Diagnostic::UnusedParameter("sort".into())]);
    }

    #[test]
    fn predicate_references_count_as_uses() {
        let cond = Conditional {
            query: Predicate::parse("sort == true").unwrap(),
            then_branch: Some(Expression::Atomic("-x".into())),
            else_branch: None,
        };
        let t = template_with(
            vec![Parameter::new("sort", ParamType::Boolean)],
            obj(vec![("sort", Expression::Conditional(Box::new(cond)))]),
        );
        assert_eq!(lint_template(&t), vec![]);
    }

    #[test]
    fn lint_reports_duplicates_and_bad_config() {
        let mut t = template_with(
            vec![
                Parameter::new("a", ParamType::Enum { allowed_values: vec![] }),
                Parameter::new(
                    "n",
                    ParamType::Number {
                        min: 0.0,
                        max: 10.0,
                        step: 1.0,
                    },
                )
                .with_default(ArgumentValue::number(50.0)),
            ],
            obj(vec![
                ("a", Expression::Variable("a".into())),
                ("n", Expression::Variable("n".into())),
            ]),
        );
        t.symbols.push(Symbol {
            name: "a".into(),
            description: String::new(),
        });
        let d = lint_template(&t);
        assert!(d.contains(&Diagnostic::DuplicateName("a".into())));
        assert!(d.iter().any(|x| matches!(x, Diagnostic::InvalidParamType { param, .. } if param == "a")));
        assert!(d.iter().any(|x| matches!(x, Diagnostic::InvalidDefault { param, .. } if param == "n")));
    }

    #[test]
    fn enum_membership() {
        let p = Parameter::new(
            "agg",
            ParamType::Enum {
                allowed_values: vec!["count".into(), "distinct".into()],
            },
        );
        assert!(validate_argument(&p, &"count".into()).is_ok());
        assert!(validate_argument(&p, &"sum".into()).is_err());
    }

    #[test]
    fn enum_accepts_number_by_text() {
        let p = Parameter::new(
            "year",
            ParamType::Enum {
                allowed_values: vec!["1990".into(), "2000".into()],
            },
        );
        assert!(validate_argument(&p, &2000.into()).is_ok());
        assert!(validate_argument(&p, &1980.into()).is_err());
    }

    #[test]
    fn number_out_of_range() {
        let p = Parameter::new(
            "w",
            ParamType::Number {
                min: 0.0,
                max: 100.0,
                step: 1.0,
            },
        );
        let err = validate_argument(&p, &150.into()).unwrap_err();
        assert!(matches!(err.reason, ViolationReason::OutOfRange { .. }));
        assert!(validate_argument(&p, &100.into()).is_ok());
        assert!(validate_argument(&p, &0.into()).is_ok());
    }

    #[test]
    fn multi_target_count_bounds() {
        let p = Parameter::new(
            "cols",
            ParamType::MultiDataTarget {
                allowed_roles: DataRole::ALL.to_vec(),
                required: true,
                min_count: Some(2),
                max_count: None,
            },
        );
        let err = validate_argument(&p, &ArgumentValue::StringList(vec!["a".into()])).unwrap_err();
        assert!(matches!(err.reason, ViolationReason::Count { count: 1, .. }));
        assert!(validate_argument(&p, &ArgumentValue::StringList(vec!["a".into(), "b".into()])).is_ok());
        assert!(validate_argument(&p, &"a".into()).is_err());
    }

    #[test]
    fn string_lists_only_for_multi_targets() {
        let p = Parameter::new("x", data(&[DataRole::Measure], true));
        assert!(validate_argument(&p, &ArgumentValue::StringList(vec!["a".into()])).is_err());
        assert!(validate_argument(&p, &"a".into()).is_ok());
        let b = Parameter::new("b", ParamType::Boolean);
        assert!(validate_argument(&b, &true.into()).is_ok());
        assert!(validate_argument(&b, &"true".into()).is_err());
    }

    #[test]
    fn effective_settings_fill_defaults() {
        let t = template_with(
            vec![
                Parameter::new("sort", ParamType::Boolean).with_default(false.into()),
                Parameter::new("x", ParamType::String),
            ],
            Expression::Atomic(JsonValue::Null),
        );
        let s = t.effective_settings(&Settings::new().with("x", "a"));
        assert_eq!(s.get("sort"), Some(&ArgumentValue::boolean(false)));
        let s = t.effective_settings(&Settings::new().with("sort", true));
        assert_eq!(s.get("sort"), Some(&ArgumentValue::boolean(true)));
    }
}
