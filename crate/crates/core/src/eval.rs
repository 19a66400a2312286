//! Template application: substitute arguments, then evaluate conditionals.
//!
//! An else-less conditional whose query is false evaluates to bottom, which
//! deletes the enclosing object field or list element.

use thiserror::Error;

use crate::data::{apply_filters, DataError, Dataset};
use crate::json::{JsonValue, Map};
use crate::languages::{self, LanguageError, LanguageRegistry, SchemaError};
use crate::model::{
    lint_template, ArgumentValue, ArgumentViolation, Conditional, Diagnostic, Expression, Segment,
    Settings, Symbol, Template,
};
use crate::predicate::{PredValue, Predicate};

#[derive(Clone, Debug, PartialEq)]
pub enum EvalOutcome {
    Value(JsonValue),
    Bottom,
}

impl EvalOutcome {
    pub fn into_value(self) -> Option<JsonValue> {
        match self {
            EvalOutcome::Value(v) => Some(v),
            EvalOutcome::Bottom => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("the whole template body evaluated to a deleted conditional")]
    TopLevelBottom,
    #[error("template references undeclared names: {}", .0.join(", "))]
    UndeclaredVariable(Vec<String>),
    #[error("invalid settings: {}", join_violations(.0))]
    InvalidSettings(Vec<ArgumentViolation>),
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("spec violates the {language} schema ({} errors)", errors.len())]
    SchemaViolation { language: String, errors: Vec<SchemaError> },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Language(#[from] LanguageError),
}

fn join_violations(v: &[ArgumentViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Argument values and symbols visible to a body during evaluation.
#[derive(Clone, Copy, Debug)]
pub struct Bindings<'a> {
    pub settings: &'a Settings,
    pub symbols: &'a [Symbol],
}

impl<'a> Bindings<'a> {
    pub fn new(settings: &'a Settings, symbols: &'a [Symbol]) -> Self {
        Bindings { settings, symbols }
    }

    fn is_symbol(&self, name: &str) -> bool {
        self.symbols.iter().any(|s| s.name == name)
    }

    /// Settings value, else the symbol's own name, else null.
    pub fn value(&self, name: &str) -> JsonValue {
        match self.settings.get(name) {
            Some(v) => v.to_json(),
            None if self.is_symbol(name) => JsonValue::String(name.to_string()),
            None => JsonValue::Null,
        }
    }

    fn splice(&self, name: &str) -> String {
        match self.settings.get(name) {
            Some(v) => v.splice_text(),
            None if self.is_symbol(name) => name.to_string(),
            None => String::new(),
        }
    }

    pub fn pred_value(&self, name: &str) -> PredValue {
        match self.settings.get(name) {
            Some(v) => v.pred_value(),
            None if self.is_symbol(name) => PredValue::String(name.to_string()),
            None => PredValue::Null,
        }
    }
}

pub fn eval_predicate(p: &Predicate, settings: &Settings, symbols: &[Symbol]) -> bool {
    let b = Bindings::new(settings, symbols);
    p.eval_with(&|name| b.pred_value(name))
}

fn argument_expression(v: &ArgumentValue) -> Expression {
    match v {
        ArgumentValue::Atomic(a) => Expression::Atomic(a.clone()),
        ArgumentValue::StringList(items) => Expression::List(
            items
                .iter()
                .map(|s| Expression::Atomic(JsonValue::String(s.clone())))
                .collect(),
        ),
    }
}

/// Replaces references to set parameters and symbols by their values.
/// Conditionals keep their queries; branches are substituted but not chosen.
pub fn substitute(body: &Expression, settings: &Settings, symbols: &[Symbol]) -> Expression {
    let b = Bindings::new(settings, symbols);
    substitute_with(body, &b)
}

fn substitute_with(e: &Expression, b: &Bindings) -> Expression {
    match e {
        Expression::Atomic(_) => e.clone(),
        Expression::Object(map) => Expression::Object(
            map.iter()
                .map(|(k, v)| (k.clone(), substitute_with(v, b)))
                .collect(),
        ),
        Expression::List(items) => Expression::List(items.iter().map(|v| substitute_with(v, b)).collect()),
        Expression::Variable(name) => match b.settings.get(name) {
            Some(v) => argument_expression(v),
            None if b.is_symbol(name) => Expression::Atomic(JsonValue::String(name.clone())),
            None => e.clone(),
        },
        Expression::Interpolated(segments) => {
            let mut out: Vec<Segment> = Vec::new();
            for seg in segments {
                let resolved = match seg {
                    Segment::Variable(name) if b.settings.contains(name) || b.is_symbol(name) => {
                        Segment::Text(b.splice(name))
                    }
                    other => other.clone(),
                };
                match (out.last_mut(), resolved) {
                    (Some(Segment::Text(prev)), Segment::Text(t)) => prev.push_str(&t),
                    (_, Segment::Text(t)) if t.is_empty() => {}
                    (_, seg) => out.push(seg),
                }
            }
            if out.iter().all(|s| matches!(s, Segment::Text(_))) {
                let text: String = out
                    .into_iter()
                    .map(|s| match s {
                        Segment::Text(t) => t,
                        Segment::Variable(_) => unreachable!(),
                    })
                    .collect();
                Expression::Atomic(JsonValue::String(text))
            } else {
                Expression::Interpolated(out)
            }
        }
        Expression::Conditional(c) => Expression::Conditional(Box::new(Conditional {
            query: c.query.clone(),
            then_branch: c.then_branch.as_ref().map(|t| substitute_with(t, b)),
            else_branch: c.else_branch.as_ref().map(|t| substitute_with(t, b)),
        })),
    }
}

/// Evaluates an expression. References still present resolve through
/// `bindings`, so a raw body and its substitution evaluate alike.
pub fn evaluate(e: &Expression, bindings: &Bindings) -> EvalOutcome {
    match eval_inner(e, bindings) {
        Some(v) => EvalOutcome::Value(v),
        None => EvalOutcome::Bottom,
    }
}

fn eval_inner(e: &Expression, b: &Bindings) -> Option<JsonValue> {
    match e {
        Expression::Atomic(v) => Some(v.clone()),
        Expression::Object(map) => {
            let mut out = Map::new();
            for (k, v) in map.iter() {
                if let Some(value) = eval_inner(v, b) {
                    out.insert(k.clone(), value);
                }
            }
            Some(JsonValue::Object(out))
        }
        Expression::List(items) => Some(JsonValue::Array(items.iter().filter_map(|v| eval_inner(v, b)).collect())),
        Expression::Variable(name) => Some(b.value(name)),
        Expression::Interpolated(segments) => Some(JsonValue::String(
            segments
                .iter()
                .map(|s| match s {
                    Segment::Text(t) => t.clone(),
                    Segment::Variable(name) => b.splice(name),
                })
                .collect(),
        )),
        Expression::Conditional(c) => {
            let branch = if c.query.eval_with(&|name| b.pred_value(name)) {
                &c.then_branch
            } else {
                &c.else_branch
            };
            branch.as_ref().and_then(|e| eval_inner(e, b))
        }
    }
}

/// Evaluates a whole body; bottom at the top is an error.
pub fn evaluate_spec(e: &Expression, bindings: &Bindings) -> Result<JsonValue, EvalError> {
    evaluate(e, bindings).into_value().ok_or(EvalError::TopLevelBottom)
}

/// Settings-independent checks: the language exists and every reference is declared.
pub fn check_template(t: &Template, registry: &LanguageRegistry) -> Result<(), EvalError> {
    if registry.get(&t.language).is_none() {
        return Err(EvalError::UnknownLanguage(t.language.clone()));
    }
    let undeclared: Vec<String> = lint_template(t)
        .into_iter()
        .filter_map(|d| match d {
            Diagnostic::UndeclaredVariable(n) => Some(n),
            _ => None,
        })
        .collect();
    if undeclared.is_empty() {
        Ok(())
    } else {
        Err(EvalError::UndeclaredVariable(undeclared))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ApplyOptions<'a> {
    pub dataset: Option<&'a Dataset>,
    /// Validate the output against the language schema.
    pub validate: bool,
    pub registry: &'a LanguageRegistry,
}

impl Default for ApplyOptions<'_> {
    fn default() -> Self {
        ApplyOptions {
            dataset: None,
            validate: false,
            registry: languages::builtin(),
        }
    }
}

/// `apply_template_with` using the built-in languages and no schema validation.
pub fn apply_template(t: &Template, settings: &Settings, dataset: Option<&Dataset>) -> Result<JsonValue, EvalError> {
    apply_template_with(
        t,
        settings,
        &ApplyOptions {
            dataset,
            ..ApplyOptions::default()
        },
    )
}

/// Checks the settings, fills parameter defaults, substitutes, evaluates and
/// (given a dataset) injects the filtered rows.
pub fn apply_template_with(t: &Template, settings: &Settings, opts: &ApplyOptions) -> Result<JsonValue, EvalError> {
    check_template(t, opts.registry)?;
    let violations = t.validate_settings(settings);
    if !violations.is_empty() {
        return Err(EvalError::InvalidSettings(violations));
    }
    let effective = t.effective_settings(settings);
    let bindings = Bindings::new(&effective, &t.symbols);
    let substituted = substitute_with(&t.body, &bindings);
    let mut spec = evaluate_spec(&substituted, &bindings)?;
    if let Some(d) = opts.dataset {
        let filtered = match settings.filters() {
            Some(fs) => apply_filters(d, fs)?,
            None => d.clone(),
        };
        spec = opts.registry.inject_data(&t.language, &spec, &filtered.rows_json())?;
    }
    if opts.validate {
        let errors = opts.registry.validate_spec(&t.language, &spec)?;
        if !errors.is_empty() {
            return Err(EvalError::SchemaViolation {
                language: t.language.clone(),
                errors,
            });
        }
    }
    Ok(spec)
}

/// Parameters whose display predicate is absent or holds, in declaration order.
pub fn visible_params(t: &Template, settings: &Settings) -> Vec<String> {
    let effective = t.effective_settings(settings);
    t.params
        .iter()
        .filter(|p| {
            p.display_predicate
                .as_ref()
                .is_none_or(|pred| eval_predicate(pred, &effective, &t.symbols))
        })
        .map(|p| p.name.clone())
        .collect()
}
