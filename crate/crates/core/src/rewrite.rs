//! Templatization suggestions: rules that spot literals in a raw spec worth
//! turning into parameters.
//!
//! Vega-Lite rules:
//! - a `"field"` string naming a dataset column becomes a `DataTarget`
//!   restricted to that column's role;
//! - a numeric `"width"` or `"height"` becomes a `Number` (20 to 2000, step 10);
//! - a `"scheme"` string becomes an `Enum` seeded with that value.
//!
//! Vega has the data-field rule for `"field"` inside `"encode"` blocks.

use thiserror::Error;

use crate::data::Dataset;
use crate::json::{escape_pointer_token, JsonValue};
use crate::languages::{self, LanguageRegistry};
use crate::model::{is_identifier, ArgumentValue, DataRole, Expression, ParamType, Parameter, Template};
use crate::parser::{expression_to_json, param_to_json};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewriteError {
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("no literal {expected} at {path}; the body changed since the suggestion was made")]
    StalePath { path: String, expected: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuggestionKind {
    AbstractDataField,
    AbstractLiteral,
}

impl SuggestionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SuggestionKind::AbstractDataField => "AbstractDataField",
            SuggestionKind::AbstractLiteral => "AbstractLiteral",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Suggestion {
    pub id: String,
    pub description: String,
    /// JSON Pointer to the literal within the body.
    pub path: String,
    pub kind: SuggestionKind,
    pub proposed_param: Parameter,
    pub replacement: Expression,
    /// The literal found at `path`.
    pub original: JsonValue,
}

impl Suggestion {
    pub fn to_json(&self) -> JsonValue {
        let mut m = crate::json::Map::new();
        m.insert("id".into(), JsonValue::from(self.id.as_str()));
        m.insert("description".into(), JsonValue::from(self.description.as_str()));
        m.insert("path".into(), JsonValue::from(self.path.as_str()));
        m.insert("kind".into(), JsonValue::from(self.kind.as_str()));
        m.insert("proposedParam".into(), param_to_json(&self.proposed_param));
        m.insert("replacement".into(), expression_to_json(&self.replacement));
        m.insert("original".into(), self.original.clone());
        JsonValue::Object(m)
    }
}

/// One matched site before naming.
struct Site {
    rule: &'static str,
    path: String,
    name_base: String,
    kind: SuggestionKind,
    param_type: ParamType,
    default: Option<ArgumentValue>,
    original: JsonValue,
    description: String,
}

struct Walk<'a> {
    rule_set: &'a str,
    columns: &'a [(String, DataRole)],
    sites: Vec<Site>,
}

fn identifier_from(key: &str) -> String {
    let mut s: String = key
        .chars()
        .map(|c| if c == '_' || c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    if s.is_empty() || s.as_bytes()[0].is_ascii_digit() {
        s.insert(0, '_');
    }
    s
}

impl Walk<'_> {
    fn visit(&mut self, e: &Expression, path: &mut Vec<String>) {
        match e {
            Expression::Object(map) => {
                for (key, value) in map.iter() {
                    path.push(key.clone());
                    if let Expression::Atomic(lit) = value {
                        self.match_site(key, lit, path);
                    }
                    self.visit(value, path);
                    path.pop();
                }
            }
            Expression::List(items) => {
                for (i, item) in items.iter().enumerate() {
                    path.push(i.to_string());
                    self.visit(item, path);
                    path.pop();
                }
            }
            _ => {}
        }
    }

    /// Name base for a data field: the nearest enclosing property that is
    /// not `field` and not a list index (usually the encoding channel).
    fn channel_name(path: &[String]) -> String {
        path.iter()
            .rev()
            .skip(1)
            .find(|t| t.parse::<usize>().is_err())
            .map(|t| identifier_from(t))
            .unwrap_or_else(|| "field".to_string())
    }

    fn match_site(&mut self, key: &str, lit: &JsonValue, path: &[String]) {
        let pointer: String = path.iter().map(|t| format!("/{}", escape_pointer_token(t))).collect();
        let field_rule = match self.rule_set {
            "vega-lite" => key == "field",
            "vega" => key == "field" && path[..path.len() - 1].iter().any(|t| t == "encode"),
            _ => false,
        };
        if field_rule {
            if let JsonValue::String(col) = lit {
                if let Some((_, role)) = self.columns.iter().find(|(n, _)| n == col) {
                    self.sites.push(Site {
                        rule: "data-field",
                        path: pointer,
                        name_base: Self::channel_name(path),
                        kind: SuggestionKind::AbstractDataField,
                        param_type: ParamType::DataTarget {
                            allowed_roles: vec![*role],
                            required: true,
                        },
                        default: None,
                        original: lit.clone(),
                        description: format!("Replace the data field \"{col}\" with a {role} parameter"),
                    });
                }
            }
            return;
        }
        if self.rule_set != "vega-lite" {
            return;
        }
        match (key, lit) {
            ("width" | "height", JsonValue::Number(n)) => {
                let v = n.get();
                self.sites.push(Site {
                    rule: "size",
                    path: pointer,
                    name_base: key.to_string(),
                    kind: SuggestionKind::AbstractLiteral,
                    param_type: ParamType::Number {
                        min: v.min(20.0),
                        max: v.max(2000.0),
                        step: 10.0,
                    },
                    default: Some(ArgumentValue::Atomic(lit.clone())),
                    original: lit.clone(),
                    description: format!("Make {key} {} adjustable", n.to_canonical_string()),
                });
            }
            ("scheme", JsonValue::String(s)) => {
                self.sites.push(Site {
                    rule: "scheme",
                    path: pointer,
                    name_base: key.to_string(),
                    kind: SuggestionKind::AbstractLiteral,
                    param_type: ParamType::Enum {
                        allowed_values: vec![s.clone()],
                    },
                    default: Some(ArgumentValue::Atomic(lit.clone())),
                    original: lit.clone(),
                    description: format!("Offer the color scheme \"{s}\" as a choice"),
                });
            }
            _ => {}
        }
    }
}

/// `base`, then `base2`, `base3`, ... skipping names `taken` reports as used.
pub fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_string();
    }
    (2..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !taken(n))
        .expect("unbounded")
}

pub fn suggest(body: &Expression, language: &str, dataset: Option<&Dataset>) -> Result<Vec<Suggestion>, RewriteError> {
    let columns = dataset.map(Dataset::role_query).unwrap_or_default();
    suggest_with_columns(body, language, &columns, languages::builtin())
}

/// Suggestions in document order. Names are unique within the returned list.
pub fn suggest_with_columns(
    body: &Expression,
    language: &str,
    columns: &[(String, DataRole)],
    registry: &LanguageRegistry,
) -> Result<Vec<Suggestion>, RewriteError> {
    let lang = registry
        .get(language)
        .ok_or_else(|| RewriteError::UnknownLanguage(language.to_string()))?;
    let mut walk = Walk {
        rule_set: &lang.rewrite_rule_set,
        columns,
        sites: Vec::new(),
    };
    walk.visit(body, &mut Vec::new());

    let mut used: Vec<String> = body.referenced_names();
    let mut out = Vec::with_capacity(walk.sites.len());
    for site in walk.sites {
        let name = fresh_name(&site.name_base, |n| used.iter().any(|u| u == n));
        used.push(name.clone());
        let mut param = Parameter::new(name.clone(), site.param_type);
        param.default_value = site.default;
        out.push(Suggestion {
            id: format!("{}@{}", site.rule, site.path),
            description: site.description,
            path: site.path,
            kind: site.kind,
            proposed_param: param,
            replacement: Expression::Variable(name),
            original: site.original,
        });
    }
    Ok(out)
}

/// Replaces the literal at the suggestion's path with a reference to a new
/// parameter. The parameter is renamed if the template already uses its name.
pub fn apply_suggestion(t: &Template, sg: &Suggestion) -> Result<Template, RewriteError> {
    let mut out = t.clone();
    let stale = || RewriteError::StalePath {
        path: sg.path.clone(),
        expected: sg.original.to_compact_string(),
    };
    let slot = out.body.pointer_mut(&sg.path).ok_or_else(stale)?;
    if *slot != Expression::Atomic(sg.original.clone()) {
        return Err(stale());
    }
    let name = fresh_name(&sg.proposed_param.name, |n| t.declares(n) || !is_identifier(n));
    *slot = Expression::Variable(name.clone());
    let mut param = sg.proposed_param.clone();
    param.name = name;
    out.params.push(param);
    out.version += 1;
    Ok(out)
}

/// Turns a raw spec into a template by applying every suggestion.
pub fn templatize(
    name: &str,
    spec: &JsonValue,
    language: &str,
    dataset: Option<&Dataset>,
) -> Result<Template, RewriteError> {
    let body = Expression::literal(spec);
    let suggestions = suggest(&body, language, dataset)?;
    let mut t = Template::new(name, language, body);
    for sg in &suggestions {
        t = apply_suggestion(&t, sg)?;
    }
    t.version = 1;
    Ok(t)
}
