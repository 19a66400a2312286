//! Corpus metrics: compression ratio, concatenation ratios and coverage checks.
//!
//! Size measures:
//! - LOC: lines of the canonical two-space print.
//! - AST: one node per atomic, object, list, object field, variable
//!   reference, interpolation segment and conditional. A conditional's
//!   query is not counted; its branches are.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::eval::apply_template;
use crate::json::{escape_pointer_token, JsonValue, Map};
use crate::model::{Expression, Settings, Template};
use crate::parser::{expression_to_json, parse_template, settings_from_json, ParseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("division by zero: no templates")]
    DivisionByZero,
    #[error("excluded count {excluded} exceeds example count {examples}")]
    InvalidCounts { examples: usize, excluded: usize },
    #[error("no examples to measure")]
    EmptyExampleSet,
    #[error("example `{0}` has no settings")]
    MissingSettings(String),
    #[error("example `{example}` names unknown template `{template}`")]
    UnknownTemplate { example: String, template: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("manifest: {0}")]
    Manifest(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeMeasure {
    Loc,
    Ast,
}

/// `(examples - excluded) / templates`
pub fn compression_ratio(n_examples: usize, n_excluded: usize, n_templates: usize) -> Result<f64, MetricsError> {
    if n_templates == 0 {
        return Err(MetricsError::DivisionByZero);
    }
    if n_excluded > n_examples {
        return Err(MetricsError::InvalidCounts {
            examples: n_examples,
            excluded: n_excluded,
        });
    }
    Ok((n_examples - n_excluded) as f64 / n_templates as f64)
}

pub fn ast_size_json(v: &JsonValue) -> usize {
    match v {
        JsonValue::Object(map) => 1 + map.values().map(|c| 1 + ast_size_json(c)).sum::<usize>(),
        JsonValue::Array(items) => 1 + items.iter().map(ast_size_json).sum::<usize>(),
        _ => 1,
    }
}

pub fn ast_size(e: &Expression) -> usize {
    match e {
        Expression::Atomic(_) | Expression::Variable(_) => 1,
        Expression::Object(map) => 1 + map.values().map(|c| 1 + ast_size(c)).sum::<usize>(),
        Expression::List(items) => 1 + items.iter().map(ast_size).sum::<usize>(),
        Expression::Interpolated(segments) => segments.len(),
        Expression::Conditional(c) => {
            1 + c.then_branch.as_ref().map_or(0, ast_size) + c.else_branch.as_ref().map_or(0, ast_size)
        }
    }
}

pub fn loc_json(v: &JsonValue) -> usize {
    v.to_canonical_string().lines().count()
}

pub fn loc(e: &Expression) -> usize {
    loc_json(&expression_to_json(e))
}

pub fn size_json(v: &JsonValue, measure: SizeMeasure) -> usize {
    match measure {
        SizeMeasure::Loc => loc_json(v),
        SizeMeasure::Ast => ast_size_json(v),
    }
}

pub fn size(e: &Expression, measure: SizeMeasure) -> usize {
    match measure {
        SizeMeasure::Loc => loc(e),
        SizeMeasure::Ast => ast_size(e),
    }
}

/// Total size of the examples over the size of the template body.
pub fn concatenation_ratio(examples: &[JsonValue], body: &Expression, measure: SizeMeasure) -> Result<f64, MetricsError> {
    if examples.is_empty() {
        return Err(MetricsError::EmptyExampleSet);
    }
    let total: usize = examples.iter().map(|e| size_json(e, measure)).sum();
    Ok(total as f64 / size(body, measure) as f64)
}

/// Pointer to the first place two documents differ (key order included),
/// or `None` when they are equal.
pub fn first_difference(a: &JsonValue, b: &JsonValue) -> Option<String> {
    fn walk(a: &JsonValue, b: &JsonValue, path: &mut String) -> Option<String> {
        match (a, b) {
            (JsonValue::Object(x), JsonValue::Object(y)) => {
                let keys_x: Vec<_> = x.keys().collect();
                let keys_y: Vec<_> = y.keys().collect();
                for (kx, ky) in keys_x.iter().zip(&keys_y) {
                    if kx != ky {
                        return Some(format!("{path}/{} (key order or name)", escape_pointer_token(kx)));
                    }
                    let len = path.len();
                    path.push('/');
                    path.push_str(&escape_pointer_token(kx));
                    if let Some(d) = walk(&x[kx.as_str()], &y[kx.as_str()], path) {
                        return Some(d);
                    }
                    path.truncate(len);
                }
                (keys_x.len() != keys_y.len()).then(|| {
                    let extra = keys_x.get(keys_y.len()).or(keys_y.get(keys_x.len())).expect("lengths differ");
                    format!("{path}/{}", escape_pointer_token(extra))
                })
            }
            (JsonValue::Array(x), JsonValue::Array(y)) => {
                for (i, (ex, ey)) in x.iter().zip(y).enumerate() {
                    let len = path.len();
                    path.push_str(&format!("/{i}"));
                    if let Some(d) = walk(ex, ey, path) {
                        return Some(d);
                    }
                    path.truncate(len);
                }
                (x.len() != y.len()).then(|| format!("{path}/{}", x.len().min(y.len())))
            }
            _ => (a != b).then(|| if path.is_empty() { "/".to_string() } else { path.clone() }),
        }
    }
    walk(a, b, &mut String::new())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coverage {
    CoveredBy {
        template: String,
        settings: Option<SettingsSource>,
        ignore_paths: Vec<String>,
    },
    Excluded {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum SettingsSource {
    Path(PathBuf),
    Inline(Settings),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestExample {
    pub id: String,
    pub spec: PathBuf,
    pub coverage: Coverage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Counts {
    pub examples: usize,
    pub excluded: usize,
    pub templates: usize,
}

impl Counts {
    pub fn compression(&self) -> Result<f64, MetricsError> {
        compression_ratio(self.examples, self.excluded, self.templates)
    }
}

/// Manifest paths are resolved against `base_dir`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusManifest {
    pub base_dir: PathBuf,
    pub templates: Vec<PathBuf>,
    pub examples: Vec<ManifestExample>,
    /// Counts reported for a larger corpus, echoed into the report.
    pub reported_counts: Option<Counts>,
}

fn read_text(path: &Path) -> Result<String, MetricsError> {
    std::fs::read_to_string(path).map_err(|e| MetricsError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn read_json(path: &Path) -> Result<JsonValue, MetricsError> {
    JsonValue::parse(&read_text(path)?).map_err(|e| MetricsError::Parse {
        path: path.display().to_string(),
        source: e.into(),
    })
}

fn count_field(v: &JsonValue, key: &str) -> Result<usize, MetricsError> {
    v.pointer(&format!("/{key}"))
        .and_then(JsonValue::as_f64)
        .filter(|n| n.fract() == 0.0 && *n >= 0.0)
        .map(|n| n as usize)
        .ok_or_else(|| MetricsError::Manifest(format!("reportedCounts.{key} must be a non-negative integer")))
}

impl CorpusManifest {
    pub fn load(path: &Path) -> Result<CorpusManifest, MetricsError> {
        let doc = read_json(path)?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_json(&doc, base_dir)
    }

    pub fn from_json(doc: &JsonValue, base_dir: PathBuf) -> Result<CorpusManifest, MetricsError> {
        let m = |msg: &str| MetricsError::Manifest(msg.to_string());
        let templates = doc
            .pointer("/templates")
            .and_then(JsonValue::as_array)
            .ok_or_else(|| m("`templates` must be a list of paths"))?
            .iter()
            .map(|p| p.as_str().map(PathBuf::from).ok_or_else(|| m("template paths must be strings")))
            .collect::<Result<Vec<_>, _>>()?;
        let examples = doc
            .pointer("/examples")
            .and_then(JsonValue::as_array)
            .ok_or_else(|| m("`examples` must be a list"))?
            .iter()
            .map(|e| {
                let field = |k: &str| e.pointer(&format!("/{k}")).and_then(JsonValue::as_str);
                let id = field("id").ok_or_else(|| m("example lacks `id`"))?.to_string();
                let spec = PathBuf::from(field("spec").ok_or_else(|| m(&format!("example `{id}` lacks `spec`")))?);
                let covered_by = field("coveredBy").ok_or_else(|| m(&format!("example `{id}` lacks `coveredBy`")))?;
                let coverage = if covered_by == "excluded" {
                    Coverage::Excluded {
                        reason: field("reason").unwrap_or("").to_string(),
                    }
                } else {
                    let settings = match e.pointer("/settings") {
                        None => None,
                        Some(JsonValue::String(p)) => Some(SettingsSource::Path(PathBuf::from(p))),
                        Some(inline @ JsonValue::Object(_)) => Some(SettingsSource::Inline(
                            settings_from_json(inline).map_err(|source| MetricsError::Parse {
                                path: format!("example `{id}` settings"),
                                source,
                            })?,
                        )),
                        Some(_) => return Err(m(&format!("example `{id}`: settings must be a path or an object"))),
                    };
                    let ignore_paths = match e.pointer("/ignorePaths") {
                        None => Vec::new(),
                        Some(v) => v
                            .as_array()
                            .and_then(|a| a.iter().map(|p| p.as_str().map(str::to_string)).collect())
                            .ok_or_else(|| m(&format!("example `{id}`: ignorePaths must list pointers")))?,
                    };
                    Coverage::CoveredBy {
                        template: covered_by.to_string(),
                        settings,
                        ignore_paths,
                    }
                };
                Ok(ManifestExample { id, spec, coverage })
            })
            .collect::<Result<Vec<_>, MetricsError>>()?;
        let reported_counts = match doc.pointer("/reportedCounts") {
            None => None,
            Some(c) => Some(Counts {
                examples: count_field(c, "examples")?,
                excluded: count_field(c, "excluded")?,
                templates: count_field(c, "templates")?,
            }),
        };
        Ok(CorpusManifest {
            base_dir,
            templates,
            examples,
            reported_counts,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExampleStatus {
    Pass,
    Fail { diff: String },
    Error { message: String },
    Excluded { reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExampleReport {
    pub id: String,
    pub template: Option<String>,
    pub status: ExampleStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemplateReport {
    pub template: String,
    /// Number of examples this template reproduces.
    pub compression: usize,
    pub loc_ratio: Option<f64>,
    pub ast_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub examples: Vec<ExampleReport>,
    pub counts: Counts,
    pub passed: usize,
    pub failed: usize,
    pub compression: Option<f64>,
    pub templates: Vec<TemplateReport>,
    pub reported: Option<Counts>,
}

fn strip(mut v: JsonValue, ignore: &[String]) -> JsonValue {
    for p in ignore {
        v.remove_pointer(p);
    }
    v
}

fn number(n: f64) -> JsonValue {
    JsonValue::number(n).unwrap_or(JsonValue::Null)
}

fn counts_json(c: &Counts) -> JsonValue {
    let mut m = Map::new();
    m.insert("examples".into(), number(c.examples as f64));
    m.insert("excluded".into(), number(c.excluded as f64));
    m.insert("templates".into(), number(c.templates as f64));
    if let Ok(r) = c.compression() {
        m.insert("compression".into(), number(r));
    }
    JsonValue::Object(m)
}

impl CoverageReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> JsonValue {
        let mut m = Map::new();
        m.insert("counts".into(), counts_json(&self.counts));
        m.insert("passed".into(), number(self.passed as f64));
        m.insert("failed".into(), number(self.failed as f64));
        if let Some(r) = &self.reported {
            m.insert("reported".into(), counts_json(r));
        }
        m.insert(
            "templates".into(),
            JsonValue::Array(
                self.templates
                    .iter()
                    .map(|t| {
                        let mut o = Map::new();
                        o.insert("template".into(), JsonValue::from(t.template.as_str()));
                        o.insert("compression".into(), number(t.compression as f64));
                        o.insert("locRatio".into(), t.loc_ratio.map_or(JsonValue::Null, number));
                        o.insert("astRatio".into(), t.ast_ratio.map_or(JsonValue::Null, number));
                        JsonValue::Object(o)
                    })
                    .collect(),
            ),
        );
        m.insert(
            "examples".into(),
            JsonValue::Array(
                self.examples
                    .iter()
                    .map(|e| {
                        let mut o = Map::new();
                        o.insert("id".into(), JsonValue::from(e.id.as_str()));
                        if let Some(t) = &e.template {
                            o.insert("template".into(), JsonValue::from(t.as_str()));
                        }
                        let (status, detail) = match &e.status {
                            ExampleStatus::Pass => ("pass", None),
                            ExampleStatus::Fail { diff } => ("fail", Some(("diff", diff))),
                            ExampleStatus::Error { message } => ("error", Some(("message", message))),
                            ExampleStatus::Excluded { reason } => ("excluded", Some(("reason", reason))),
                        };
                        o.insert("status".into(), JsonValue::from(status));
                        if let Some((k, v)) = detail {
                            o.insert(k.into(), JsonValue::from(v.as_str()));
                        }
                        JsonValue::Object(o)
                    })
                    .collect(),
            ),
        );
        JsonValue::Object(m)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let fmt_ratio = |r: Option<f64>| r.map_or("-".to_string(), |r| format!("{r:.3}"));
        out.push_str(&format!("{:<32} {:>11} {:>9} {:>9}\n", "template", "compression", "LOC", "AST"));
        for t in &self.templates {
            out.push_str(&format!(
                "{:<32} {:>11} {:>9} {:>9}\n",
                t.template,
                t.compression,
                fmt_ratio(t.loc_ratio),
                fmt_ratio(t.ast_ratio)
            ));
        }
        out.push('\n');
        for e in &self.examples {
            let status = match &e.status {
                ExampleStatus::Pass => "pass".to_string(),
                ExampleStatus::Fail { diff } => format!("FAIL at {diff}"),
                ExampleStatus::Error { message } => format!("ERROR {message}"),
                ExampleStatus::Excluded { reason } => format!("excluded ({reason})"),
            };
            out.push_str(&format!("{:<32} {status}\n", e.id));
        }
        let c = &self.counts;
        out.push_str(&format!(
            "\n{} examples, {} excluded, {} templates: compression {}\n",
            c.examples,
            c.excluded,
            c.templates,
            fmt_ratio(self.compression)
        ));
        if let Some(r) = &self.reported {
            out.push_str(&format!(
                "reported: {} examples, {} excluded, {} templates: compression {}\n",
                r.examples,
                r.excluded,
                r.templates,
                fmt_ratio(r.compression().ok())
            ));
        }
        out
    }
}

pub fn verify_coverage_path(path: &Path) -> Result<CoverageReport, MetricsError> {
    verify_coverage(&CorpusManifest::load(path)?)
}

/// Applies each covering template to its example's settings and compares the
/// result with the example spec, ignoring the listed pointers.
pub fn verify_coverage(manifest: &CorpusManifest) -> Result<CoverageReport, MetricsError> {
    let base = &manifest.base_dir;
    let templates = manifest
        .templates
        .iter()
        .map(|p| {
            let path = base.join(p);
            parse_template(&read_text(&path)?).map_err(|source| MetricsError::Parse {
                path: path.display().to_string(),
                source,
            })
        })
        .collect::<Result<Vec<Template>, _>>()?;

    // Validate references up front so errors surface before any work.
    for ex in &manifest.examples {
        if let Coverage::CoveredBy { template, settings, .. } = &ex.coverage {
            if !templates.iter().any(|t| &t.name == template) {
                return Err(MetricsError::UnknownTemplate {
                    example: ex.id.clone(),
                    template: template.clone(),
                });
            }
            if settings.is_none() {
                return Err(MetricsError::MissingSettings(ex.id.clone()));
            }
        }
    }

    let results = manifest
        .examples
        .par_iter()
        .map(|ex| -> Result<(ExampleReport, Option<JsonValue>), MetricsError> {
            let spec = read_json(&base.join(&ex.spec))?;
            let (template, settings, ignore_paths) = match &ex.coverage {
                Coverage::CoveredBy {
                    template,
                    settings,
                    ignore_paths,
                } => (template, settings, ignore_paths),
                Coverage::Excluded { reason } => {
                    return Ok((
                        ExampleReport {
                            id: ex.id.clone(),
                            template: None,
                            status: ExampleStatus::Excluded { reason: reason.clone() },
                        },
                        None,
                    ))
                }
            };
            let t = templates.iter().find(|t| &t.name == template).expect("checked above");
            let settings = match settings.as_ref().expect("checked above") {
                SettingsSource::Inline(s) => s.clone(),
                SettingsSource::Path(p) => {
                    let path = base.join(p);
                    crate::parser::parse_settings(&read_text(&path)?).map_err(|source| MetricsError::Parse {
                        path: path.display().to_string(),
                        source,
                    })?
                }
            };
            let status = match apply_template(t, &settings, None) {
                Ok(out) => match first_difference(&strip(out, ignore_paths), &strip(spec.clone(), ignore_paths)) {
                    None => ExampleStatus::Pass,
                    Some(diff) => ExampleStatus::Fail { diff },
                },
                Err(e) => ExampleStatus::Error { message: e.to_string() },
            };
            let passed = status == ExampleStatus::Pass;
            Ok((
                ExampleReport {
                    id: ex.id.clone(),
                    template: Some(template.clone()),
                    status,
                },
                passed.then_some(spec),
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let excluded = results
        .iter()
        .filter(|(r, _)| matches!(r.status, ExampleStatus::Excluded { .. }))
        .count();
    let passed = results.iter().filter(|(r, _)| r.status == ExampleStatus::Pass).count();
    let counts = Counts {
        examples: manifest.examples.len(),
        excluded,
        templates: templates.len(),
    };
    let template_reports = templates
        .iter()
        .map(|t| {
            let covered: Vec<JsonValue> = results
                .iter()
                .filter(|(r, s)| s.is_some() && r.template.as_deref() == Some(t.name.as_str()))
                .map(|(_, s)| s.clone().expect("filtered"))
                .collect();
            TemplateReport {
                template: t.name.clone(),
                compression: covered.len(),
                loc_ratio: concatenation_ratio(&covered, &t.body, SizeMeasure::Loc).ok(),
                ast_ratio: concatenation_ratio(&covered, &t.body, SizeMeasure::Ast).ok(),
            }
        })
        .collect();
    Ok(CoverageReport {
        failed: counts.examples - counts.excluded - passed,
        compression: counts.compression().ok(),
        examples: results.into_iter().map(|(r, _)| r).collect(),
        counts,
        passed,
        templates: template_reports,
        reported: manifest.reported_counts,
    })
}
