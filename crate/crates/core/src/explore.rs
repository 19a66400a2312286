//! Catalog search, shelf assignment, settings translation and fan-out.

use std::cmp::Ordering;

use rayon::prelude::*;
use thiserror::Error;

use crate::data::Dataset;
use crate::eval::{apply_template_with, ApplyOptions, EvalError};
use crate::json::{JsonValue, Map};
use crate::model::{
    validate_argument, ArgumentValue, ArgumentViolation, DataRole, MatchResult, ParamType, Settings,
    Template,
};
use crate::parser::{settings_from_json, settings_to_json, ParseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExploreError {
    #[error("request names template `{requested}` but `{given}` was supplied")]
    TemplateMismatch { requested: String, given: String },
    #[error("template has no parameter `{0}`")]
    UnknownParameter(String),
    #[error("option set for `{0}` is empty")]
    EmptyOptionSet(String),
    #[error(transparent)]
    InvalidOption(#[from] ArgumentViolation),
    #[error("fan-out would produce more than {limit} cells")]
    TooManyCells { limit: usize },
    #[error("none of the bound columns fit the target template")]
    NoMatch,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Column names and roles, the shape every search starts from.
pub type RoleQuery = [(String, DataRole)];

/// Builds a query from bare roles, naming columns after their role
/// (`Measure`, `Measure2`, ...).
pub fn role_query(roles: &[DataRole]) -> Vec<(String, DataRole)> {
    let mut out: Vec<(String, DataRole)> = Vec::new();
    for &role in roles {
        let n = out.iter().filter(|(_, r)| *r == role).count();
        let name = if n == 0 {
            role.as_str().to_string()
        } else {
            format!("{}{}", role.as_str(), n + 1)
        };
        out.push((name, role));
    }
    out
}

/// A match result plus the number of required data parameters it leaves
/// empty, used for ranking.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchDetails {
    pub result: MatchResult,
    pub uncovered_required: usize,
}

struct Bipartite {
    /// adjacency: query column index -> data parameter indices
    adj: Vec<Vec<usize>>,
    required: Vec<bool>,
    /// parameter index -> matched column
    owner: Vec<Option<usize>>,
}

impl Bipartite {
    fn try_assign(&mut self, col: usize, seen: &mut [bool]) -> bool {
        for i in 0..self.adj[col].len() {
            let p = self.adj[col][i];
            if seen[p] {
                continue;
            }
            seen[p] = true;
            if self.owner[p].is_none_or(|other| self.try_assign(other, seen)) {
                self.owner[p] = Some(col);
                return true;
            }
        }
        false
    }

    /// Searches an alternating path that gives parameter `p` a column while
    /// some optional parameter gives its column up. Every column stays matched.
    fn cover(&mut self, p: usize, seen: &mut [bool]) -> bool {
        seen[p] = true;
        let n = self.adj.len();
        for col in 0..n {
            if !self.adj[col].contains(&p) {
                continue;
            }
            let Some(q) = (0..self.owner.len()).find(|&q| self.owner[q] == Some(col)) else {
                continue;
            };
            if seen[q] {
                continue;
            }
            // Take `col` from `q`; `q` must then either be optional or be re-covered.
            if !self.required[q] || self.cover(q, seen) {
                if self.owner[q] == Some(col) {
                    self.owner[q] = None;
                }
                self.owner[p] = Some(col);
                return true;
            }
        }
        false
    }
}

pub fn match_template(t: &Template, query: &RoleQuery) -> MatchResult {
    match_details(t, query).result
}

/// Decides Partial (every column placed, injectively and role-compatibly)
/// and Complete (also every required data parameter filled) by bipartite
/// matching, returning a witness mapping.
pub fn match_details(t: &Template, query: &RoleQuery) -> MatchDetails {
    let params: Vec<&crate::model::Parameter> = t.data_params().collect();
    let mut g = Bipartite {
        adj: query
            .iter()
            .map(|(_, role)| {
                (0..params.len())
                    .filter(|&i| params[i].param_type.accepts_role(*role))
                    .collect()
            })
            .collect(),
        required: params.iter().map(|p| p.param_type.is_required()).collect(),
        owner: vec![None; params.len()],
    };
    for col in 0..query.len() {
        let mut seen = vec![false; params.len()];
        if !g.try_assign(col, &mut seen) {
            return MatchDetails {
                result: MatchResult::NoMatch,
                uncovered_required: g.required.iter().filter(|r| **r).count(),
            };
        }
    }
    loop {
        let mut improved = false;
        for p in 0..params.len() {
            if g.required[p] && g.owner[p].is_none() {
                let mut seen = vec![false; params.len()];
                if g.cover(p, &mut seen) {
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let uncovered = (0..params.len())
        .filter(|&p| g.required[p] && g.owner[p].is_none())
        .count();
    let mut mapping = Map::new();
    for (col, (name, _)) in query.iter().enumerate() {
        let p = g.owner.iter().position(|o| *o == Some(col)).expect("every column matched");
        mapping.insert(name.clone(), params[p].name.clone());
    }
    MatchDetails {
        result: if uncovered == 0 {
            MatchResult::Complete(mapping)
        } else {
            MatchResult::Partial(mapping)
        },
        uncovered_required: uncovered,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchHit<'a> {
    pub template: &'a Template,
    pub details: MatchDetails,
}

fn rank(a: &SearchHit, b: &SearchHit) -> Ordering {
    let complete = |h: &SearchHit| !matches!(h.details.result, MatchResult::Complete(_));
    complete(a)
        .cmp(&complete(b))
        .then(a.details.uncovered_required.cmp(&b.details.uncovered_required))
        .then_with(|| a.template.name.cmp(&b.template.name))
}

/// Templates that can take every queried column. Complete matches come
/// first, then fewer unfilled required parameters, then name.
pub fn search_catalog<'a>(templates: &'a [Template], query: &RoleQuery) -> Vec<SearchHit<'a>> {
    let mut hits: Vec<SearchHit<'a>> = templates
        .iter()
        .filter_map(|t| {
            let details = match_details(t, query);
            details.result.is_match().then_some(SearchHit { template: t, details })
        })
        .collect();
    hits.sort_by(rank);
    hits
}

/// Places `column` in the first data parameter, in declaration order, that
/// accepts its role and has room. Returns the settings unchanged if none does.
pub fn add_to_shelf(t: &Template, column: &str, role: DataRole, settings: &Settings) -> Settings {
    let mut out = settings.clone();
    for p in t.data_params() {
        if !p.param_type.accepts_role(role) {
            continue;
        }
        match (&p.param_type, settings.get(&p.name)) {
            (ParamType::DataTarget { .. }, None | Some(ArgumentValue::Atomic(JsonValue::Null))) => {
                out.set(p.name.clone(), column);
                return out;
            }
            (ParamType::MultiDataTarget { max_count, .. }, current) => {
                let mut items = match current {
                    Some(ArgumentValue::StringList(items)) => items.clone(),
                    None | Some(ArgumentValue::Atomic(JsonValue::Null)) => Vec::new(),
                    Some(_) => continue,
                };
                if max_count.is_some_and(|m| items.len() >= m) || items.iter().any(|c| c == column) {
                    continue;
                }
                items.push(column.to_string());
                out.set(p.name.clone(), ArgumentValue::StringList(items));
                return out;
            }
            _ => {}
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TranslationStatus {
    Complete,
    Partial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Translation {
    pub settings: Settings,
    pub status: TranslationStatus,
    /// Bound columns that found no slot in the target.
    pub dropped: Vec<String>,
}

/// Columns bound by the data parameters of `t`, in declaration order.
pub fn bound_columns(t: &Template, settings: &Settings) -> Vec<String> {
    let mut out = Vec::new();
    for p in t.data_params() {
        if let Some(v) = settings.get(&p.name) {
            out.extend(v.column_names().into_iter().map(str::to_string));
        }
    }
    out
}

/// Moves the data bindings of `settings` from `from` onto `to` by repeated
/// [`add_to_shelf`]. Roles come from `columns`; other parameters start from
/// their defaults and `$filters` carries over.
pub fn translate_settings(
    from: &Template,
    to: &Template,
    settings: &Settings,
    columns: &RoleQuery,
) -> Result<Translation, ExploreError> {
    let mut out = Settings::new();
    let mut dropped = Vec::new();
    let bound = bound_columns(from, settings);
    for column in &bound {
        let role = columns.iter().find(|(n, _)| n == column).map(|(_, r)| *r);
        let next = role.map(|r| add_to_shelf(to, column, r, &out));
        match next {
            Some(next) if next != out => out = next,
            _ => dropped.push(column.clone()),
        }
    }
    if !bound.is_empty() && dropped.len() == bound.len() {
        return Err(ExploreError::NoMatch);
    }
    out.set_filters(settings.filters().map(<[_]>::to_vec));
    let filled = to
        .data_params()
        .filter(|p| p.param_type.is_required())
        .all(|p| out.contains(&p.name));
    let status = if dropped.is_empty() && filled {
        TranslationStatus::Complete
    } else {
        TranslationStatus::Partial
    };
    Ok(Translation {
        settings: out,
        status,
        dropped,
    })
}

pub const MAX_FAN_OUT_CELLS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct FanOutRequest {
    pub template: String,
    pub base: Settings,
    pub option_sets: Map<Vec<ArgumentValue>>,
}

impl FanOutRequest {
    /// Reads `{"template": name, "base": settings, "optionSets": {param: [values]}}`.
    /// `base` may be omitted.
    pub fn from_json(doc: &JsonValue) -> Result<FanOutRequest, ParseError> {
        let bad = |path: &str, message: &str| ParseError::BadField {
            path: path.to_string(),
            message: message.to_string(),
        };
        let obj = doc.as_object().ok_or_else(|| bad("", "fan-out request must be an object"))?;
        if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "template" | "base" | "optionSets")) {
            return Err(bad("", &format!("unexpected key `{k}`")));
        }
        let template = obj
            .get("template")
            .and_then(JsonValue::as_str)
            .ok_or_else(|| bad("/template", "expected a string"))?
            .to_string();
        let base = match obj.get("base") {
            None => Settings::new(),
            Some(v) => settings_from_json(v)?,
        };
        let sets = obj
            .get("optionSets")
            .and_then(JsonValue::as_object)
            .ok_or_else(|| bad("/optionSets", "expected an object"))?;
        let mut option_sets = Map::new();
        for (name, values) in sets.iter() {
            let path = format!("/optionSets/{name}");
            let values = values
                .as_array()
                .ok_or_else(|| bad(&path, "expected a list"))?
                .iter()
                .map(|v| ArgumentValue::from_json(v).ok_or_else(|| bad(&path, "options must be atomic or lists of strings")))
                .collect::<Result<Vec<_>, _>>()?;
            option_sets.insert(name.clone(), values);
        }
        Ok(FanOutRequest {
            template,
            base,
            option_sets,
        })
    }

    pub fn to_json(&self) -> JsonValue {
        let mut m = Map::new();
        m.insert("template".to_string(), JsonValue::from(self.template.as_str()));
        m.insert("base".to_string(), settings_to_json(&self.base));
        let sets = self
            .option_sets
            .iter()
            .map(|(k, vs)| (k.clone(), JsonValue::Array(vs.iter().map(ArgumentValue::to_json).collect())))
            .collect();
        m.insert("optionSets".to_string(), JsonValue::Object(sets));
        JsonValue::Object(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FanOutCell {
    pub index: usize,
    pub settings: Settings,
    pub result: Result<JsonValue, EvalError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FanOutResult {
    pub cells: Vec<FanOutCell>,
}

impl FanOutResult {
    pub fn to_json(&self) -> JsonValue {
        JsonValue::Array(
            self.cells
                .iter()
                .map(|c| {
                    let mut m = Map::new();
                    m.insert("index".to_string(), JsonValue::from(c.index as i32));
                    m.insert("settings".to_string(), settings_to_json(&c.settings));
                    match &c.result {
                        Ok(spec) => m.insert("spec".to_string(), spec.clone()),
                        Err(e) => m.insert("error".to_string(), JsonValue::String(e.to_string())),
                    };
                    JsonValue::Object(m)
                })
                .collect(),
        )
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FanOutOptions<'a> {
    pub apply: ApplyOptions<'a>,
    /// Worker threads; `Some(1)` runs serially, `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for FanOutOptions<'_> {
    fn default() -> Self {
        FanOutOptions {
            apply: ApplyOptions::default(),
            jobs: None,
        }
    }
}

pub fn fan_out(t: &Template, req: &FanOutRequest, dataset: Option<&Dataset>) -> Result<FanOutResult, ExploreError> {
    let opts = FanOutOptions {
        apply: ApplyOptions {
            dataset,
            ..ApplyOptions::default()
        },
        jobs: None,
    };
    fan_out_with(t, req, &opts)
}

/// Option sets in parameter declaration order.
fn ordered_sets<'r>(t: &Template, req: &'r FanOutRequest) -> Result<Vec<(&'r String, &'r Vec<ArgumentValue>)>, ExploreError> {
    if req.template != t.name {
        return Err(ExploreError::TemplateMismatch {
            requested: req.template.clone(),
            given: t.name.clone(),
        });
    }
    for (name, options) in req.option_sets.iter() {
        let p = t.param(name).ok_or_else(|| ExploreError::UnknownParameter(name.clone()))?;
        if options.is_empty() {
            return Err(ExploreError::EmptyOptionSet(name.clone()));
        }
        for o in options {
            validate_argument(p, o)?;
        }
    }
    Ok(t.params
        .iter()
        .filter_map(|p| req.option_sets.get_key_value(&p.name))
        .collect())
}

/// Number of cells `req` expands to.
pub fn fan_out_size(req: &FanOutRequest) -> Option<usize> {
    req.option_sets.values().try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
}

/// Applies the template to every combination of the option sets. The first
/// parameter in declaration order varies slowest. A failing cell records its
/// error without affecting the others.
pub fn fan_out_with(t: &Template, req: &FanOutRequest, opts: &FanOutOptions) -> Result<FanOutResult, ExploreError> {
    let sets = ordered_sets(t, req)?;
    let total = fan_out_size(req)
        .filter(|n| *n <= MAX_FAN_OUT_CELLS)
        .ok_or(ExploreError::TooManyCells {
            limit: MAX_FAN_OUT_CELLS,
        })?;
    let cell = |index: usize| {
        let mut settings = req.base.clone();
        let mut rest = index;
        let mut picks = Vec::with_capacity(sets.len());
        for (name, options) in sets.iter().rev() {
            picks.push((*name, &options[rest % options.len()]));
            rest /= options.len();
        }
        for (name, value) in picks.into_iter().rev() {
            settings.set(name.clone(), value.clone());
        }
        let result = apply_template_with(t, &settings, &opts.apply);
        FanOutCell { index, settings, result }
    };
    let cells = match opts.jobs {
        Some(1) => (0..total).map(cell).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ExploreError::ThreadPool(e.to_string()))?
            .install(|| (0..total).into_par_iter().map(cell).collect()),
        None => (0..total).into_par_iter().map(cell).collect(),
    };
    Ok(FanOutResult { cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Expression, Parameter};
    use DataRole::*;

    fn target(name: &str, roles: &[DataRole], required: bool) -> Parameter {
        Parameter::new(
            name,
            ParamType::DataTarget {
                allowed_roles: roles.to_vec(),
                required,
            },
        )
    }

    fn template(name: &str, params: Vec<Parameter>) -> Template {
        let body = Expression::Object(
            params
                .iter()
                .map(|p| (p.name.clone(), Expression::Variable(p.name.clone())))
                .collect(),
        );
        let mut t = Template::new(name, "table", body);
        t.params = params;
        t
    }

    fn two_param() -> Template {
        template(
            "t",
            vec![
                target("param1", &[Measure], true),
                target("param2", &[Measure, Dimension], false),
            ],
        )
    }

    fn mapping(pairs: &[(&str, &str)]) -> Map<String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn match_examples() {
        let t = two_param();
        assert_eq!(
            match_template(&t, &role_query(&[Measure])),
            MatchResult::Complete(mapping(&[("Measure", "param1")]))
        );
        assert_eq!(
            match_template(&t, &role_query(&[Dimension])),
            MatchResult::Partial(mapping(&[("Dimension", "param2")]))
        );
        assert_eq!(match_template(&t, &role_query(&[Time])), MatchResult::NoMatch);
        let optional = template("o", vec![target("a", &[Time], false)]);
        assert_eq!(match_template(&optional, &[]), MatchResult::Complete(Map::new()));
    }

    #[test]
    fn matching_reroutes_to_cover_required() {
        // Greedy would put the Measure into `any` and leave `m` empty.
        let t = template(
            "t",
            vec![target("any", &[Measure, Dimension], false), target("m", &[Measure], true)],
        );
        assert_eq!(
            match_template(&t, &role_query(&[Measure])),
            MatchResult::Complete(mapping(&[("Measure", "m")]))
        );
    }

    #[test]
    fn search_ranking() {
        let catalog = vec![
            template("b-partial", vec![target("x", &[Measure], false), target("y", &[Time], true)]),
            template("z-complete", vec![target("x", &[Measure], true)]),
            template("a-complete", vec![target("x", &[Measure, Dimension], true)]),
            template("none", vec![target("x", &[Time], true)]),
        ];
        let hits = search_catalog(&catalog, &role_query(&[Measure]));
        let names: Vec<_> = hits.iter().map(|h| h.template.name.as_str()).collect();
        assert_eq!(names, ["a-complete", "z-complete", "b-partial"]);
        assert!(search_catalog(&[], &role_query(&[Measure])).is_empty());
    }

    #[test]
    fn shelf_assignment() {
        let t = template(
            "t",
            vec![
                target("a", &[Measure], true),
                target("b", &[Dimension, Measure], true),
                target("c", &[Dimension], false),
            ],
        );
        let s = add_to_shelf(&t, "country", Dimension, &Settings::new());
        assert_eq!(s, Settings::new().with("b", "country"));
        let s = add_to_shelf(&t, "region", Dimension, &s);
        assert_eq!(s.get("c"), Some(&ArgumentValue::string("region")));
        assert_eq!(add_to_shelf(&t, "more", Dimension, &s), s);
    }

    #[test]
    fn shelf_appends_to_multi_targets() {
        let mut t = template("t", vec![]);
        t.params.push(Parameter::new(
            "cols",
            ParamType::MultiDataTarget {
                allowed_roles: DataRole::ALL.to_vec(),
                required: true,
                min_count: None,
                max_count: Some(2),
            },
        ));
        let s = add_to_shelf(&t, "a", Measure, &Settings::new());
        let s = add_to_shelf(&t, "a", Measure, &s);
        let s = add_to_shelf(&t, "b", Time, &s);
        let full = add_to_shelf(&t, "c", Time, &s);
        assert_eq!(s.get("cols"), Some(&ArgumentValue::StringList(vec!["a".into(), "b".into()])));
        assert_eq!(full, s);
    }

    #[test]
    fn translation() {
        let bar = template("bar", vec![target("x", &[Dimension, Time], true), target("y", &[Measure], true)]);
        let scatter = template("scatter", vec![target("x", &[Measure], true), target("y", &[Measure], false)]);
        let cols = vec![("when".to_string(), Time), ("v".to_string(), Measure)];
        let mut s = Settings::new().with("x", "when").with("y", "v");
        s.set_filters(Some(vec![crate::model::Filter::range("v", 0.0, 1.0)]));
        let tr = translate_settings(&bar, &scatter, &s, &cols).unwrap();
        assert_eq!(tr.dropped, ["when"]);
        assert_eq!(tr.status, TranslationStatus::Partial);
        assert_eq!(tr.settings.get("x"), Some(&ArgumentValue::string("v")));
        assert_eq!(tr.settings.filters(), s.filters());

        let same = translate_settings(&bar, &bar, &s, &cols).unwrap();
        assert_eq!(same.status, TranslationStatus::Complete);
        assert_eq!(bound_columns(&bar, &same.settings), bound_columns(&bar, &s));

        let times_only = Settings::new().with("x", "when");
        assert_eq!(translate_settings(&bar, &scatter, &times_only, &cols), Err(ExploreError::NoMatch));
    }

    fn fan_template() -> Template {
        let mut t = template("fan", vec![target("x", &[Dimension], true)]);
        t.params.push(Parameter::new("flag", ParamType::Boolean));
        t.params.push(Parameter::new(
            "mode",
            ParamType::Enum {
                allowed_values: vec!["a".into(), "b".into(), "c".into()],
            },
        ));
        if let Expression::Object(m) = &mut t.body {
            m.insert("flag".into(), Expression::Variable("flag".into()));
            m.insert("mode".into(), Expression::Variable("mode".into()));
        }
        t
    }

    fn request(sets: Vec<(&str, Vec<ArgumentValue>)>) -> FanOutRequest {
        FanOutRequest {
            template: "fan".into(),
            base: Settings::new().with("x", "g"),
            option_sets: sets.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    #[test]
    fn fan_out_order_and_count() {
        let t = fan_template();
        // Listed out of declaration order on purpose.
        let req = request(vec![
            ("mode", vec!["a".into(), "b".into(), "c".into()]),
            ("flag", vec![false.into(), true.into()]),
        ]);
        let out = fan_out(&t, &req, None).unwrap();
        assert_eq!(out.cells.len(), 6);
        let seen: Vec<(bool, String)> = out
            .cells
            .iter()
            .map(|c| {
                let spec = c.result.as_ref().unwrap();
                (
                    spec.pointer("/flag").unwrap().as_bool().unwrap(),
                    spec.pointer("/mode").unwrap().as_str().unwrap().to_string(),
                )
            })
            .collect();
        let expected: Vec<(bool, String)> = [false, true]
            .iter()
            .flat_map(|f| ["a", "b", "c"].iter().map(move |m| (*f, m.to_string())))
            .collect();
        assert_eq!(seen, expected);
        for c in &out.cells {
            assert_eq!(c.result, crate::eval::apply_template(&t, &c.settings, None));
        }
    }

    #[test]
    fn fan_out_errors() {
        let t = fan_template();
        assert!(matches!(
            fan_out(&t, &request(vec![("nope", vec![true.into()])]), None),
            Err(ExploreError::UnknownParameter(_))
        ));
        assert!(matches!(
            fan_out(&t, &request(vec![("flag", vec![])]), None),
            Err(ExploreError::EmptyOptionSet(_))
        ));
        assert!(matches!(
            fan_out(&t, &request(vec![("mode", vec!["z".into()])]), None),
            Err(ExploreError::InvalidOption(_))
        ));
        let mut req = request(vec![]);
        req.template = "other".into();
        assert!(matches!(fan_out(&t, &req, None), Err(ExploreError::TemplateMismatch { .. })));
    }

    #[test]
    fn failing_cells_do_not_abort_siblings() {
        let t = fan_template();
        let mut req = request(vec![("flag", vec![true.into()])]);
        req.base = Settings::new().with("x", 5);
        let out = fan_out(&t, &req, None).unwrap();
        assert!(matches!(out.cells[0].result, Err(EvalError::InvalidSettings(_))));
    }

    #[test]
    fn serial_matches_parallel() {
        let t = fan_template();
        let req = request(vec![
            ("x", vec!["a".into(), "b".into(), "c".into(), "d".into(), "e".into()]),
            ("flag", vec![false.into(), true.into()]),
        ]);
        let serial = fan_out_with(&t, &req, &FanOutOptions { jobs: Some(1), ..Default::default() }).unwrap();
        let parallel = fan_out_with(&t, &req, &FanOutOptions { jobs: Some(4), ..Default::default() }).unwrap();
        assert_eq!(serial.cells.len(), 10);
        assert_eq!(serial.to_json().to_canonical_string(), parallel.to_json().to_canonical_string());
    }
}
