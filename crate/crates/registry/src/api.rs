//! HTTP routes. Every response body is canonical JSON.
//!
//! | method | path | |
//! |---|---|---|
//! | GET  | `/health` | liveness |
//! | GET  | `/templates` | latest versions; `?roles=Measure,Dimension` ranks them by catalog search |
//! | POST | `/templates` | publish; optional `If-Match: <latest version>` and `X-Ivy-Owner` |
//! | GET  | `/templates/{name}` | latest document, or `?version=N` |
//! | POST | `/templates/{name}/fork` | `{"name": new, "version"?: N, "owner"?: s}` |
//! | POST | `/apply` | `{"template": name or document, "version"?, "settings", "dataset"?, "validate"?}` |
//! | POST | `/fanout` | `{"template", "base"?, "optionSets", "dataset"?, "version"?}` |
//! | POST | `/suggest` | `{"body", "language", "columns"?: [{"name", "role"}], "dataset"?}` |
//!
//! Errors are `{"error": {"code", "message", "details"}}` with status 400
//! (malformed request), 404 (unknown template), 409 (version conflict) or
//! 422 (well-formed but rejected: settings, lint or schema violations).

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use ivy_core::data::{load_dataset, DataFormat, Dataset};
use ivy_core::eval::{apply_template_with, ApplyOptions, EvalError};
use ivy_core::explore::{fan_out_with, search_catalog, ExploreError, FanOutOptions, FanOutRequest};
use ivy_core::json::{JsonValue, Map};
use ivy_core::languages;
use ivy_core::model::{lint_template, DataRole, Diagnostic, Template};
use ivy_core::parser::{parse_expression, settings_from_json, template_from_json, template_to_json, ParseError};
use ivy_core::rewrite::{suggest_with_columns, RewriteError};

use crate::store::{Store, StoreError, StoredTemplate};

pub struct AppState {
    pub store: Store,
    pub max_body_bytes: usize,
}

impl AppState {
    pub fn new(store: Store, max_body_bytes: usize) -> Arc<AppState> {
        Arc::new(AppState { store, max_body_bytes })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.max_body_bytes;
    Router::new()
        .route("/health", get(health))
        .route("/templates", get(list).post(publish))
        .route("/templates/{name}", get(fetch))
        .route("/templates/{name}/fork", post(fork))
        .route("/apply", post(apply))
        .route("/fanout", post(fanout))
        .route("/suggest", post(suggest))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

// ---------------------------------------------------------------------------
// Responses

fn json(status: StatusCode, body: &JsonValue) -> Response {
    let mut r = (status, body.to_canonical_string()).into_response();
    r.headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    r
}

fn template_response(status: StatusCode, stored: &StoredTemplate) -> Response {
    let mut r = json(status, &template_to_json(&stored.template));
    if let Ok(v) = HeaderValue::from_str(&format!("\"{}\"", stored.template.version)) {
        r.headers_mut().insert(header::ETAG, v);
    }
    r
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Vec<JsonValue>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            details: Vec::new(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "malformed", message)
    }

    fn unprocessable(code: &'static str, message: impl Into<String>, details: Vec<JsonValue>) -> Self {
        ApiError {
            details,
            ..ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut inner = Map::new();
        inner.insert("code".into(), JsonValue::from(self.code));
        inner.insert("message".into(), JsonValue::String(self.message));
        inner.insert("details".into(), JsonValue::Array(self.details));
        let mut outer = Map::new();
        outer.insert("error".into(), JsonValue::Object(inner));
        json(self.status, &JsonValue::Object(outer))
    }
}

fn detail(pairs: &[(&str, String)]) -> JsonValue {
    JsonValue::Object(pairs.iter().map(|(k, v)| (k.to_string(), JsonValue::String(v.clone()))).collect())
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::NotFound(_) | StoreError::VersionNotFound { .. } => StatusCode::NOT_FOUND,
            StoreError::Conflict { .. } | StoreError::AlreadyExists(_) => StatusCode::CONFLICT,
            StoreError::InvalidName(_) => StatusCode::BAD_REQUEST,
            StoreError::Corrupt { .. } | StoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let code = match status {
            StatusCode::NOT_FOUND => "not_found",
            StatusCode::CONFLICT => "conflict",
            StatusCode::BAD_REQUEST => "malformed",
            _ => "storage",
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

impl From<EvalError> for ApiError {
    fn from(e: EvalError) -> Self {
        let message = e.to_string();
        match e {
            EvalError::InvalidSettings(violations) => {
                let details = violations
                    .iter()
                    .map(|v| detail(&[("parameter", v.parameter.clone()), ("reason", v.reason.to_string())]))
                    .collect();
                ApiError::unprocessable("invalid_settings", message, details)
            }
            EvalError::SchemaViolation { errors, .. } => {
                let details = errors
                    .iter()
                    .map(|e| detail(&[("instancePath", e.instance_path.clone()), ("message", e.message.clone())]))
                    .collect();
                ApiError::unprocessable("schema_violation", message, details)
            }
            EvalError::Data(_) => ApiError::bad_request(message),
            _ => ApiError::unprocessable("evaluation", message, Vec::new()),
        }
    }
}

impl From<ExploreError> for ApiError {
    fn from(e: ExploreError) -> Self {
        let details = match &e {
            ExploreError::InvalidOption(v) => {
                vec![detail(&[("parameter", v.parameter.clone()), ("reason", v.reason.to_string())])]
            }
            ExploreError::UnknownParameter(p) | ExploreError::EmptyOptionSet(p) => {
                vec![detail(&[("parameter", p.clone())])]
            }
            _ => Vec::new(),
        };
        ApiError::unprocessable("invalid_request", e.to_string(), details)
    }
}

// ---------------------------------------------------------------------------
// Request helpers

fn parse_body(bytes: &[u8]) -> Result<JsonValue, ApiError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ApiError::bad_request(format!("body is not UTF-8: {e}")))?;
    JsonValue::parse(text).map_err(|e| ApiError::bad_request(e.to_string()))
}

fn object(doc: &JsonValue, allowed: &[&str]) -> Result<Map<JsonValue>, ApiError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| ApiError::bad_request("request body must be a JSON object"))?;
    if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(ApiError::bad_request(format!("unexpected key `{k}`")));
    }
    Ok(obj.clone())
}

fn string_field<'a>(obj: &'a Map<JsonValue>, key: &str) -> Result<&'a str, ApiError> {
    obj.get(key)
        .and_then(JsonValue::as_str)
        .ok_or_else(|| ApiError::bad_request(format!("`{key}` must be a string")))
}

fn version_field(obj: &Map<JsonValue>) -> Result<Option<u64>, ApiError> {
    match obj.get("version") {
        None | Some(JsonValue::Null) => Ok(None),
        Some(v) => v
            .as_f64()
            .filter(|n| *n >= 1.0 && n.fract() == 0.0)
            .map(|n| Some(n as u64))
            .ok_or_else(|| ApiError::bad_request("`version` must be a positive integer")),
    }
}

/// Rows as a JSON array of flat objects, or `{"csv": text}`.
fn dataset_field(obj: &Map<JsonValue>) -> Result<Option<Dataset>, ApiError> {
    let loaded = match obj.get("dataset") {
        None | Some(JsonValue::Null) => return Ok(None),
        Some(rows @ JsonValue::Array(_)) => load_dataset(rows.to_compact_string().as_bytes(), DataFormat::Json),
        Some(JsonValue::Object(m)) if m.len() == 1 && m.get("csv").and_then(JsonValue::as_str).is_some() => {
            load_dataset(m["csv"].as_str().unwrap_or_default().as_bytes(), DataFormat::Csv)
        }
        Some(_) => return Err(ApiError::bad_request("`dataset` must be a list of rows or {\"csv\": text}")),
    };
    loaded.map(Some).map_err(|e| ApiError::bad_request(format!("dataset: {e}")))
}

fn resolve_template(state: &AppState, spec: &JsonValue, version: Option<u64>) -> Result<Template, ApiError> {
    match spec {
        JsonValue::String(name) => {
            let stored = match version {
                Some(v) => state.store.get(name, v)?,
                None => state.store.latest(name)?,
            };
            Ok(stored.template)
        }
        doc @ JsonValue::Object(_) => Ok(template_from_json(doc)?),
        _ => Err(ApiError::bad_request("`template` must be a name or a template document")),
    }
}

fn parse_if_match(headers: &HeaderMap) -> Result<Option<u64>, ApiError> {
    let Some(raw) = headers.get(header::IF_MATCH) else {
        return Ok(None);
    };
    let text = raw
        .to_str()
        .map_err(|_| ApiError::bad_request("If-Match must be ASCII"))?
        .trim();
    let text = text.strip_prefix("W/").unwrap_or(text).trim_matches('"');
    text.parse()
        .map(Some)
        .map_err(|_| ApiError::bad_request(format!("If-Match `{text}` is not a version number")))
}

fn owner(headers: &HeaderMap) -> String {
    headers
        .get("x-ivy-owner")
        .and_then(|v| v.to_str().ok())
        .filter(|s| !s.trim().is_empty())
        .unwrap_or("anonymous")
        .trim()
        .to_string()
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

// ---------------------------------------------------------------------------
// Handlers

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let mut m = Map::new();
    m.insert("status".into(), JsonValue::from("ok"));
    m.insert(
        "templates".into(),
        JsonValue::number(state.store.list_latest().len() as f64).expect("finite"),
    );
    json(StatusCode::OK, &JsonValue::Object(m))
}

async fn list(State(state): State<Arc<AppState>>, Query(q): Query<HashMap<String, String>>) -> Result<Response, ApiError> {
    if let Some(k) = q.keys().find(|k| k.as_str() != "roles") {
        return Err(ApiError::bad_request(format!("unknown query parameter `{k}`")));
    }
    let stored = state.store.list_latest();
    let Some(roles) = q.get("roles") else {
        let items = stored.iter().map(StoredTemplate::summary_json).collect();
        return Ok(json(StatusCode::OK, &JsonValue::Array(items)));
    };
    let roles: Vec<DataRole> = roles
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<DataRole>())
        .collect::<Result<_, _>>()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let templates: Vec<Template> = stored.into_iter().map(|s| s.template).collect();
    let query = ivy_core::explore::role_query(&roles);
    let hits = search_catalog(&templates, &query)
        .into_iter()
        .map(|hit| {
            let mut m = Map::new();
            m.insert("name".into(), JsonValue::from(hit.template.name.as_str()));
            m.insert(
                "version".into(),
                JsonValue::number(hit.template.version as f64).expect("finite"),
            );
            m.insert("match".into(), hit.details.result.to_json());
            m.insert(
                "uncoveredRequired".into(),
                JsonValue::number(hit.details.uncovered_required as f64).expect("finite"),
            );
            JsonValue::Object(m)
        })
        .collect();
    Ok(json(StatusCode::OK, &JsonValue::Array(hits)))
}

async fn publish(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    let doc = parse_body(&body)?;
    let template = template_from_json(&doc)?;
    if languages::builtin().get(&template.language).is_none() {
        return Err(ApiError::unprocessable(
            "unknown_language",
            format!("unknown language `{}`", template.language),
            Vec::new(),
        ));
    }
    let problems: Vec<JsonValue> = lint_template(&template)
        .iter()
        .filter(|d| !matches!(d, Diagnostic::UnusedParameter(_)))
        .map(|d| detail(&[("message", d.to_string())]))
        .collect();
    if !problems.is_empty() {
        return Err(ApiError::unprocessable("lint", "template has lint errors", problems));
    }
    let if_match = parse_if_match(&headers)?;
    let owner = owner(&headers);
    let stored = blocking(move || Ok(state.store.publish(template, &owner, if_match)?)).await?;
    Ok(template_response(StatusCode::CREATED, &stored))
}

async fn fetch(
    State(state): State<Arc<AppState>>,
    Path(name): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let stored = match q.get("version") {
        None => state.store.latest(&name)?,
        Some(v) => {
            let v = v
                .parse()
                .map_err(|_| ApiError::bad_request(format!("version `{v}` is not a number")))?;
            state.store.get(&name, v)?
        }
    };
    Ok(template_response(StatusCode::OK, &stored))
}

async fn fork(
    State(state): State<Arc<AppState>>,
    Path(name): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let obj = object(&parse_body(&body)?, &["name", "version", "owner"])?;
    let new_name = string_field(&obj, "name")?.to_string();
    let version = version_field(&obj)?;
    let owner = match obj.get("owner") {
        Some(o) => o
            .as_str()
            .ok_or_else(|| ApiError::bad_request("`owner` must be a string"))?
            .to_string(),
        None => owner(&headers),
    };
    let stored = blocking(move || Ok(state.store.fork(&name, version, &new_name, &owner)?)).await?;
    Ok(template_response(StatusCode::CREATED, &stored))
}

async fn apply(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let obj = object(&parse_body(&body)?, &["template", "version", "settings", "dataset", "validate"])?;
    let template_spec = obj
        .get("template")
        .ok_or_else(|| ApiError::bad_request("missing `template`"))?;
    let template = resolve_template(&state, template_spec, version_field(&obj)?)?;
    let settings = match obj.get("settings") {
        None => ivy_core::model::Settings::new(),
        Some(s) => settings_from_json(s)?,
    };
    let dataset = dataset_field(&obj)?;
    let validate = match obj.get("validate") {
        None => false,
        Some(v) => v
            .as_bool()
            .ok_or_else(|| ApiError::bad_request("`validate` must be a boolean"))?,
    };
    let spec = blocking(move || {
        let opts = ApplyOptions {
            dataset: dataset.as_ref(),
            validate,
            registry: languages::builtin(),
        };
        Ok(apply_template_with(&template, &settings, &opts)?)
    })
    .await?;
    Ok(json(StatusCode::OK, &spec))
}

async fn fanout(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let mut obj = object(
        &parse_body(&body)?,
        &["template", "base", "optionSets", "dataset", "version"],
    )?;
    let dataset = dataset_field(&obj)?;
    let version = version_field(&obj)?;
    obj.shift_remove("dataset");
    obj.shift_remove("version");
    let request = FanOutRequest::from_json(&JsonValue::Object(obj))?;
    let template = resolve_template(&state, &JsonValue::String(request.template.clone()), version)?;
    let result = blocking(move || {
        let opts = FanOutOptions {
            apply: ApplyOptions {
                dataset: dataset.as_ref(),
                ..ApplyOptions::default()
            },
            jobs: None,
        };
        Ok(fan_out_with(&template, &request, &opts)?)
    })
    .await?;
    Ok(json(StatusCode::OK, &result.to_json()))
}

async fn suggest(body: Bytes) -> Result<Response, ApiError> {
    let obj = object(&parse_body(&body)?, &["body", "language", "columns", "dataset"])?;
    let expr = parse_expression(obj.get("body").ok_or_else(|| ApiError::bad_request("missing `body`"))?)?;
    let language = string_field(&obj, "language")?.to_string();
    let mut columns: Vec<(String, DataRole)> = match dataset_field(&obj)? {
        Some(d) => d.role_query(),
        None => Vec::new(),
    };
    if let Some(cols) = obj.get("columns") {
        let items = cols
            .as_array()
            .ok_or_else(|| ApiError::bad_request("`columns` must be a list"))?;
        for item in items {
            let name = item.pointer("/name").and_then(JsonValue::as_str);
            let role = item.pointer("/role").and_then(JsonValue::as_str);
            let (Some(name), Some(role)) = (name, role) else {
                return Err(ApiError::bad_request("each column needs a string `name` and `role`"));
            };
            let role: DataRole = role.parse().map_err(|e: ivy_core::model::UnknownRole| ApiError::bad_request(e.to_string()))?;
            columns.push((name.to_string(), role));
        }
    }
    let suggestions = suggest_with_columns(&expr, &language, &columns, languages::builtin()).map_err(|e| match e {
        RewriteError::UnknownLanguage(_) => ApiError::unprocessable("unknown_language", e.to_string(), Vec::new()),
        other => ApiError::unprocessable("rewrite", other.to_string(), Vec::new()),
    })?;
    let mut m = Map::new();
    m.insert(
        "suggestions".into(),
        JsonValue::Array(suggestions.iter().map(|s| s.to_json()).collect()),
    );
    Ok(json(StatusCode::OK, &JsonValue::Object(m)))
}
