//! Target grammars: output schemas, data injection points and rule sets.
//!
//! The built-in languages (`vega-lite`, `vega`, `table`) come from the
//! manifest in `schemas/languages.json`; each schema file is pinned by its
//! SHA-256 digest.

use std::path::Path;
use std::sync::OnceLock;

use indexmap::IndexMap;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::json::{array_index, parse_pointer, JsonValue, Map};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LanguageError {
    #[error("language `{0}` is already registered")]
    DuplicateId(String),
    #[error("schema for `{id}` is not a valid JSON Schema: {message}")]
    BadSchema { id: String, message: String },
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("language `{0}` has no data injection pointer")]
    NoInjectionPointer(String),
    #[error("cannot resolve data injection pointer {pointer}: {message}")]
    PointerUnresolvable { pointer: String, message: String },
    #[error("schema `{file}` digest {actual} does not match manifest digest {expected}")]
    HashMismatch {
        file: String,
        expected: String,
        actual: String,
    },
    #[error("language manifest: {0}")]
    Manifest(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LanguageSpec {
    pub id: String,
    pub display_name: String,
    pub schema: JsonValue,
    pub data_injection_pointer: Option<String>,
    /// Keys that, present in the object enclosing the injection target, mean
    /// the chart already names its own data.
    pub data_binding_keys: Vec<String>,
    pub rewrite_rule_set: String,
}

/// One schema violation. `instance_path` is a JSON Pointer into the checked document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaError {
    pub instance_path: String,
    pub schema_path: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let at = if self.instance_path.is_empty() { "/" } else { &self.instance_path };
        write!(f, "{at}: {}", self.message)
    }
}

struct Entry {
    spec: LanguageSpec,
    validator: OnceLock<Result<jsonschema::Validator, String>>,
}

#[derive(Default)]
pub struct LanguageRegistry {
    entries: IndexMap<String, Entry>,
}

impl std::fmt::Debug for LanguageRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

const BUILTIN_MANIFEST: &str = include_str!("../schemas/languages.json");

fn builtin_schema_text(file: &str) -> Option<&'static str> {
    match file {
        "vega-lite-v5.schema.json" => Some(include_str!("../schemas/vega-lite-v5.schema.json")),
        "vega-v5.schema.json" => Some(include_str!("../schemas/vega-v5.schema.json")),
        "table.schema.json" => Some(include_str!("../schemas/table.schema.json")),
        _ => None,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The process-wide registry holding the built-in languages.
pub fn builtin() -> &'static LanguageRegistry {
    static REGISTRY: OnceLock<LanguageRegistry> = OnceLock::new();
    REGISTRY.get_or_init(|| LanguageRegistry::with_builtins().expect("bundled language manifest is valid"))
}

impl LanguageRegistry {
    pub fn new() -> Self {
        LanguageRegistry::default()
    }

    pub fn with_builtins() -> Result<Self, LanguageError> {
        let mut reg = LanguageRegistry::new();
        reg.register_manifest(BUILTIN_MANIFEST, |file| {
            builtin_schema_text(file)
                .map(str::to_string)
                .ok_or_else(|| LanguageError::Manifest(format!("no bundled schema `{file}`")))
        })?;
        Ok(reg)
    }

    /// Registers every language in a manifest file; schema paths resolve
    /// relative to the manifest's directory.
    pub fn load_manifest(&mut self, path: &Path) -> Result<(), LanguageError> {
        let text = std::fs::read_to_string(path).map_err(|e| LanguageError::Manifest(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        self.register_manifest(&text, |file| {
            std::fs::read_to_string(dir.join(file)).map_err(|e| LanguageError::Manifest(format!("{file}: {e}")))
        })
    }

    fn register_manifest(
        &mut self,
        text: &str,
        read_schema: impl Fn(&str) -> Result<String, LanguageError>,
    ) -> Result<(), LanguageError> {
        let doc = JsonValue::parse(text).map_err(|e| LanguageError::Manifest(e.to_string()))?;
        let langs = doc
            .pointer("/languages")
            .and_then(JsonValue::as_array)
            .ok_or_else(|| LanguageError::Manifest("missing `languages` list".into()))?;
        for entry in langs {
            let field = |k: &str| {
                entry
                    .pointer(&format!("/{k}"))
                    .and_then(JsonValue::as_str)
                    .ok_or_else(|| LanguageError::Manifest(format!("entry lacks string `{k}`")))
            };
            let id = field("id")?;
            let file = field("schema")?;
            let schema_text = read_schema(file)?;
            if let Ok(expected) = field("sha256") {
                let actual = sha256_hex(schema_text.as_bytes());
                if actual != expected {
                    return Err(LanguageError::HashMismatch {
                        file: file.to_string(),
                        expected: expected.to_string(),
                        actual,
                    });
                }
            }
            let schema = JsonValue::parse(&schema_text).map_err(|e| LanguageError::BadSchema {
                id: id.to_string(),
                message: e.to_string(),
            })?;
            let binding_keys = match entry.pointer("/dataBindingKeys") {
                None => Vec::new(),
                Some(v) => v
                    .as_array()
                    .and_then(|a| a.iter().map(|k| k.as_str().map(str::to_string)).collect())
                    .ok_or_else(|| LanguageError::Manifest("`dataBindingKeys` must list strings".into()))?,
            };
            self.register(LanguageSpec {
                id: id.to_string(),
                display_name: field("displayName").unwrap_or(id).to_string(),
                schema,
                data_injection_pointer: field("dataInjectionPointer").ok().map(str::to_string),
                data_binding_keys: binding_keys,
                rewrite_rule_set: field("rewriteRuleSet").unwrap_or(id).to_string(),
            })?;
        }
        Ok(())
    }

    pub fn register(&mut self, spec: LanguageSpec) -> Result<(), LanguageError> {
        if self.entries.contains_key(&spec.id) {
            return Err(LanguageError::DuplicateId(spec.id));
        }
        let bad = |message: String| LanguageError::BadSchema {
            id: spec.id.clone(),
            message,
        };
        if !matches!(spec.schema, JsonValue::Object(_) | JsonValue::Bool(_)) {
            return Err(bad("schema must be an object or boolean".into()));
        }
        jsonschema::meta::validate(&spec.schema.to_serde()).map_err(|e| bad(e.to_string()))?;
        if let Some(p) = &spec.data_injection_pointer {
            let tokens = parse_pointer(p).map_err(|e| bad(e.to_string()))?;
            if tokens.is_empty() {
                return Err(bad("data injection pointer cannot be the root".into()));
            }
        }
        self.entries.insert(
            spec.id.clone(),
            Entry {
                spec,
                validator: OnceLock::new(),
            },
        );
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&LanguageSpec> {
        self.entries.get(id).map(|e| &e.spec)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn entry(&self, id: &str) -> Result<&Entry, LanguageError> {
        self.entries
            .get(id)
            .ok_or_else(|| LanguageError::UnknownLanguage(id.to_string()))
    }

    /// Schema violations of `spec`; empty when it conforms. The compiled
    /// validator is built on first use and reused.
    pub fn validate_spec(&self, id: &str, spec: &JsonValue) -> Result<Vec<SchemaError>, LanguageError> {
        let entry = self.entry(id)?;
        let validator = entry
            .validator
            .get_or_init(|| jsonschema::validator_for(&entry.spec.schema.to_serde()).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|message| LanguageError::BadSchema {
                id: id.to_string(),
                message: message.clone(),
            })?;
        let instance = spec.to_serde();
        Ok(validator
            .iter_errors(&instance)
            .map(|e| SchemaError {
                instance_path: e.instance_path().to_string(),
                schema_path: e.schema_path().to_string(),
                message: e.to_string(),
            })
            .collect())
    }

    /// Places `rows` at the language's injection pointer unless the chart
    /// already has a value there or the enclosing object binds data another
    /// way. Missing intermediate objects are created.
    pub fn inject_data(&self, id: &str, spec: &JsonValue, rows: &[JsonValue]) -> Result<JsonValue, LanguageError> {
        let lang = &self.entry(id)?.spec;
        let pointer = lang
            .data_injection_pointer
            .as_deref()
            .ok_or_else(|| LanguageError::NoInjectionPointer(id.to_string()))?;
        let mut tokens = parse_pointer(pointer).map_err(|e| LanguageError::PointerUnresolvable {
            pointer: pointer.to_string(),
            message: e.to_string(),
        })?;
        let last = tokens.pop().expect("checked non-root at registration");
        let unresolvable = |message: &str| LanguageError::PointerUnresolvable {
            pointer: pointer.to_string(),
            message: message.to_string(),
        };

        let mut out = spec.clone();
        let mut current = &mut out;
        for (i, token) in tokens.iter().enumerate() {
            let next_is_index = tokens.get(i + 1).unwrap_or(&last).parse::<usize>().is_ok();
            current = match current {
                JsonValue::Object(map) => {
                    if !map.contains_key(token) {
                        if next_is_index {
                            return Err(unresolvable(&format!("`{token}` is missing and must be an array")));
                        }
                        map.insert(token.clone(), JsonValue::Object(Map::new()));
                    }
                    map.get_mut(token).expect("present")
                }
                JsonValue::Array(items) => {
                    let idx = array_index(token).ok_or_else(|| unresolvable(&format!("`{token}` is not an array index")))?;
                    items
                        .get_mut(idx)
                        .ok_or_else(|| unresolvable(&format!("index {idx} is out of bounds")))?
                }
                other => {
                    return Err(unresolvable(&format!("`{token}` crosses a {}", other.type_name())));
                }
            };
        }
        let JsonValue::Object(parent) = current else {
            return Err(unresolvable(&format!("target parent is a {}", current.type_name())));
        };
        let bound = parent.contains_key(&last) || lang.data_binding_keys.iter().any(|k| parent.contains_key(k));
        if !bound {
            parent.insert(last, JsonValue::Array(rows.to_vec()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_spec(id: &str) -> LanguageSpec {
        LanguageSpec {
            id: id.into(),
            display_name: id.into(),
            schema: JsonValue::parse("{}").unwrap(),
            data_injection_pointer: Some("/rows".into()),
            data_binding_keys: vec![],
            rewrite_rule_set: "table".into(),
        }
    }

    fn rows() -> Vec<JsonValue> {
        vec![JsonValue::parse(r#"{"a":1}"#).unwrap()]
    }

    #[test]
    fn builtins_present() {
        let ids: Vec<_> = builtin().ids().collect();
        assert_eq!(ids, ["vega-lite", "vega", "table"]);
    }

    #[test]
    fn registration_errors() {
        let mut reg = LanguageRegistry::new();
        reg.register(table_spec("toy")).unwrap();
        assert_eq!(reg.register(table_spec("toy")), Err(LanguageError::DuplicateId("toy".into())));
        let mut bad = table_spec("bad");
        bad.schema = JsonValue::parse(r#"{"type": 12}"#).unwrap();
        assert!(matches!(reg.register(bad), Err(LanguageError::BadSchema { .. })));
        let mut bad = table_spec("bad2");
        bad.schema = JsonValue::from("schema");
        assert!(matches!(reg.register(bad), Err(LanguageError::BadSchema { .. })));
    }

    #[test]
    fn table_accepts_anything() {
        let spec = JsonValue::parse(r#"{"columns":["a"],"whatever":[1,2]}"#).unwrap();
        assert_eq!(builtin().validate_spec("table", &spec).unwrap(), vec![]);
        assert!(matches!(
            builtin().validate_spec("atom", &spec),
            Err(LanguageError::UnknownLanguage(_))
        ));
    }

    #[test]
    fn inject_into_vega_lite() {
        let spec = JsonValue::parse(r#"{"mark":"bar"}"#).unwrap();
        let out = builtin().inject_data("vega-lite", &spec, &rows()).unwrap();
        assert_eq!(out.pointer("/data/values"), Some(&JsonValue::Array(rows())));
        assert_eq!(builtin().inject_data("vega-lite", &out, &[]).unwrap(), out);
        let bound = JsonValue::parse(r#"{"data":{"url":"x.csv"},"mark":"bar"}"#).unwrap();
        assert_eq!(builtin().inject_data("vega-lite", &bound, &rows()).unwrap(), bound);
    }

    #[test]
    fn inject_into_table_and_vega() {
        let out = builtin().inject_data("table", &JsonValue::parse("{}").unwrap(), &rows()).unwrap();
        assert_eq!(out.pointer("/rows"), Some(&JsonValue::Array(rows())));
        let vega = JsonValue::parse(r#"{"data":[{"name":"table"}]}"#).unwrap();
        let out = builtin().inject_data("vega", &vega, &rows()).unwrap();
        assert_eq!(out.pointer("/data/0/values"), Some(&JsonValue::Array(rows())));
        let no_data = JsonValue::parse(r#"{"marks":[]}"#).unwrap();
        assert!(matches!(
            builtin().inject_data("vega", &no_data, &rows()),
            Err(LanguageError::PointerUnresolvable { .. })
        ));
        let scalar = JsonValue::parse(r#"{"data":3}"#).unwrap();
        assert!(matches!(
            builtin().inject_data("vega-lite", &scalar, &rows()),
            Err(LanguageError::PointerUnresolvable { .. })
        ));
    }

    #[test]
    fn pinned_digests_match() {
        for file in ["vega-lite-v5.schema.json", "vega-v5.schema.json", "table.schema.json"] {
            let text = builtin_schema_text(file).unwrap();
            assert!(BUILTIN_MANIFEST.contains(&sha256_hex(text.as_bytes())), "{file}");
        }
    }
}
