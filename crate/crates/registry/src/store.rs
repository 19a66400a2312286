//! Append-only template store.
//!
//! Layout under the store directory:
//!
//! ```text
//! log.jsonl                          one record per published version
//! templates/<name>/<version>.ivy.json   canonical template document
//! ```
//!
//! A version is written to a temporary file and renamed into place before
//! its log line is appended, and the in-memory index is only updated after
//! both are on disk, so readers never see a half-written version.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use ivy_core::json::{JsonValue, Map};
use ivy_core::languages::sha256_hex;
use ivy_core::parser::{parse_template, serialize_template};
use ivy_core::model::Template;
use thiserror::Error;

const LOG: &str = "log.jsonl";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("`{0}` is not a valid template name (letters, digits, `.`, `_`, `-`; not starting with `.`)")]
    InvalidName(String),
    #[error("unknown template `{0}`")]
    NotFound(String),
    #[error("template `{name}` has no version {version}")]
    VersionNotFound { name: String, version: u64 },
    #[error("version conflict on `{name}`: expected {expected}, latest is {latest}")]
    Conflict { name: String, expected: u64, latest: u64 },
    #[error("template `{0}` already exists")]
    AlreadyExists(String),
    #[error("corrupt store at {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error("{0}")]
    Io(String),
}

fn io(e: std::io::Error) -> StoreError {
    StoreError::Io(e.to_string())
}

/// One published version and its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredTemplate {
    pub template: Template,
    pub owner: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub fork_of: Option<(String, u64)>,
}

impl StoredTemplate {
    /// Catalog entry without the body.
    pub fn summary_json(&self) -> JsonValue {
        let mut m = Map::new();
        m.insert("name".into(), JsonValue::from(self.template.name.as_str()));
        m.insert("version".into(), number(self.template.version));
        m.insert("language".into(), JsonValue::from(self.template.language.as_str()));
        m.insert("description".into(), JsonValue::from(self.template.description.as_str()));
        m.insert("owner".into(), JsonValue::from(self.owner.as_str()));
        m.insert("createdAt".into(), number(self.created_at));
        m.insert("forkOf".into(), fork_json(&self.fork_of));
        JsonValue::Object(m)
    }

    fn log_line(&self, digest: &str) -> String {
        let mut m = Map::new();
        m.insert("name".into(), JsonValue::from(self.template.name.as_str()));
        m.insert("version".into(), number(self.template.version));
        m.insert("owner".into(), JsonValue::from(self.owner.as_str()));
        m.insert("createdAt".into(), number(self.created_at));
        m.insert("forkOf".into(), fork_json(&self.fork_of));
        m.insert("sha256".into(), JsonValue::from(digest));
        JsonValue::Object(m).to_compact_string()
    }
}

fn number(n: u64) -> JsonValue {
    JsonValue::number(n as f64).expect("finite")
}

fn fork_json(f: &Option<(String, u64)>) -> JsonValue {
    match f {
        None => JsonValue::Null,
        Some((name, version)) => {
            let mut m = Map::new();
            m.insert("name".into(), JsonValue::from(name.as_str()));
            m.insert("version".into(), number(*version));
            JsonValue::Object(m)
        }
    }
}

pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 128
        && !name.starts_with('.')
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
}

pub struct Store {
    dir: PathBuf,
    /// Versions per name, oldest first; version `n` sits at index `n - 1`.
    index: RwLock<BTreeMap<String, Vec<StoredTemplate>>>,
    writer: Mutex<File>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("dir", &self.dir).finish()
    }
}

impl Store {
    /// Opens (creating if needed) the store in `dir` and replays its log.
    pub fn open(dir: &Path) -> Result<Store, StoreError> {
        std::fs::create_dir_all(dir.join("templates")).map_err(io)?;
        let log_path = dir.join(LOG);
        let text = match std::fs::read_to_string(&log_path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(io(e)),
        };
        let mut index: BTreeMap<String, Vec<StoredTemplate>> = BTreeMap::new();
        let complete = match text.rfind('\n') {
            Some(end) => &text[..=end],
            // A last line without its newline was never acknowledged.
            None => "",
        };
        for (i, line) in complete.lines().enumerate() {
            let corrupt = |message: String| StoreError::Corrupt {
                path: format!("{}:{}", log_path.display(), i + 1),
                message,
            };
            let record = replay_record(dir, line).map_err(corrupt)?;
            let versions = index.entry(record.template.name.clone()).or_default();
            if record.template.version != versions.len() as u64 + 1 {
                return Err(corrupt(format!("version {} out of sequence", record.template.version)));
            }
            versions.push(record);
        }
        if complete.len() != text.len() {
            // Drop the torn tail so later appends start on a fresh line.
            let f = OpenOptions::new().write(true).open(&log_path).map_err(io)?;
            f.set_len(complete.len() as u64).map_err(io)?;
        }
        let writer = OpenOptions::new().create(true).append(true).open(&log_path).map_err(io)?;
        Ok(Store {
            dir: dir.to_path_buf(),
            index: RwLock::new(index),
            writer: Mutex::new(writer),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn latest(&self, name: &str) -> Result<StoredTemplate, StoreError> {
        let index = self.index.read().expect("store lock");
        index
            .get(name)
            .and_then(|v| v.last())
            .cloned()
            .ok_or_else(|| StoreError::NotFound(name.to_string()))
    }

    pub fn get(&self, name: &str, version: u64) -> Result<StoredTemplate, StoreError> {
        let index = self.index.read().expect("store lock");
        let versions = index.get(name).ok_or_else(|| StoreError::NotFound(name.to_string()))?;
        version
            .checked_sub(1)
            .and_then(|i| versions.get(i as usize))
            .cloned()
            .ok_or_else(|| StoreError::VersionNotFound {
                name: name.to_string(),
                version,
            })
    }

    /// Latest version of every template, ordered by name.
    pub fn list_latest(&self) -> Vec<StoredTemplate> {
        let index = self.index.read().expect("store lock");
        index.values().filter_map(|v| v.last().cloned()).collect()
    }

    /// Every version of every template, ordered by name then version.
    pub fn snapshot(&self) -> Vec<StoredTemplate> {
        let index = self.index.read().expect("store lock");
        index.values().flatten().cloned().collect()
    }

    /// Stores `template` as the next version of its name. With
    /// `if_match`, fails unless the latest version equals it (0 when the
    /// name is new).
    pub fn publish(&self, template: Template, owner: &str, if_match: Option<u64>) -> Result<StoredTemplate, StoreError> {
        self.append(template, owner, None, |latest| match if_match {
            Some(expected) if expected != latest => Err(expected),
            _ => Ok(()),
        })
    }

    /// Copies a stored version (latest when `version` is None) under a new
    /// name that must not exist yet.
    pub fn fork(&self, source: &str, version: Option<u64>, new_name: &str, owner: &str) -> Result<StoredTemplate, StoreError> {
        let original = match version {
            Some(v) => self.get(source, v)?,
            None => self.latest(source)?,
        };
        let mut t = original.template;
        t.name = new_name.to_string();
        let from = (source.to_string(), t.version);
        self.append(t, owner, Some(from), |latest| if latest == 0 { Ok(()) } else { Err(0) })
            .map_err(|e| match e {
                StoreError::Conflict { name, .. } => StoreError::AlreadyExists(name),
                other => other,
            })
    }

    fn append(
        &self,
        mut template: Template,
        owner: &str,
        fork_of: Option<(String, u64)>,
        check: impl FnOnce(u64) -> Result<(), u64>,
    ) -> Result<StoredTemplate, StoreError> {
        if !is_valid_name(&template.name) {
            return Err(StoreError::InvalidName(template.name));
        }
        let mut log = self.writer.lock().expect("store writer");
        let latest = {
            let index = self.index.read().expect("store lock");
            index.get(&template.name).map_or(0, |v| v.len() as u64)
        };
        check(latest).map_err(|expected| StoreError::Conflict {
            name: template.name.clone(),
            expected,
            latest,
        })?;
        template.version = latest + 1;
        let record = StoredTemplate {
            template,
            owner: owner.to_string(),
            created_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            fork_of,
        };

        let text = serialize_template(&record.template);
        let dir = self.dir.join("templates").join(&record.template.name);
        std::fs::create_dir_all(&dir).map_err(io)?;
        let path = dir.join(format!("{}.ivy.json", record.template.version));
        let tmp = dir.join(format!("{}.ivy.json.tmp", record.template.version));
        {
            let mut f = File::create(&tmp).map_err(io)?;
            f.write_all(text.as_bytes()).map_err(io)?;
            f.sync_all().map_err(io)?;
        }
        std::fs::rename(&tmp, &path).map_err(io)?;
        let line = record.log_line(&sha256_hex(text.as_bytes()));
        log.write_all(format!("{line}\n").as_bytes()).map_err(io)?;
        log.sync_data().map_err(io)?;

        self.index
            .write()
            .expect("store lock")
            .entry(record.template.name.clone())
            .or_default()
            .push(record.clone());
        Ok(record)
    }
}

fn replay_record(dir: &Path, line: &str) -> Result<StoredTemplate, String> {
    let doc = JsonValue::parse(line).map_err(|e| e.to_string())?;
    let field = |k: &str| doc.pointer(&format!("/{k}")).ok_or_else(|| format!("missing `{k}`"));
    let text_of = |k: &str| -> Result<String, String> {
        field(k)?.as_str().map(str::to_string).ok_or_else(|| format!("`{k}` must be a string"))
    };
    let nat = |v: &JsonValue, k: &str| -> Result<u64, String> {
        v.as_f64()
            .filter(|n| *n >= 0.0 && n.fract() == 0.0)
            .map(|n| n as u64)
            .ok_or_else(|| format!("`{k}` must be a natural number"))
    };
    let name = text_of("name")?;
    let version = nat(field("version")?, "version")?;
    let fork_of = match field("forkOf")? {
        JsonValue::Null => None,
        v => {
            let n = v.pointer("/name").and_then(JsonValue::as_str).ok_or("bad `forkOf`")?;
            Some((n.to_string(), nat(v.pointer("/version").ok_or("bad `forkOf`")?, "forkOf.version")?))
        }
    };
    let path = dir.join("templates").join(&name).join(format!("{version}.ivy.json"));
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if sha256_hex(text.as_bytes()) != text_of("sha256")? {
        return Err(format!("{} does not match its logged digest", path.display()));
    }
    let template = parse_template(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if template.name != name || template.version != version {
        return Err(format!("{} names {}@{}", path.display(), template.name, template.version));
    }
    Ok(StoredTemplate {
        template,
        owner: text_of("owner")?,
        created_at: nat(field("createdAt")?, "createdAt")?,
        fork_of,
    })
}
