use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("environment variable {name}: {message}")]
    Env { name: String, message: String },
}

/// Server settings. Read from a TOML file, then overridden by `IVY_BIND`,
/// `IVY_STORE_DIR` and `IVY_MAX_BODY_BYTES`.
///
/// ```toml
/// bind = "127.0.0.1:8080"
/// store_dir = "ivy-store"
/// max_body_bytes = 16777216
/// ```
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bind: String,
    pub store_dir: PathBuf,
    pub max_body_bytes: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            bind: "127.0.0.1:8080".into(),
            store_dir: PathBuf::from("ivy-store"),
            max_body_bytes: 16 * 1024 * 1024,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str, origin: &str) -> Result<Config, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    /// Defaults, then the file at `path` if given, then the environment.
    /// A relative `store_dir` in a file resolves against the file's directory.
    pub fn load(path: Option<&Path>) -> Result<Config, ConfigError> {
        let mut config = match path {
            None => Config::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Read {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?;
                let mut c = Config::from_toml(&text, &p.display().to_string())?;
                if c.store_dir.is_relative() {
                    if let Some(dir) = p.parent() {
                        c.store_dir = dir.join(&c.store_dir);
                    }
                }
                c
            }
        };
        config.apply_env(|name| std::env::var(name).ok())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = var("IVY_BIND") {
            self.bind = v;
        }
        if let Some(v) = var("IVY_STORE_DIR") {
            self.store_dir = PathBuf::from(v);
        }
        if let Some(v) = var("IVY_MAX_BODY_BYTES") {
            self.max_body_bytes = v.parse().map_err(|e: std::num::ParseIntError| ConfigError::Env {
                name: "IVY_MAX_BODY_BYTES".into(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_environment() {
        let mut c = Config::from_toml("bind = \"0.0.0.0:9000\"\nstore_dir = \"/tmp/s\"\n", "test").unwrap();
        assert_eq!(c.bind, "0.0.0.0:9000");
        assert_eq!(c.max_body_bytes, Config::default().max_body_bytes);
        c.apply_env(|k| (k == "IVY_STORE_DIR").then(|| "/srv/ivy".to_string())).unwrap();
        assert_eq!(c.store_dir, PathBuf::from("/srv/ivy"));
        assert!(c.apply_env(|k| (k == "IVY_MAX_BODY_BYTES").then(|| "lots".to_string())).is_err());
        assert!(Config::from_toml("port = 1", "test").is_err());
    }
}
