//! A shared template registry over HTTP.
//!
//! Templates are kept in an append-only, file-backed [`Store`]: every
//! published version is one canonical document on disk plus one line in a
//! log, and reopening a store replays that log. [`router`] exposes the
//! store together with the evaluation, fan-out and suggestion engines.

pub mod api;
pub mod config;
pub mod store;

pub use api::{router, AppState};
pub use config::{Config, ConfigError};
pub use store::{Store, StoreError, StoredTemplate};

/// Opens the store named in `config` and serves until the process exits.
pub async fn serve(config: Config) -> Result<(), ServeError> {
    let store = Store::open(&config.store_dir)?;
    let state = AppState::new(store, config.max_body_bytes);
    let listener = tokio::net::TcpListener::bind(&config.bind)
        .await
        .map_err(|e| ServeError::Bind(config.bind.clone(), e.to_string()))?;
    axum::serve(listener, router(state))
        .await
        .map_err(|e| ServeError::Io(e.to_string()))
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot bind {0}: {1}")]
    Bind(String, String),
    #[error("server error: {0}")]
    Io(String),
}
