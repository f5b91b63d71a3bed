//! HTTP service that administers visual Turing test sessions.
//!
//! Every session has an append-only JSON-lines journal under
//! `<data_dir>/sessions/`; completed sessions are materialized into one
//! response CSV per study under `<data_dir>/studies/`. Images are served by
//! session index only, and no payload sent before completion names the
//! class of an item.

mod config;
mod http;
mod store;

use std::net::SocketAddr;
use std::sync::Arc;

use crate::error::Error;

pub use config::{ServiceConfig, StudyConfig, DEFAULT_IMAGES_PER_CLASS};
pub use http::router;
pub use store::{
    Answer, ClientAnswer, CompletionSummary, CreatedSession, ResponseAck, SessionState,
    SessionStore, SessionView,
};

/// Errors of the service layer, each mapped to one HTTP status.
#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    /// `session_id` names the existing open session on a duplicate create;
    /// `missing` lists unanswered indices on a premature completion.
    #[error("{message}")]
    Conflict {
        message: String,
        session_id: Option<String>,
        missing: Vec<usize>,
    },
    #[error(transparent)]
    Internal(#[from] Error),
}

/// Opens the store and serves until ctrl-c.
pub async fn serve(config: ServiceConfig, addr: SocketAddr) -> Result<(), Error> {
    let store = tokio::task::spawn_blocking(move || SessionStore::open(config))
        .await
        .map_err(|e| Error::InvalidInput(format!("store initialisation panicked: {e}")))?
        .map_err(|e| match e {
            ServiceError::Internal(e) => e,
            other => Error::InvalidInput(other.to_string()),
        })?;
    let app = router(Arc::new(store));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(addr.to_string(), e))?;
    log::info!("listening on {}", listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(addr.to_string(), e))
}
