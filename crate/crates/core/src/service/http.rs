use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use super::store::SessionStore;
use super::ServiceError;

type AppState = Arc<SessionStore>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, body) = match &self {
            ServiceError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "error": m })),
            ServiceError::NotFound(m) => (StatusCode::NOT_FOUND, json!({ "error": m })),
            ServiceError::Conflict {
                message,
                session_id,
                missing,
            } => {
                let mut body = json!({ "error": message });
                if let Some(sid) = session_id {
                    body["session_id"] = json!(sid);
                }
                if !missing.is_empty() {
                    body["missing"] = json!(missing);
                }
                (StatusCode::CONFLICT, body)
            }
            ServiceError::Internal(e) => {
                log::error!("{e}");
                (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": "internal error" }))
            }
        };
        let mut resp = (status, Json(body)).into_response();
        no_store(&mut resp);
        resp
    }
}

fn no_store(resp: &mut Response) {
    resp.headers_mut()
        .insert(header::CACHE_CONTROL, HeaderValue::from_static("no-store"));
}

fn json_ok<T: serde::Serialize>(status: StatusCode, value: T) -> Response {
    let mut resp = (status, Json(value)).into_response();
    no_store(&mut resp);
    resp
}

/// Parses a JSON body, reporting problems as 400 with a JSON error.
fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(format!("invalid request body: {e}")))
}

/// Runs blocking store work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ServiceError>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(crate::Error::InvalidInput(format!("worker failed: {e}"))))?
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    participant: String,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResponseBody {
    guess: String,
    likert: i64,
}

async fn create_session(
    State(store): State<AppState>,
    Path(study_id): Path<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let body: CreateBody = parse_body(&body)?;
    let created =
        blocking(move || store.create_session(&study_id, &body.participant, body.seed)).await?;
    Ok(json_ok(StatusCode::CREATED, created))
}

async fn get_session(
    State(store): State<AppState>,
    Path(session_id): Path<String>,
) -> Result<Response, ServiceError> {
    Ok(json_ok(StatusCode::OK, store.view(&session_id)?))
}

async fn get_image(
    State(store): State<AppState>,
    Path((session_id, index)): Path<(String, String)>,
) -> Result<Response, ServiceError> {
    let index = parse_index(&index)?;
    let path = store.image_path(&session_id, index)?;
    let mime = mime_guess::from_path(&path).first_or_octet_stream();
    let bytes = blocking(move || {
        std::fs::read(&path).map_err(|e| ServiceError::Internal(crate::Error::io(&path, e)))
    })
    .await?;
    let mut resp = (
        StatusCode::OK,
        [(header::CONTENT_TYPE, mime.essence_str().to_string())],
        bytes,
    )
        .into_response();
    no_store(&mut resp);
    Ok(resp)
}

fn parse_index(raw: &str) -> Result<usize, ServiceError> {
    raw.parse()
        .map_err(|_| ServiceError::NotFound(format!("no item {raw:?}")))
}

async fn post_response(
    State(store): State<AppState>,
    Path((session_id, index)): Path<(String, String)>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let index = parse_index(&index)?;
    let body: ResponseBody = parse_body(&body)?;
    let ack =
        blocking(move || store.record_response(&session_id, index, &body.guess, body.likert)).await?;
    Ok(json_ok(StatusCode::OK, ack))
}

async fn complete(
    State(store): State<AppState>,
    Path(session_id): Path<String>,
) -> Result<Response, ServiceError> {
    let summary = blocking(move || store.complete_session(&session_id)).await?;
    Ok(json_ok(StatusCode::OK, summary))
}

async fn export(
    State(store): State<AppState>,
    Path(study_id): Path<String>,
) -> Result<Response, ServiceError> {
    let csv = blocking(move || store.export_study(&study_id)).await?;
    let mut resp = (
        StatusCode::OK,
        [(header::CONTENT_TYPE, "text/csv; charset=utf-8")],
        csv,
    )
        .into_response();
    no_store(&mut resp);
    Ok(resp)
}

async fn not_found() -> ServiceError {
    ServiceError::NotFound("no such endpoint".into())
}

/// Routes of the service. Study ids containing `/` must be percent-encoded
/// (`sliver07%2Fdiffaug`). With a configured `ui_dir` its files are served at `/`.
pub fn router(store: Arc<SessionStore>) -> Router {
    let ui_dir = store.config().ui_dir.clone();
    let api = Router::new()
        .route("/studies/{study_id}/sessions", post(create_session))
        .route("/studies/{study_id}/export", get(export))
        .route("/sessions/{session_id}", get(get_session))
        .route("/sessions/{session_id}/items/{index}/image", get(get_image))
        .route("/sessions/{session_id}/items/{index}/response", post(post_response))
        .route("/sessions/{session_id}/complete", post(complete))
        .with_state(store);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => api.fallback(not_found),
    }
}
