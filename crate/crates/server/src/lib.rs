//! JSON-over-HTTP prediction service.
//!
//! Routes:
//!
//! * `POST /predict` with `{"description": "..."}` returns
//!   `{"soc_code": "...", "model_version": "..."}`.
//! * `GET /healthz` returns the loaded model's metadata.
//! * `POST /admin/reload` with `{"path": "..."}` loads a pipeline file and
//!   swaps it in atomically.
//!
//! Client errors are answered with a status code and `{"error": "..."}`.

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use soc_core::pipeline::Pipeline;
use tokio::net::TcpListener;
use tower_http::timeout::TimeoutLayer;

pub const DEFAULT_BODY_LIMIT: usize = 1024 * 1024;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy)]
pub struct ServerConfig {
    pub body_limit: usize,
    pub request_timeout: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            body_limit: DEFAULT_BODY_LIMIT,
            request_timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct PredictRequest {
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub soc_code: String,
    pub model_version: String,
}

#[derive(Debug, Deserialize)]
struct ReloadRequest {
    path: PathBuf,
}

/// Shared handle to the served pipeline.
#[derive(Clone)]
pub struct AppState {
    model: Arc<RwLock<Arc<Pipeline>>>,
}

impl AppState {
    pub fn new(pipeline: Pipeline) -> Self {
        AppState {
            model: Arc::new(RwLock::new(Arc::new(pipeline))),
        }
    }

    pub fn current(&self) -> Arc<Pipeline> {
        self.model.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn replace(&self, pipeline: Pipeline) {
        *self.model.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(pipeline);
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, message.into())
}

fn parse_body<T: for<'de> Deserialize<'de>>(
    body: Result<Bytes, BytesRejection>,
) -> Result<T, ApiError> {
    let body = body.map_err(|rejection| ApiError(rejection.status(), rejection.body_text()))?;
    serde_json::from_slice(&body).map_err(|e| bad_request(format!("invalid request body: {e}")))
}

async fn predict(
    State(state): State<AppState>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Response, ApiError> {
    let request: PredictRequest = parse_body(body)?;
    if request.description.trim().is_empty() {
        return Err(bad_request("description must not be empty"));
    }
    let pipeline = state.current();
    let response = tokio::task::spawn_blocking(move || {
        pipeline
            .predict_one(&request.description)
            .map(|code| PredictResponse {
                soc_code: code.to_string(),
                model_version: pipeline.model_version().to_string(),
            })
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(response).into_response())
}

fn health_body(pipeline: &Pipeline) -> serde_json::Value {
    let meta = pipeline.metadata();
    json!({
        "status": "ok",
        "model_version": meta.model_version,
        "representation": pipeline.representation(),
        "algorithm": pipeline.classifier().algorithm(),
        "classes": pipeline.labels().len(),
        "feature_dim": pipeline.classifier().dim,
        "created_at": meta.created_at,
        "format_version": meta.format_version,
        "dataset": meta.fingerprint,
    })
}

async fn healthz(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(health_body(&state.current()))
}

async fn reload(
    State(state): State<AppState>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Response, ApiError> {
    let request: ReloadRequest = parse_body(body)?;
    let loaded = tokio::task::spawn_blocking(move || Pipeline::load(&request.path))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    log::info!("reloaded model {}", loaded.model_version());
    let body = health_body(&loaded);
    state.replace(loaded);
    Ok(Json(body).into_response())
}

pub fn router(state: AppState, config: ServerConfig) -> Router {
    Router::new()
        .route("/predict", post(predict))
        .route("/healthz", get(healthz))
        .route("/admin/reload", post(reload))
        .layer(DefaultBodyLimit::max(config.body_limit))
        .layer(TimeoutLayer::with_status_code(
            StatusCode::REQUEST_TIMEOUT,
            config.request_timeout,
        ))
        .with_state(state)
}

/// Serves until `shutdown` resolves, then lets in-flight requests finish.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    config: ServerConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state, config))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    log::info!("shutdown requested; draining in-flight requests");
}

/// Binds `addr` and returns the listener with the address actually bound,
/// which differs from `addr` when port 0 was requested.
pub async fn bind(addr: SocketAddr) -> std::io::Result<(TcpListener, SocketAddr)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((listener, local))
}
