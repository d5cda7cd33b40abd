//! Stateless HTTP inference service.
//!
//! | method | path            | body                         |
//! |--------|-----------------|------------------------------|
//! | GET    | `/health`       | uptime and load state        |
//! | GET    | `/model`        | config and checkpoint digest |
//! | POST   | `/model/reload` | re-reads the checkpoint file |
//! | POST   | `/infer`        | [`InferRequest`]             |
//! | POST   | `/retrieve`     | [`RetrieveRequest`]          |

use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use floorplan_core::data::FloorplanSpec;
use floorplan_core::geometry::DEFAULT_GRID_K;
use serde::Serialize;

use crate::api::{self, ApiError, InferRequest, LoadedModel};

pub struct ServiceState {
    model: RwLock<Option<Arc<LoadedModel>>>,
    checkpoint_path: Option<PathBuf>,
    retrieval: Vec<FloorplanSpec>,
    started: Instant,
}

impl ServiceState {
    pub fn new(model: Option<LoadedModel>, checkpoint_path: Option<PathBuf>, retrieval: Vec<FloorplanSpec>) -> Arc<Self> {
        Arc::new(ServiceState { model: RwLock::new(model.map(Arc::new)), checkpoint_path, retrieval, started: Instant::now() })
    }

    /// The model for one request. Requests keep the reference they started
    /// with, so a swap never changes a request midway.
    pub fn current(&self) -> Option<Arc<LoadedModel>> {
        self.model.read().expect("model lock").clone()
    }

    pub fn swap(&self, model: LoadedModel) {
        *self.model.write().expect("model lock") = Some(Arc::new(model));
    }

    /// Reloads the checkpoint file; the old model stays on failure.
    pub fn reload(&self) -> Result<Arc<LoadedModel>, ApiError> {
        let path = self.checkpoint_path.as_ref().ok_or_else(|| ApiError::new(409, "no_checkpoint_path", "service was started without a checkpoint path"))?;
        let bytes = std::fs::read(path).map_err(|e| ApiError::new(500, "reload_failed", format!("{}: {e}", path.display())))?;
        let model = LoadedModel::from_bytes(&bytes).map_err(|e| ApiError::new(500, "reload_failed", e.to_string()))?;
        self.swap(model);
        Ok(self.current().expect("just loaded"))
    }
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/model", get(model_info))
        .route("/model/reload", post(reload))
        .route("/infer", post(infer))
        .route("/retrieve", post(retrieve))
        .fallback(not_found)
        .with_state(state)
}

fn json(status: u16, body: Vec<u8>) -> Response {
    let mut r = (StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR), body).into_response();
    r.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    r
}

fn ok<T: Serialize>(value: &T) -> Response {
    json(200, serde_json::to_vec(value).expect("responses serialize"))
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json(self.status, self.body())
    }
}

async fn health(State(s): State<Arc<ServiceState>>) -> Response {
    ok(&serde_json::json!({
        "status": "ok",
        "uptime_s": s.started.elapsed().as_secs_f64(),
        "model_loaded": s.current().is_some(),
    }))
}

async fn model_info(State(s): State<Arc<ServiceState>>) -> Response {
    match s.current() {
        Some(m) => ok(&m.describe()),
        None => ApiError::not_loaded().into_response(),
    }
}

async fn reload(State(s): State<Arc<ServiceState>>) -> Response {
    let s2 = s.clone();
    match tokio::task::spawn_blocking(move || s2.reload()).await {
        Ok(Ok(m)) => ok(&m.describe()),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::new(500, "internal_error", e.to_string()).into_response(),
    }
}

async fn infer(State(s): State<Arc<ServiceState>>, body: Bytes) -> Response {
    let Some(model) = s.current() else {
        return ApiError::not_loaded().into_response();
    };
    let req: InferRequest = match api::parse_infer_request(&body, model.grid_k()) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    let result = tokio::task::spawn_blocking(move || {
        let start = Instant::now();
        api::infer(&model, &req).map(|r| (r, start.elapsed()))
    })
    .await;
    match result {
        Ok(Ok((resp, took))) => {
            let mut r = ok(&resp);
            let ms = format!("{:.3}", took.as_secs_f64() * 1e3);
            r.headers_mut().insert("x-inference-ms", HeaderValue::from_str(&ms).expect("ascii"));
            r
        }
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::new(500, "internal_error", e.to_string()).into_response(),
    }
}

async fn retrieve(State(s): State<Arc<ServiceState>>, body: Bytes) -> Response {
    if s.retrieval.is_empty() {
        return ApiError::new(503, "retrieval_unavailable", "service was started without a retrieval dataset").into_response();
    }
    let grid_k = s.current().map_or(DEFAULT_GRID_K, |m| m.grid_k());
    match api::retrieve(&s.retrieval, &body, grid_k) {
        Ok(r) => ok(&r),
        Err(e) => e.into_response(),
    }
}

async fn not_found() -> Response {
    ApiError::new(404, "not_found", "no such endpoint").into_response()
}
