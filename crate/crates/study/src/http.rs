use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::RwLock;
use tower_http::services::ServeDir;
use uuid::Uuid;
use vi_probe_core::metrics::DetectionRate;

use crate::{ExportFilter, SliceSpec, Study, StudyError, Submission};

pub type SharedStudy = Arc<RwLock<Study>>;

impl IntoResponse for StudyError {
    fn into_response(self) -> Response {
        let status = match &self {
            StudyError::UnknownSession(_) | StudyError::UnknownItem(_) => StatusCode::NOT_FOUND,
            StudyError::EmptySlice | StudyError::InvalidSlice(_) => StatusCode::BAD_REQUEST,
            StudyError::OutOfOrder { .. } => StatusCode::CONFLICT,
            StudyError::Io { .. } | StudyError::Corrupt(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({"error": self.to_string()}))).into_response()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default)]
    participant: String,
    #[serde(default)]
    slice: SliceSpec,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Serialize)]
struct Created {
    session_id: Uuid,
    total: usize,
}

#[derive(Debug, Serialize)]
struct Export {
    judgments: usize,
    rates: Vec<DetectionRate>,
}

async fn create_session(
    State(study): State<SharedStudy>,
    Json(body): Json<CreateSession>,
) -> Result<Response, StudyError> {
    let mut study = study.write().await;
    let s = study.create_session(&body.participant, body.slice, body.seed)?;
    let created = Created {
        session_id: s.session_id,
        total: s.order.len(),
    };
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn next_trial(State(study): State<SharedStudy>, UrlPath(id): UrlPath<Uuid>) -> Result<Response, StudyError> {
    Ok(Json(study.read().await.next_trial(id)?).into_response())
}

async fn submit(
    State(study): State<SharedStudy>,
    UrlPath(id): UrlPath<Uuid>,
    Json(body): Json<Submission>,
) -> Result<Response, StudyError> {
    Ok(Json(study.write().await.submit(id, body)?).into_response())
}

async fn export(State(study): State<SharedStudy>, Query(filter): Query<ExportFilter>) -> Json<Export> {
    let study = study.read().await;
    let judgments = study.judgments().iter().filter(|r| filter.matches(r)).count();
    Json(Export {
        judgments,
        rates: study.export(&filter),
    })
}

async fn stimulus(State(study): State<SharedStudy>, UrlPath(file): UrlPath<String>) -> Result<Response, StudyError> {
    let item_id = file
        .strip_suffix(".png")
        .ok_or_else(|| StudyError::UnknownItem(file.clone()))?;
    let path = study.read().await.stimulus_path(item_id)?;
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|source| StudyError::Io { path, source })?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

/// All study endpoints; the UI bundle in `ui_dir`, when given, is served under `/`.
pub fn router(study: SharedStudy, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next_trial))
        .route("/sessions/{id}/judgments", post(submit))
        .route("/export/detection-rates", get(export))
        .route("/stimuli/{file}", get(stimulus))
        .with_state(study);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the process is stopped.
pub async fn serve(study: SharedStudy, addr: SocketAddr, ui_dir: Option<&Path>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(study, ui_dir)).await
}
