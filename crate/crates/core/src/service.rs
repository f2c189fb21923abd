//! JSON REST API over a shared [`Pipeline`].

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, FromRequest, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::model::{Claim, LanguageTag};
use crate::pipeline::{Pipeline, PipelineConfig, PipelineError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocumentRequest {
    pub document: String,
    pub language: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyRequest {
    pub claim: String,
    pub language: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimsResponse {
    pub claims: Vec<Claim>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub code: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: self.message, code: self.code.to_string() };
        (self.status, Json(body)).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::DocumentTooLarge { .. } => {
                ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "document_too_large", e.to_string())
            }
            PipelineError::Detection(_) => ApiError::new(StatusCode::BAD_GATEWAY, "provider_failure", e.to_string()),
            PipelineError::Config(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "configuration", e.to_string())
            }
        }
    }
}

/// `Json` extractor whose rejections use the API error body.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(rejection) => {
                let status = rejection.status();
                let code = if status == StatusCode::PAYLOAD_TOO_LARGE { "document_too_large" } else { "bad_request" };
                Err(ApiError::new(status, code, rejection.body_text()))
            }
        }
    }
}

fn parse_language(raw: &str) -> Result<LanguageTag, ApiError> {
    LanguageTag::parse(raw).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_language", e.to_string()))
}

async fn detect(
    State(pipeline): State<Arc<Pipeline>>,
    ApiJson(req): ApiJson<DocumentRequest>,
) -> Result<Json<ClaimsResponse>, ApiError> {
    let language = parse_language(&req.language)?;
    let claims = pipeline.detect_claims(&req.document, &language).await?;
    Ok(Json(ClaimsResponse { claims }))
}

async fn factcheck(
    State(pipeline): State<Arc<Pipeline>>,
    ApiJson(req): ApiJson<DocumentRequest>,
) -> Result<Response, ApiError> {
    let language = parse_language(&req.language)?;
    let report = pipeline.run_pipeline(&req.document, &language).await?;
    Ok(Json(report).into_response())
}

async fn verify(
    State(pipeline): State<Arc<Pipeline>>,
    ApiJson(req): ApiJson<VerifyRequest>,
) -> Result<Response, ApiError> {
    let language = parse_language(&req.language)?;
    if req.claim.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "claim must not be empty"));
    }
    let verdict = pipeline.verify_text(&req.claim, &language).await?;
    Ok(Json(verdict).into_response())
}

async fn health(State(pipeline): State<Arc<Pipeline>>) -> Response {
    Json(pipeline.health().await).into_response()
}

/// Routes under `/api/v1`, plus `/health` as an alias.
pub fn router(pipeline: Arc<Pipeline>) -> Router {
    // four bytes per character plus JSON overhead
    let body_limit = (pipeline.limits().max_document_chars * 4 + 64 * 1024).max(2 * 1024 * 1024);
    Router::new()
        .route("/api/v1/claims/detect", post(detect))
        .route("/api/v1/factcheck", post(factcheck))
        .route("/api/v1/verify", post(verify))
        .route("/api/v1/health", get(health))
        .route("/health", get(health))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(pipeline)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] crate::pipeline::ConfigError),
    #[error("binding {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Build the pipeline from `config` and serve until the process is stopped.
pub async fn serve(config: &PipelineConfig, addr: SocketAddr) -> Result<(), ServeError> {
    let pipeline = Arc::new(Pipeline::from_config(config)?);
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServeError::Bind { addr, source })?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, router(pipeline)).await?;
    Ok(())
}
