//! JSON-over-HTTP service exposing the analyses of one immutable dataset.
//!
//! Routes live under `/api`. Errors are returned as `{code, message}` with a
//! status matching the code.

use std::future::Future;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dsmine_core::dataset::SummaryView;
use dsmine_core::Error;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub mod reports;

pub use reports::Corpus;
use reports::{
    cluster_report, descend_report, mca_report, parse_linkage, recommend_report, validate_report,
    ValidateParams, DEFAULT_TOP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    UnknownDimension,
    UnknownValue,
    DegenerateInput,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadRequest | ErrorCode::DegenerateInput => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::UnknownDimension | ErrorCode::UnknownValue => StatusCode::NOT_FOUND,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            code: ErrorCode::BadRequest,
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let code = match &err {
            Error::InvalidArgument(_) => ErrorCode::BadRequest,
            Error::UnknownDimension(_) => ErrorCode::UnknownDimension,
            Error::UnknownValue { .. } => ErrorCode::UnknownValue,
            Error::Degenerate(_) => ErrorCode::DegenerateInput,
            _ => ErrorCode::Internal,
        };
        ApiError {
            code,
            message: err.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        ApiError::bad_request(rejection.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(rejection: QueryRejection) -> Self {
        ApiError::bad_request(rejection.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

/// Which browser origins may call the API.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cors {
    Any,
    Origin(String),
}

impl Cors {
    /// `*` allows any origin.
    pub fn parse(origin: &str) -> Self {
        if origin == "*" {
            Cors::Any
        } else {
            Cors::Origin(origin.to_owned())
        }
    }

    fn layer(&self) -> std::result::Result<CorsLayer, String> {
        let origin = match self {
            Cors::Any => AllowOrigin::any(),
            Cors::Origin(o) => AllowOrigin::exact(
                HeaderValue::from_str(o).map_err(|_| format!("invalid CORS origin `{o}`"))?,
            ),
        };
        Ok(CorsLayer::new()
            .allow_origin(origin)
            .allow_methods([Method::GET, Method::POST])
            .allow_headers([axum::http::header::CONTENT_TYPE]))
    }
}

pub fn router(corpus: Arc<Corpus>, cors: &Cors) -> std::result::Result<Router, String> {
    Ok(Router::new()
        .route("/api/dataset/summary", get(summary))
        .route("/api/cluster", post(cluster))
        .route("/api/validate", post(validate))
        .route("/api/mca", get(mca))
        .route("/api/recommend", post(recommend))
        .route("/api/tree/descend", post(descend))
        .layer(cors.layer()?)
        .with_state(corpus))
}

/// Serves `app` until `shutdown` resolves, then drains open connections.
pub async fn serve(
    listener: TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
}

/// Resolves on ctrl-c or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        if tokio::signal::ctrl_c().await.is_err() {
            std::future::pending::<()>().await;
        }
    };
    #[cfg(unix)]
    let term = async {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
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
    log::info!("shutting down");
}

/// Runs CPU-bound analysis off the async workers.
async fn blocking<T, F>(corpus: Arc<Corpus>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Corpus) -> dsmine_core::Result<T> + Send + 'static,
{
    match tokio::task::spawn_blocking(move || f(&corpus)).await {
        Ok(result) => result.map(Json).map_err(ApiError::from),
        Err(e) => Err(ApiError {
            code: ErrorCode::Internal,
            message: e.to_string(),
        }),
    }
}

async fn summary(State(corpus): State<Arc<Corpus>>) -> Json<serde_json::Value> {
    Json(serde_json::to_value(SummaryView::new(corpus.dataset())).expect("summary serializes"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterRequest {
    pub k: usize,
    pub linkage: Option<String>,
}

async fn cluster(
    State(corpus): State<Arc<Corpus>>,
    body: std::result::Result<Json<ClusterRequest>, JsonRejection>,
) -> ApiResult<reports::ClusterReport> {
    let Json(req) = body?;
    let linkage = parse_linkage(req.linkage.as_deref())?;
    blocking(corpus, move |c| cluster_report(c, req.k, linkage)).await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateRequest {
    pub kmin: usize,
    pub kmax: usize,
    #[serde(rename = "B")]
    pub resamples: usize,
    pub seed: u64,
    pub threshold: f64,
    pub k: Option<usize>,
    pub linkage: Option<String>,
}

async fn validate(
    State(corpus): State<Arc<Corpus>>,
    body: std::result::Result<Json<ValidateRequest>, JsonRejection>,
) -> ApiResult<reports::ValidateReport> {
    let Json(req) = body?;
    let params = ValidateParams {
        k_min: req.kmin,
        k_max: req.kmax,
        resamples: req.resamples,
        seed: req.seed,
        threshold: req.threshold,
        linkage: parse_linkage(req.linkage.as_deref())?,
        k: req.k,
    };
    blocking(corpus, move |c| validate_report(c, &params)).await
}

#[derive(Debug, Deserialize)]
pub struct McaQuery {
    pub retain_threshold: Option<f64>,
    pub top: Option<usize>,
}

async fn mca(
    State(corpus): State<Arc<Corpus>>,
    query: std::result::Result<Query<McaQuery>, QueryRejection>,
) -> ApiResult<dsmine_core::mca::McaSummary> {
    let Query(q) = query?;
    let threshold = q
        .retain_threshold
        .ok_or_else(|| ApiError::bad_request("query parameter retain_threshold is required"))?;
    let top = q.top.unwrap_or(DEFAULT_TOP);
    blocking(corpus, move |c| mca_report(c, threshold, top)).await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecommendRequest {
    #[serde(default)]
    pub bindings: IndexMap<String, String>,
}

async fn recommend(
    State(corpus): State<Arc<Corpus>>,
    body: std::result::Result<Json<RecommendRequest>, JsonRejection>,
) -> ApiResult<dsmine_core::Recommendation> {
    let Json(req) = body?;
    Ok(Json(recommend_report(&corpus, &req.bindings)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescendRequest {
    pub path: Vec<String>,
}

async fn descend(
    State(corpus): State<Arc<Corpus>>,
    body: std::result::Result<Json<DescendRequest>, JsonRejection>,
) -> ApiResult<dsmine_core::recommender::NodeView> {
    let Json(req) = body?;
    Ok(Json(descend_report(&corpus, &req.path)?))
}
