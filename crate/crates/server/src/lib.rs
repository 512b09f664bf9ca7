//! HTTP front end for a loaded [`Engine`].
//!
//! | Method | Path | Body |
//! |---|---|---|
//! | GET | `/health` | [`Health`](stylesim_core::designer::Health) |
//! | GET | `/styles` | style codes and attributes |
//! | GET | `/groups` | catalog groups |
//! | GET | `/products/{sku}` | product detail |
//! | GET | `/products/{sku}/neighbors?k=` | nearest products |
//! | POST | `/score` | `{"features": [...], "k": 5}` → design report |
//! | GET | `/graph/groups` | group graph |
//! | GET | `/graph/gaps` | gap report |
//! | GET | `/graph/export?format=graphml\|gexf\|csv` | graph document |
//! | POST | `/admin/reload` | reloads artifacts; needs `x-admin-token` |
//!
//! Errors are `{"error": code, "detail": message}`.

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use stylesim_core::{Engine, Error, ErrorKind, ExportFormat};

mod config;

pub use config::{load_engine, ArtifactPaths, ServerConfig};

pub const ADMIN_TOKEN_HEADER: &str = "x-admin-token";

/// Error body returned by every failing endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub error: String,
    pub detail: String,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, detail: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            error: error.to_string(),
            detail: detail.into(),
        }
    }
}

/// HTTP status for a library error.
pub fn status_for(e: &Error) -> StatusCode {
    if e.is_not_found() {
        return StatusCode::NOT_FOUND;
    }
    match e.kind() {
        ErrorKind::Validation => StatusCode::BAD_REQUEST,
        ErrorKind::Io | ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::new(status_for(&e), e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Shared server state: the current engine snapshot and the config it
/// reloads from.
pub struct AppState {
    engine: RwLock<Arc<Engine>>,
    config: ServerConfig,
    reload_lock: tokio::sync::Mutex<()>,
}

impl AppState {
    pub fn new(engine: Engine, config: ServerConfig) -> Arc<AppState> {
        Arc::new(AppState {
            engine: RwLock::new(Arc::new(engine)),
            config,
            reload_lock: tokio::sync::Mutex::new(()),
        })
    }

    /// The engine snapshot current at the time of the call.
    pub fn engine(&self) -> Arc<Engine> {
        self.engine
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .clone()
    }

    fn swap(&self, engine: Engine) {
        *self.engine.write().unwrap_or_else(|p| p.into_inner()) = Arc::new(engine);
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/styles", get(styles))
        .route("/groups", get(groups))
        .route("/products/{sku}", get(product))
        .route("/products/{sku}/neighbors", get(neighbors))
        .route("/score", post(score))
        .route("/graph/groups", get(graph_groups))
        .route("/graph/gaps", get(graph_gaps))
        .route("/graph/export", get(graph_export))
        .route("/admin/reload", post(reload))
        .fallback(not_found)
        .with_state(state)
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

async fn health(State(state): State<Arc<AppState>>) -> Json<stylesim_core::designer::Health> {
    Json(state.engine().health())
}

async fn styles(
    State(state): State<Arc<AppState>>,
) -> Json<Vec<stylesim_core::designer::StyleInfo>> {
    Json(state.engine().styles())
}

async fn groups(
    State(state): State<Arc<AppState>>,
) -> Json<Vec<stylesim_core::designer::GroupSummary>> {
    Json(state.engine().groups())
}

async fn product(
    State(state): State<Arc<AppState>>,
    Path(sku): Path<String>,
) -> ApiResult<stylesim_core::designer::ProductView> {
    Ok(Json(state.engine().product(&sku)?))
}

#[derive(Debug, Deserialize)]
pub struct NeighborsQuery {
    pub k: Option<usize>,
}

fn bad_query(r: QueryRejection) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, "malformed_request", r.body_text())
}

async fn neighbors(
    State(state): State<Arc<AppState>>,
    Path(sku): Path<String>,
    query: Result<Query<NeighborsQuery>, QueryRejection>,
) -> ApiResult<stylesim_core::RankedNeighbors> {
    let Query(q) = query.map_err(bad_query)?;
    let engine = state.engine();
    let k = q.k.unwrap_or(engine.config.default_k);
    Ok(Json(engine.neighbors(&sku, k)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub features: Vec<f64>,
    pub k: Option<usize>,
}

async fn score(
    State(state): State<Arc<AppState>>,
    body: Result<Json<ScoreRequest>, JsonRejection>,
) -> ApiResult<stylesim_core::DesignReport> {
    let Json(req) = body
        .map_err(|r| ApiError::new(StatusCode::BAD_REQUEST, "malformed_request", r.body_text()))?;
    let engine = state.engine();
    let k = req.k.unwrap_or(engine.config.default_k);
    Ok(Json(engine.score(&req.features, k)?))
}

async fn graph_groups(
    State(state): State<Arc<AppState>>,
) -> Json<stylesim_core::designer::GroupOverview> {
    Json(state.engine().group_overview())
}

async fn graph_gaps(State(state): State<Arc<AppState>>) -> Json<stylesim_core::GapReport> {
    Json(state.engine().gaps())
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub format: Option<String>,
}

async fn graph_export(
    State(state): State<Arc<AppState>>,
    query: Result<Query<ExportQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = query.map_err(bad_query)?;
    let format: ExportFormat = q.format.as_deref().unwrap_or("graphml").parse()?;
    let body = state.engine().export(format)?;
    Ok(([(header::CONTENT_TYPE, format.content_type())], body).into_response())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReloadResponse {
    pub reloaded: bool,
    pub model_checksum: String,
    pub graph_nodes: usize,
    pub graph_edges: usize,
}

async fn reload(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
) -> ApiResult<ReloadResponse> {
    let Some(expected) = state.config.admin_token.as_deref() else {
        return Err(ApiError::new(
            StatusCode::FORBIDDEN,
            "admin_disabled",
            "no admin token configured",
        ));
    };
    let given = headers
        .get(ADMIN_TOKEN_HEADER)
        .and_then(|v| v.to_str().ok());
    if given != Some(expected) {
        return Err(ApiError::new(
            StatusCode::UNAUTHORIZED,
            "unauthorized",
            "missing or wrong admin token",
        ));
    }
    let Some(paths) = state.config.paths.clone() else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "reload_unavailable",
            "server has no artifact paths",
        ));
    };
    let _guard = state.reload_lock.lock().await;
    let engine_config = state.config.engine;
    let engine = tokio::task::spawn_blocking(move || load_engine(&paths, engine_config))
        .await
        .map_err(|e| {
            ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "invariant",
                e.to_string(),
            )
        })??;
    let response = ReloadResponse {
        reloaded: true,
        model_checksum: engine.model_checksum().to_string(),
        graph_nodes: engine.graph.node_count(),
        graph_edges: engine.graph.edge_count(),
    };
    state.swap(engine);
    tracing::info!(checksum = %response.model_checksum, "artifacts reloaded");
    Ok(Json(response))
}

/// Loads artifacts from `config.paths` and serves until interrupted.
pub async fn serve(config: ServerConfig) -> stylesim_core::Result<()> {
    let paths = config
        .paths
        .clone()
        .ok_or_else(|| Error::InvalidArgument("server config has no artifact paths".into()))?;
    let engine = load_engine(&paths, config.engine)?;
    let addr: SocketAddr = format!("{}:{}", config.bind, config.port)
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("bind address: {e}")))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| Error::Io {
            path: addr.to_string().into(),
            source,
        })?;
    tracing::info!(%addr, nodes = engine.graph.node_count(), "serving");
    let app = router(AppState::new(engine, config));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|source| Error::Io {
            path: addr.to_string().into(),
            source,
        })
}
