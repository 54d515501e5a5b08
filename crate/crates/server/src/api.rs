//! Read-only JSON API over a frozen store.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cogkit::query::{self, PatternQuery, DEFAULT_LIMIT};
use cogkit::{Error, NodeId, Store};
use serde_json::json;

use crate::detail::node_detail;

pub const API_VERSION: &str = "1";

pub struct AppState {
    pub store: Store,
    pub min_similarity: f64,
}

impl AppState {
    pub fn new(store: Store, min_similarity: f64) -> Arc<Self> {
        assert!(store.is_frozen(), "the API serves frozen stores only");
        Arc::new(AppState {
            store,
            min_similarity,
        })
    }
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_param(name: &str, raw: &str) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadParameter", format!("invalid `{name}`: `{raw}`"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::MissingNode(_) => StatusCode::NOT_FOUND,
            Error::EmptyQuery | Error::UnboundProjection(_) | Error::MalformedQuery(_) => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn param<T: std::str::FromStr>(params: &HashMap<String, String>, name: &str) -> Result<Option<T>, ApiError> {
    params
        .get(name)
        .map(|raw| raw.parse().map_err(|_| ApiError::bad_param(name, raw)))
        .transpose()
}

async fn search(
    State(app): State<Arc<AppState>>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Vec<query::SearchHit>> {
    let q = params.get("q").map(String::as_str).unwrap_or("");
    let limit = param(&params, "limit")?.unwrap_or(DEFAULT_LIMIT);
    let min_sim: f64 = param(&params, "minSim")?.unwrap_or(app.min_similarity);
    if !(0.0..=1.0).contains(&min_sim) {
        return Err(ApiError::bad_param("minSim", &min_sim.to_string()));
    }
    Ok(Json(query::search(&app.store, q, limit, min_sim)?))
}

async fn node(State(app): State<Arc<AppState>>, Path(raw): Path<String>) -> ApiResult<serde_json::Value> {
    let missing = || ApiError::new(StatusCode::NOT_FOUND, "MissingNodeError", format!("no such node: {raw}"));
    let id = NodeId::parse(&raw).map_err(|_| missing())?;
    node_detail(&app.store, &id)?.map(Json).ok_or_else(missing)
}

async fn frames(State(app): State<Arc<AppState>>) -> ApiResult<Vec<query::CatalogRow>> {
    Ok(Json(query::explore_catalog(&app.store)))
}

async fn pattern(
    State(app): State<Arc<AppState>>,
    Query(params): Query<HashMap<String, String>>,
    body: String,
) -> ApiResult<query::QueryResult> {
    let limit = param(&params, "limit")?;
    let q = PatternQuery::parse(&body)?;
    Ok(Json(query::evaluate_pattern(&app.store, &q, limit)?))
}

async fn stats(State(app): State<Arc<AppState>>) -> ApiResult<cogkit::StoreStats> {
    Ok(Json(app.store.stats()))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
}

async fn version_header(mut response: Response) -> Response {
    response
        .headers_mut()
        .insert("x-api-version", HeaderValue::from_static(API_VERSION));
    response
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/search", get(search))
        .route("/api/node/{*id}", get(node))
        .route("/api/frames", get(frames))
        .route("/api/query", post(pattern))
        .route("/api/stats", get(stats))
        .fallback(not_found)
        .layer(axum::middleware::map_response(version_header))
        .with_state(app)
}
