//! Read-only HTTP API over a loaded package, plus optional static UI files.
//!
//! Every response for a fixed package is identical for identical requests,
//! so all of them carry the package hash as ETag and are marked immutable.

use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use moviemap_core::assembly::AssemblyError;
use moviemap_core::billboard::DEFAULT_WINDOW_S;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::package::{Package, PackageError, PackageSection};

pub const CACHE_CONTROL: &str = "public, max-age=31536000, immutable";

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body {
            error: String,
        }
        (self.0, Json(Body { error: self.1 })).into_response()
    }
}

impl From<PackageError> for ApiError {
    fn from(e: PackageError) -> Self {
        let status = match &e {
            PackageError::UnknownVideo(_)
            | PackageError::Assembly(AssemblyError::UnknownNode(_) | AssemblyError::UnknownSection(_)) => {
                StatusCode::NOT_FOUND
            }
            PackageError::Assembly(_) | PackageError::Playback(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

fn not_found(what: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, format!("{what} not found"))
}

type Shared = Arc<Package>;

pub fn router(pkg: Shared, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/manifest", get(manifest))
        .route("/api/sections/{id}", get(section))
        .route("/api/sections/{id}/frames/{k}", get(section_frame))
        .route("/api/turns/{node}/{from}/{to}/{k}", get(turn_frame))
        .route("/api/exits", get(exits))
        .route("/api/billboards", get(billboards))
        .route("/api/position", get(position))
        .layer(middleware::from_fn_with_state(pkg.clone(), cache_headers))
        .with_state(pkg);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn cache_headers(State(pkg): State<Shared>, req: Request, next: Next) -> Response {
    let etag = format!("\"{}\"", pkg.hash);
    let fresh = req
        .headers()
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == etag || t.trim() == "*"));
    let mut res = if fresh {
        StatusCode::NOT_MODIFIED.into_response()
    } else {
        next.run(req).await
    };
    if res.status().is_success() || res.status() == StatusCode::NOT_MODIFIED {
        let h = res.headers_mut();
        h.insert(header::ETAG, HeaderValue::from_str(&etag).expect("hex is ascii"));
        h.insert(header::CACHE_CONTROL, HeaderValue::from_static(CACHE_CONTROL));
    }
    res
}

async fn manifest(State(pkg): State<Shared>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], pkg.manifest_bytes.clone()).into_response()
}

#[derive(Serialize)]
struct SectionView<'a> {
    #[serde(flatten)]
    section: &'a PackageSection,
    street_id: &'a str,
    frame_count: usize,
    duration_s: f64,
}

async fn section(State(pkg): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = pkg.section(&id).ok_or_else(|| not_found(format_args!("section {id}")))?;
    let street_id = &pkg.trajectories[&s.video_id].source.street_id;
    Ok(Json(SectionView {
        section: s,
        street_id,
        frame_count: s.frames.len(),
        duration_s: s.end_timestamp_s - s.start_timestamp_s,
    })
    .into_response())
}

async fn png(pkg: &Package, rel: &str) -> Result<Response, ApiError> {
    let bytes = tokio::fs::read(pkg.asset_path(rel))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, format!("{rel}: {e}")))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], Body::from(bytes)).into_response())
}

async fn section_frame(State(pkg): State<Shared>, Path((id, k)): Path<(String, usize)>) -> Result<Response, ApiError> {
    let s = pkg.section(&id).ok_or_else(|| not_found(format_args!("section {id}")))?;
    let rel = s.frames.get(k).ok_or_else(|| not_found(format_args!("frame {k} of {id}")))?;
    png(&pkg, rel).await
}

async fn turn_frame(
    State(pkg): State<Shared>,
    Path((node, from, to, k)): Path<(String, String, String, usize)>,
) -> Result<Response, ApiError> {
    let t = pkg
        .turn(&node, &from, &to)
        .ok_or_else(|| not_found(format_args!("turn {node} {from} -> {to}")))?;
    let rel = t.frames.get(k).ok_or_else(|| not_found(format_args!("frame {k} of turn")))?;
    png(&pkg, rel).await
}

#[derive(Deserialize)]
struct ExitsQuery {
    node: String,
    arriving: Option<String>,
}

async fn exits(State(pkg): State<Shared>, Query(q): Query<ExitsQuery>) -> Result<Response, ApiError> {
    Ok(Json(pkg.exits(&q.node, q.arriving.as_deref())?).into_response())
}

#[derive(Deserialize)]
struct BillboardQuery {
    video: String,
    t: f64,
    window: Option<f64>,
}

async fn billboards(State(pkg): State<Shared>, Query(q): Query<BillboardQuery>) -> Result<Response, ApiError> {
    let window = q.window.unwrap_or(DEFAULT_WINDOW_S);
    if !(q.t.is_finite() && window.is_finite() && window >= 0.0) {
        return Err(ApiError(StatusCode::BAD_REQUEST, "t and window must be finite, window ≥ 0".into()));
    }
    Ok(Json(pkg.billboards_near(&q.video, q.t, window)?).into_response())
}

#[derive(Deserialize)]
struct PositionQuery {
    section: String,
    t: f64,
}

#[derive(Serialize)]
struct PositionView {
    x_m: f64,
    y_m: f64,
    heading_rad: f64,
}

async fn position(State(pkg): State<Shared>, Query(q): Query<PositionQuery>) -> Result<Response, ApiError> {
    let (p, heading_rad) = pkg.position(&q.section, q.t)?;
    Ok(Json(PositionView {
        x_m: p.x_m,
        y_m: p.y_m,
        heading_rad,
    })
    .into_response())
}

/// Serves until `shutdown` resolves, then finishes in-flight requests.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
