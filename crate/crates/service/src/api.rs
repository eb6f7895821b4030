use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use svf_core::imageio::layers::DETAIL_OFFSET;
use svf_core::imageio::{decode_image, encode_image, AlphaPolicy, Encoding};
use svf_core::{decompose as run_decompose, recompose as run_recompose};
use svf_core::{ColorMode, Decomposition, Image, Schedule, Weights};

use crate::sessions::Snapshot;
use crate::AppState;

pub(crate) struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn no_session(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "session_not_found",
            format!("no session {id}"),
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.message, "code": self.code });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SessionInfo {
    pub session_id: String,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Level count of the current decomposition, 0 if none.
    #[serde(default)]
    pub levels: usize,
}

/// A single epsilon is used for every level.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Epsilons {
    One(f64),
    PerLevel(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DecomposeRequest {
    pub radii: Vec<usize>,
    #[serde(alias = "epsilons")]
    pub epsilon: Epsilons,
    #[serde(default)]
    pub color_mode: ColorMode,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LevelStats {
    pub level: usize,
    pub radius: usize,
    pub epsilon: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DecomposeResponse {
    pub levels: usize,
    pub stats: Vec<LevelStats>,
    pub timing_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RecomposeRequest {
    pub weights: Vec<f64>,
    #[serde(default = "one")]
    pub base_weight: f64,
}

fn one() -> f64 {
    1.0
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| {
        if e.is_data() {
            ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid_request",
                e.to_string(),
            )
        } else {
            ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", e.to_string())
        }
    })
}

fn body_bytes(body: Result<Bytes, BytesRejection>) -> ApiResult<Bytes> {
    body.map_err(|r| {
        let status = r.status();
        let code = if status == StatusCode::PAYLOAD_TOO_LARGE {
            "payload_too_large"
        } else {
            "bad_request"
        };
        ApiError::new(status, code, r.body_text())
    })
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

fn encode_preview(image: &Image) -> ApiResult<Vec<u8>> {
    encode_image(image, Encoding::Png8)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))
}

fn snapshot(state: &AppState, id: &str) -> ApiResult<Snapshot> {
    state
        .sessions
        .get(id)
        .ok_or_else(|| ApiError::no_session(id))
}

fn decomposition(snap: &Snapshot) -> ApiResult<Arc<Decomposition>> {
    snap.decomposition.clone().ok_or_else(|| {
        ApiError::new(
            StatusCode::CONFLICT,
            "not_decomposed",
            "session has no decomposition yet",
        )
    })
}

fn info(id: String, snap: &Snapshot) -> SessionInfo {
    SessionInfo {
        session_id: id,
        width: snap.source.width(),
        height: snap.source.height(),
        channels: snap.source.channels(),
        levels: snap.decomposition.as_ref().map_or(0, |d| d.levels()),
    }
}

pub(crate) async fn create_session(
    State(state): State<AppState>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<(StatusCode, Json<SessionInfo>)> {
    let body = body_bytes(body)?;
    let image = blocking(move || decode_image(&body, AlphaPolicy::Drop))
        .await?
        .map_err(|e| {
            ApiError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                "unsupported_image",
                e.to_string(),
            )
        })?;
    let (w, h) = image.dimensions();
    let limit = state.config.max_image_pixels;
    if w.saturating_mul(h) > limit {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "image_too_large",
            format!("{w}x{h} exceeds the {limit}-pixel limit"),
        ));
    }
    let channels = image.channels();
    let id = state.sessions.insert(image);
    let body = SessionInfo {
        session_id: id,
        width: w,
        height: h,
        channels,
        levels: 0,
    };
    Ok((StatusCode::CREATED, Json(body)))
}

pub(crate) async fn session_info(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionInfo>> {
    let snap = snapshot(&state, &id)?;
    Ok(Json(info(id, &snap)))
}

pub(crate) async fn delete_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    if state.sessions.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::no_session(&id))
    }
}

pub(crate) async fn decompose(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Json<DecomposeResponse>> {
    let snap = snapshot(&state, &id)?;
    let req: DecomposeRequest = parse_json(&body_bytes(body)?)?;
    let epsilons = match req.epsilon {
        Epsilons::One(e) => vec![e],
        Epsilons::PerLevel(v) => v,
    };
    let invalid = |e: svf_core::Error| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_schedule",
            e.to_string(),
        )
    };
    let schedule = Schedule::from_lists(&req.radii, &epsilons).map_err(invalid)?;
    let source = snap.source.clone();
    let mode = req.color_mode;
    let (d, elapsed) = blocking(move || {
        let start = Instant::now();
        let d = run_decompose(&source, &schedule, mode);
        (d, start.elapsed())
    })
    .await?;
    let d = d.map_err(invalid)?;

    let stats = d
        .details()
        .iter()
        .zip(d.schedule().levels())
        .enumerate()
        .map(|(k, (layer, p))| LevelStats {
            level: k + 1,
            radius: p.radius(),
            epsilon: p.epsilon(),
            min: layer.min(),
            max: layer.max(),
            mean: layer.mean(),
        })
        .collect();
    let response = DecomposeResponse {
        levels: d.levels(),
        stats,
        timing_ms: elapsed.as_secs_f64() * 1e3,
    };
    if !state.sessions.set_decomposition(&id, Arc::new(d)) {
        return Err(ApiError::no_session(&id));
    }
    Ok(Json(response))
}

pub(crate) async fn recompose(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Response> {
    let snap = snapshot(&state, &id)?;
    let d = decomposition(&snap)?;
    let req: RecomposeRequest = parse_json(&body_bytes(body)?)?;
    let weights = Weights::new(req.weights, req.base_weight);
    let bytes = blocking(move || run_recompose(&d, &weights).map(|img| encode_preview(&img)))
        .await?
        .map_err(|e| {
            ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid_weights",
                e.to_string(),
            )
        })??;
    Ok(png(bytes))
}

pub(crate) async fn layer(
    State(state): State<AppState>,
    Path((id, k)): Path<(String, String)>,
) -> ApiResult<Response> {
    let snap = snapshot(&state, &id)?;
    let d = decomposition(&snap)?;
    let levels = d.levels();
    let k = k
        .parse::<usize>()
        .ok()
        .filter(|k| (1..=levels).contains(k))
        .ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "level_not_found",
                format!("level {k} not in 1..={levels}"),
            )
        })?;
    let bytes = blocking(move || {
        let shifted = d.details()[k - 1]
            .map(|v| v + DETAIL_OFFSET)
            .expect("offset detail stays finite");
        encode_preview(&shifted)
    })
    .await??;
    Ok(png(bytes))
}

pub(crate) async fn base(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let snap = snapshot(&state, &id)?;
    let d = decomposition(&snap)?;
    let bytes = blocking(move || encode_preview(d.base())).await??;
    Ok(png(bytes))
}
