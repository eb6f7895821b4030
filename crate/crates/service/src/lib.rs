//! HTTP session service: upload an image, decompose it, tune layer weights
//! and fetch 8-bit previews.
//!
//! | method | path | result |
//! |---|---|---|
//! | POST | `/api/sessions` | raw PNG or PFM body, `201 {session_id, width, height, channels}` |
//! | GET | `/api/sessions/{id}` | session summary |
//! | POST | `/api/sessions/{id}/decompose` | `{radii, epsilon, color_mode}` to `{levels, stats, timing_ms}` |
//! | POST | `/api/sessions/{id}/recompose` | `{weights, base_weight}` to PNG preview |
//! | GET | `/api/sessions/{id}/layers/{k}` | detail layer `k` (1-based) plus 0.5, as PNG |
//! | GET | `/api/sessions/{id}/base` | base layer PNG |
//! | DELETE | `/api/sessions/{id}` | `204` |
//!
//! Errors are JSON `{error, code}`.

mod api;
pub mod sessions;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::DefaultBodyLimit;
use axum::http::HeaderValue;
use axum::routing::{get, post};
use axum::Router;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

pub use api::{
    DecomposeRequest, DecomposeResponse, Epsilons, LevelStats, RecomposeRequest, SessionInfo,
};
use sessions::SessionStore;

#[derive(Clone, Debug)]
pub struct Config {
    /// Largest accepted `width * height`.
    pub max_image_pixels: usize,
    pub session_ttl: Duration,
    pub max_sessions: usize,
    /// `None` allows any origin.
    pub cors_origin: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            max_image_pixels: 4096 * 4096,
            session_ttl: Duration::from_secs(30 * 60),
            max_sessions: 32,
            cors_origin: None,
        }
    }
}

impl Config {
    /// Request body cap: an RGB float PFM at the pixel limit plus header
    /// slack.
    pub fn max_body_bytes(&self) -> usize {
        self.max_image_pixels
            .saturating_mul(12)
            .saturating_add(64 * 1024)
    }
}

#[derive(Clone)]
pub struct AppState {
    pub(crate) sessions: Arc<SessionStore>,
    pub(crate) config: Arc<Config>,
}

impl AppState {
    pub fn new(config: Config) -> Self {
        Self {
            sessions: Arc::new(SessionStore::new(config.session_ttl, config.max_sessions)),
            config: Arc::new(config),
        }
    }

    pub fn sessions(&self) -> &SessionStore {
        &self.sessions
    }
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    let cors = match state
        .config
        .cors_origin
        .as_deref()
        .map(HeaderValue::from_str)
    {
        Some(Ok(origin)) => cors.allow_origin(AllowOrigin::exact(origin)),
        _ => cors.allow_origin(Any),
    };
    let limit = state.config.max_body_bytes();
    Router::new()
        .route("/api/sessions", post(api::create_session))
        .route(
            "/api/sessions/{id}",
            get(api::session_info).delete(api::delete_session),
        )
        .route("/api/sessions/{id}/decompose", post(api::decompose))
        .route("/api/sessions/{id}/recompose", post(api::recompose))
        .route("/api/sessions/{id}/layers/{k}", get(api::layer))
        .route("/api/sessions/{id}/base", get(api::base))
        .layer(DefaultBodyLimit::max(limit))
        .layer(cors)
        .with_state(state)
}

/// Serves until Ctrl-C or SIGTERM.
pub async fn serve(listener: tokio::net::TcpListener, config: Config) -> std::io::Result<()> {
    let state = AppState::new(config);
    let sweeper = {
        let sessions = state.sessions.clone();
        let period = (state.config.session_ttl / 2).max(Duration::from_secs(1));
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                sessions.sweep();
            }
        })
    };
    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown_signal())
        .await;
    sweeper.abort();
    result
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(addr).await
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}
