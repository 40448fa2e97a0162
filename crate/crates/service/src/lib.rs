//! HTTP session service over the ARCLE environment.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/v1/sessions` | create a session and reset it |
//! | POST | `/v1/sessions/{id}/step` | apply one action |
//! | POST | `/v1/sessions/{id}/reset` | new episode on the same task |
//! | GET | `/v1/sessions/{id}/state` | current observation |
//! | GET | `/v1/sessions/{id}/trace` | recorded trace |
//! | GET | `/v1/tasks` | task summaries |

pub mod api;
pub mod catalog;
pub mod error;
pub mod session;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::http::HeaderValue;
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;
use tower_http::cors::{Any, CorsLayer};
use tracing::info;

pub use catalog::{Catalog, TaskSummary};
pub use error::ApiError;
pub use session::{Session, SessionStore};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_root: Option<PathBuf>,
    pub trace_dir: Option<PathBuf>,
    pub session_ttl: Duration,
    /// Allowed browser origin; any origin when unset.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_root: None,
            trace_dir: None,
            session_ttl: Duration::from_secs(30 * 60),
            cors_origin: None,
        }
    }
}

#[derive(Debug)]
pub struct AppState {
    pub catalog: Catalog,
    pub sessions: SessionStore,
    pub trace_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(catalog: Catalog, config: &ServiceConfig) -> Self {
        AppState {
            catalog,
            sessions: SessionStore::new(config.session_ttl),
            trace_dir: config.trace_dir.clone(),
        }
    }

    pub fn from_config(config: &ServiceConfig) -> Self {
        let catalog = match &config.data_root {
            Some(root) => Catalog::load(root),
            None => Catalog::default(),
        };
        Self::new(catalog, config)
    }
}

pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Router {
    let cors = match cors_origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(origin) => CorsLayer::new().allow_origin(origin),
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    Router::new()
        .route("/v1/sessions", post(api::create_session))
        .route("/v1/sessions/{id}/step", post(api::step))
        .route("/v1/sessions/{id}/reset", post(api::reset))
        .route("/v1/sessions/{id}/state", get(api::state))
        .route("/v1/sessions/{id}/trace", get(api::trace))
        .route("/v1/tasks", get(api::tasks))
        .layer(cors)
        .with_state(state)
}

/// Serves until the listener fails, sweeping idle sessions in the
/// background.
pub async fn serve(listener: TcpListener, config: ServiceConfig) -> std::io::Result<()> {
    let state = Arc::new(AppState::from_config(&config));
    let sweeper = state.clone();
    let period = (config.session_ttl / 2).clamp(Duration::from_secs(1), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let n = sweeper.sessions.sweep();
            if n > 0 {
                info!("expired {n} idle sessions");
            }
        }
    });
    info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state, config.cors_origin.as_deref())).await
}
