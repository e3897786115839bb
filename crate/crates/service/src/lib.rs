//! HTTP front end for the synthesis and placement workflow. Workspaces hold
//! a config under edit; sessions walk the operator through placing one
//! stanza. State lives in memory and, given a data directory, in one JSON
//! file per workspace.

pub mod api;
pub mod store;
pub mod workspace;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::Router;
use routeplace_core::synthesizer::ScriptedFixture;
use tower_http::services::ServeDir;

pub use api::{AppState, QuestionView, SessionView};
pub use store::{Store, StoreError};
pub use workspace::Workspace;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Fixtures for the `scripted` and `faulty` plugins.
    pub fixtures: Vec<ScriptedFixture>,
    /// Endpoint for the `http` plugin.
    pub gateway: Option<String>,
    pub gateway_timeout: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { fixtures: Vec::new(), gateway: None, gateway_timeout: Duration::from_secs(60) }
    }
}

pub fn router(store: Store, config: ServiceConfig) -> Router {
    api::routes(AppState { store: Arc::new(store), config: Arc::new(config) })
}

/// The API plus static files from `ui_dir` for every other path.
pub fn router_with_ui(store: Store, config: ServiceConfig, ui_dir: Option<PathBuf>) -> Router {
    let app = router(store, config);
    match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(addr).await
}

/// Serves `app` on `listener` until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
