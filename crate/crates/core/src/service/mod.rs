//! HTTP and WebSocket front end.
//!
//! Each session owns a robot, its requested joints and a virtual controller.
//! Joint updates are turned into G-code, run through the controller, and
//! broadcast as [`StateEvent`]s on `/robots/{id}/events`.

mod error;
mod handlers;
mod openapi;
mod session;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::routing::{get, patch, post};
use axum::Router;

pub use error::ApiError;
pub use handlers::{decode_event, AppState, CLOSE_UNKNOWN_SESSION, MAX_ACCURACY_TRIALS};
pub use openapi::document as openapi_document;
pub use session::{Backbone, ControllerView, Session, SessionStore, SessionView, StateEvent, SERVICE_FEED};

pub const DEFAULT_HOST: &str = "127.0.0.1";
pub const DEFAULT_PORT: u16 = 8642;
pub const DEFAULT_BACKBONE_DS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Sampling step of the backbone pushed with every event (mm).
    pub backbone_ds: f64,
    pub snapshot: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: DEFAULT_HOST.to_owned(),
            port: DEFAULT_PORT,
            backbone_ds: DEFAULT_BACKBONE_DS,
            snapshot: None,
        }
    }
}

impl ServiceConfig {
    /// Defaults overridden by `CTR_HOST`, `CTR_PORT` and `CTR_SNAPSHOT`.
    pub fn from_env() -> Result<Self, String> {
        let mut config = Self::default();
        if let Ok(host) = std::env::var("CTR_HOST") {
            config.host = host;
        }
        if let Ok(port) = std::env::var("CTR_PORT") {
            config.port = port
                .parse()
                .map_err(|_| format!("CTR_PORT must be a port number, got `{port}`"))?;
        }
        if let Ok(path) = std::env::var("CTR_SNAPSHOT") {
            config.snapshot = Some(PathBuf::from(path));
        }
        Ok(config)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(handlers::healthz))
        .route("/spec", get(handlers::openapi))
        .route("/robots", post(handlers::create_robot).get(handlers::list_robots))
        .route("/robots/{id}", get(handlers::get_robot).delete(handlers::delete_robot))
        .route("/robots/{id}/joints", patch(handlers::patch_joints))
        .route("/robots/{id}/fk", post(handlers::fk))
        .route("/robots/{id}/backbone", get(handlers::backbone))
        .route("/robots/{id}/experiments/{kind}", post(handlers::experiment))
        .route("/robots/{id}/events", get(handlers::events))
        .with_state(state)
}

/// Builds the session store, restoring the snapshot when configured.
pub fn app_state(config: &ServiceConfig) -> std::io::Result<AppState> {
    if !config.backbone_ds.is_finite() || config.backbone_ds <= 0.0 {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "backbone sampling step must be positive",
        ));
    }
    let store = SessionStore::new(config.backbone_ds, config.snapshot.clone());
    let restored = store.restore()?;
    if restored > 0 {
        log::info!("restored {restored} sessions from snapshot");
    }
    Ok(Arc::new(store))
}

/// Serves on an already bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Binds `config.host:config.port` and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let state = app_state(&config)?;
    let listener = tokio::net::TcpListener::bind((config.host.as_str(), config.port)).await?;
    let addr: SocketAddr = listener.local_addr()?;
    log::info!("listening on http://{addr}");
    eprintln!("ctr service listening on http://{addr}");
    serve_on(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
