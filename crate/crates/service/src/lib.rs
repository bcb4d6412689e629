//! HTTP front end for chainstamp: hash submission, status and proof
//! export, bulk stamping, the announcement log, and the scheduler that
//! commits each window.

pub mod announce;
pub mod api;
pub mod config;
pub mod scheduler;
pub mod state;

use std::future::Future;
use std::sync::Arc;

pub use api::router;
pub use config::ServiceConfig;
pub use state::{AppState, Clock, ManualClock, SharedState, StartupError, SystemClock};

/// Binds, starts the scheduler and serves until `shutdown` resolves.
pub async fn serve(
    config: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), StartupError> {
    let addr = config.bind_addr()?;
    let state = AppState::open(config, Arc::new(SystemClock))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(StartupError::Bind)?;
    tracing::info!(
        "listening on http://{}",
        listener.local_addr().map_err(StartupError::Bind)?
    );
    let scheduler = tokio::spawn(scheduler::run(state.clone()));
    let result = axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(StartupError::Bind);
    scheduler.abort();
    result
}
