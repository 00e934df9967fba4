//! HTTP front end for interactive tuning: session uploads, stage previews,
//! motion sweeps, background searches and preset listing.
//!
//! | Method | Path | Body / result |
//! |---|---|---|
//! | POST | `/sessions` | PNG (`?step=`), `.lab`, or JSON; 201 `{id, ...}` |
//! | GET | `/sessions/{id}/preview` | PNG; `?upto=k&view=true` |
//! | GET | `/sessions/{id}/sweep` | JSON grid; `?L=0..20&theta=0..175&gamma=2.25` |
//! | PUT / GET | `/sessions/{id}/pipeline` | pipeline text |
//! | POST | `/sessions/{id}/pipeline/stages` | stage lines to append |
//! | POST | `/sessions/{id}/search` | JSON config; 202 `{run_id}` |
//! | GET | `/runs/{id}` | `{status, trace, spec}` |
//! | GET | `/presets`, `/presets/{name}` | names / pipeline text |
//!
//! Errors are JSON `{error, field?}`: 404 unknown session, run or preset;
//! 400 malformed input; 422 a parameter out of range, naming the field.

mod error;
mod routes;
mod state;

use std::net::SocketAddr;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;

pub use error::{ApiError, ApiResult};
pub use routes::{parse_axis, SearchRequest, DEFAULT_THUMB, MAX_SWEEP_CELLS};
pub use state::{
    AppState, RunState, RunStatus, ServiceConfig, Session, DEFAULT_MAX_UPLOAD, DEFAULT_PORT, DEFAULT_TTL,
};

pub fn router(state: AppState) -> Router {
    let limit = state.config.max_upload;
    Router::new()
        .route("/sessions", post(routes::create_session))
        .route("/sessions/{id}/preview", get(routes::preview))
        .route("/sessions/{id}/sweep", get(routes::sweep_grid))
        .route("/sessions/{id}/pipeline", get(routes::get_pipeline).put(routes::put_pipeline))
        .route("/sessions/{id}/pipeline/stages", post(routes::append_stages))
        .route("/sessions/{id}/search", post(routes::start_search))
        .route("/runs/{id}", get(routes::get_run))
        .route("/presets", get(routes::list_presets))
        .route("/presets/{name}", get(routes::get_preset))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Binds `0.0.0.0:port` and serves until the process exits. Expired
/// sessions are swept once per TTL (at most once a minute).
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let state = AppState::new(config);
    let reaper = state.clone();
    let period = reaper.config.ttl.clamp(std::time::Duration::from_secs(1), std::time::Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            reaper.purge_expired();
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
