//! HTTP service over the knowledge base: the labeling session used by the
//! web UI plus every pipeline operation under `/api/ops`.

mod error;
mod extract;
mod labeling;
mod ops;
mod state;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;

pub use error::{ApiError, ApiResult};
pub use state::{load_corpus, load_kb, load_weights, AppState, StartupError, StateBuilder};

const BODY_LIMIT: usize = 512 * 1024 * 1024;

/// Runs blocking work off the async runtime.
pub(crate) async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await?
}

pub fn router(state: AppState) -> Router {
    let ops = Router::new()
        .route("/validate", post(ops::validate_spec))
        .route("/features", post(ops::features))
        .route("/cost", post(ops::cost))
        .route("/enumerate", post(ops::enumerate))
        .route("/augment/primitive", post(ops::augment_primitive))
        .route("/augment/feature", post(ops::augment_feature))
        .route("/augment/seed", post(ops::augment_seed))
        .route("/coverage", post(ops::coverage))
        .route("/deps", post(ops::deps))
        .route("/label/classify", post(ops::classify))
        .route("/label/llm", post(ops::llm))
        .route("/labels/import", post(ops::import_labels))
        .route("/labels/export", get(ops::export_labels))
        .route("/train", post(ops::train))
        .route("/cv", post(ops::cv))
        .route("/eval", post(ops::eval))
        .route("/report/shift", post(ops::shift))
        .route("/report/cosine", post(ops::cosine));
    Router::new()
        .route("/api/health", get(|| async { "ok" }))
        .route("/api/session", get(labeling::get_session))
        .route("/api/session/next", get(labeling::next_pair))
        .route("/api/session/label", post(labeling::post_label))
        .route("/api/pairs/{id}", get(labeling::get_pair))
        .route("/api/report/accuracy", get(labeling::accuracy_report))
        .nest("/api/ops", ops)
        .fallback(|| async { ApiError::not_found("no such route") })
        // corpora travel in request bodies
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Serves until the listener fails or the process receives Ctrl-C.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
