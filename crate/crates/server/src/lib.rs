//! HTTP/JSON front end over a single in-memory store.
//!
//! Every handler runs its store work on the blocking pool; the store itself
//! serializes writers, so handlers only take the state lock long enough to
//! clone the current store handle.

mod error;
mod ops;

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tokio::net::TcpListener;

use kapps_core::flexconveyor::SimConfig;
use kapps_core::middleware::Discovered;
use kapps_core::store::{Store, StoreError};
use kapps_core::timeseries::TsStore;
use kapps_core::wire::*;

pub use error::ApiError;

/// Shared service state. `/simulate` swaps in the store the simulation ran
/// against, so later queries and history calls inspect that run.
pub struct AppState {
    store: RwLock<Arc<Store>>,
    ts: Arc<TsStore>,
}

impl AppState {
    /// A gated store with the bundled ontologies and shapes loaded.
    pub fn bootstrap() -> Result<Self, StoreError> {
        Ok(Self::with_store(kapps_core::fixtures::bootstrap_store()?))
    }

    pub fn with_store(store: Store) -> Self {
        Self {
            store: RwLock::new(Arc::new(store)),
            ts: Arc::new(TsStore::in_memory()),
        }
    }

    pub fn store(&self) -> Arc<Store> {
        self.store.read().expect("store lock").clone()
    }

    fn replace_store(&self, store: Arc<Store>) {
        *self.store.write().expect("store lock") = store;
    }
}

type Shared = Arc<AppState>;
type ApiResult<T> = Result<Json<T>, ApiError>;

async fn blocking<T, F>(state: Shared, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&AppState) -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .map_err(|e| ApiError::runtime(format!("worker failed: {e}")))?
        .map(Json)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/status", get(status))
        .route("/graphs/load", post(load))
        .route("/query", post(query))
        .route("/validate", post(validate))
        .route("/history", get(history_list))
        .route("/history/at/{when}", get(history_at))
        .route("/history/diff", get(history_diff))
        .route("/dump", get(dump))
        .route("/simulate", post(simulate))
        .route("/uc1/run", post(uc1_run))
        .route("/uc1/trace", post(uc1_trace))
        .route("/discover", get(discover))
        .with_state(state)
}

async fn status(State(s): State<Shared>) -> ApiResult<StatusResponse> {
    blocking(s, |s| Ok(ops::status(&s.store()))).await
}

async fn load(State(s): State<Shared>, Json(req): Json<LoadRequest>) -> ApiResult<LoadResponse> {
    blocking(s, move |s| ops::load(&s.store(), &req)).await
}

async fn query(State(s): State<Shared>, Json(req): Json<QueryRequest>) -> ApiResult<QueryResponse> {
    blocking(s, move |s| ops::query(&s.store(), &req)).await
}

async fn validate(State(s): State<Shared>, Json(req): Json<ValidateRequest>) -> ApiResult<ValidateResponse> {
    blocking(s, move |s| ops::validate(&s.store(), &req)).await
}

async fn history_list(State(s): State<Shared>) -> ApiResult<HistoryListResponse> {
    blocking(s, |s| Ok(ops::history_list(&s.store()))).await
}

async fn history_at(State(s): State<Shared>, Path(when): Path<String>) -> ApiResult<DumpResponse> {
    blocking(s, move |s| ops::history_at(&s.store(), &when)).await
}

#[derive(Debug, Deserialize)]
struct DiffParams {
    from: String,
    to: Option<String>,
}

async fn history_diff(State(s): State<Shared>, Query(p): Query<DiffParams>) -> ApiResult<DiffResponse> {
    blocking(s, move |s| ops::history_diff(&s.store(), &p.from, p.to.as_deref())).await
}

async fn dump(State(s): State<Shared>) -> ApiResult<DumpResponse> {
    blocking(s, |s| Ok(ops::dump(&s.store()))).await
}

async fn simulate(State(s): State<Shared>, Json(cfg): Json<SimConfig>) -> ApiResult<SimulateResponse> {
    blocking(s, move |s| {
        let (resp, store) = ops::simulate(&cfg)?;
        s.replace_store(store);
        Ok(resp)
    })
    .await
}

async fn uc1_run(State(s): State<Shared>, Json(req): Json<Uc1RunRequest>) -> ApiResult<Uc1RunResponse> {
    blocking(s, move |s| ops::uc1_run(s.store(), s.ts.clone(), &req)).await
}

async fn uc1_trace(State(s): State<Shared>, Json(req): Json<TraceRequest>) -> ApiResult<TraceResponse> {
    blocking(s, move |s| ops::uc1_trace(&s.store(), &req)).await
}

#[derive(Debug, Deserialize)]
struct DiscoverParams {
    class: Option<String>,
}

async fn discover(State(s): State<Shared>, Query(p): Query<DiscoverParams>) -> ApiResult<Vec<Discovered>> {
    blocking(s, move |s| ops::discover(&s.store(), p.class.as_deref())).await
}

/// Serves until the process is stopped.
pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Binds `addr` (port 0 for an ephemeral port), starts serving on a
/// background task and returns the bound address.
pub async fn spawn(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(e) = serve(listener, state).await {
            tracing::error!("server stopped: {e}");
        }
    });
    Ok(local)
}
