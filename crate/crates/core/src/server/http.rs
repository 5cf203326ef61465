use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tokio::sync::oneshot;

use super::api::{self, ApiResult};
use super::store::ArtifactStore;
use crate::error::{Error, Result};

type Shared = Arc<ArtifactStore>;
type Params = Query<HashMap<String, String>>;

fn respond(result: ApiResult) -> Response {
    let (status, body) = match result {
        Ok(v) => (StatusCode::OK, api::encode(v)),
        Err(e) => (
            StatusCode::from_u16(e.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR),
            e.body(),
        ),
    };
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn param<'a>(q: &'a HashMap<String, String>, k: &str) -> Option<&'a str> {
    q.get(k).map(String::as_str)
}

/// Routes: `GET /health`, `/days`, `/bands?day&alpha`, `/region?day&alpha`, `POST /whatif`.
pub fn router(store: Shared) -> Router {
    Router::new()
        .route("/health", get(|State(s): State<Shared>| async move { respond(Ok(api::health(&s))) }))
        .route("/days", get(|State(s): State<Shared>| async move { respond(Ok(api::days(&s))) }))
        .route(
            "/bands",
            get(|State(s): State<Shared>, Query(q): Params| async move {
                respond(api::bands(&s, param(&q, "day"), param(&q, "alpha")))
            }),
        )
        .route(
            "/region",
            get(|State(s): State<Shared>, Query(q): Params| async move {
                respond(api::region(&s, param(&q, "day"), param(&q, "alpha")))
            }),
        )
        .route(
            "/whatif",
            post(|State(s): State<Shared>, body: Bytes| async move { respond(api::whatif(&s, &body)) }),
        )
        .with_state(store)
}

/// Serves until Ctrl-C.
pub fn serve(store: ArtifactStore, bind: &str) -> Result<()> {
    let rt = tokio::runtime::Runtime::new()
        .map_err(|e| Error::Argument(format!("tokio runtime: {e}")))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| Error::io(bind, e))?;
        axum::serve(listener, router(Arc::new(store)))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Error::io(bind, e))
    })
}

/// A server on a background thread; stops when dropped.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds `bind` (port 0 picks a free port) and serves in the background.
pub fn spawn(store: ArtifactStore, bind: &str) -> Result<ServerHandle> {
    let std_listener = std::net::TcpListener::bind(bind).map_err(|e| Error::io(bind, e))?;
    std_listener
        .set_nonblocking(true)
        .map_err(|e| Error::io(bind, e))?;
    let addr = std_listener.local_addr().map_err(|e| Error::io(bind, e))?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .map_err(|e| Error::Argument(format!("tokio runtime: {e}")))?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        rt.block_on(async move {
            let listener =
                tokio::net::TcpListener::from_std(std_listener).expect("listener registers");
            let _ = axum::serve(listener, router(Arc::new(store)))
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
    });
    Ok(ServerHandle {
        addr,
        stop: Some(tx),
        thread: Some(thread),
    })
}
