//! REST front end for the annotation link graph.
//!
//! [`spawn`] runs the server on a background thread (tests, embedding);
//! [`run`] serves in the foreground until Ctrl-C. Both compact the store on
//! the way out.

use std::future::Future;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread::JoinHandle;

use tokio::sync::oneshot;
use xannot_core::{Annotator, Store};

pub mod api;
pub mod client;
pub mod error;

pub use api::{router, API_BASE};
pub use client::{Client, ClientError};
pub use error::{ApiError, ErrorBody};

pub const DEFAULT_PORT: u16 = 7341;

#[derive(Debug, Clone)]
pub struct Config {
    pub host: IpAddr,
    pub port: u16,
    /// Store file; `None` keeps everything in memory.
    pub store: Option<PathBuf>,
    /// Unlinked selectors at least this old are removed at startup.
    pub orphan_grace_ms: i64,
}

impl Default for Config {
    fn default() -> Self {
        Config { host: IpAddr::V4(Ipv4Addr::LOCALHOST), port: DEFAULT_PORT, store: None, orphan_grace_ms: 0 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] xannot_core::Error),
    #[error("server failed: {0}")]
    Server(std::io::Error),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::BindFailure { .. } => "BindFailure",
            ServiceError::Core(e) => e.code(),
            ServiceError::Server(_) => "IoFailure",
        }
    }
}

/// Opens the configured store and clears stale unlinked selectors.
pub fn open_annotator(config: &Config) -> Result<Annotator, ServiceError> {
    let store = match &config.store {
        Some(path) => Store::open(path)?,
        None => Store::in_memory(),
    };
    let annotator = Annotator::new(store);
    prepare(&annotator, config.orphan_grace_ms)?;
    Ok(annotator)
}

fn prepare(annotator: &Annotator, grace_ms: i64) -> Result<(), ServiceError> {
    let swept = annotator.sweep_orphans(grace_ms)?;
    if !swept.is_empty() {
        tracing::info!(count = swept.len(), "removed unlinked selectors");
    }
    Ok(())
}

fn bind(addr: SocketAddr) -> Result<std::net::TcpListener, ServiceError> {
    let listener = std::net::TcpListener::bind(addr).map_err(|source| ServiceError::BindFailure { addr, source })?;
    listener.set_nonblocking(true).map_err(|source| ServiceError::BindFailure { addr, source })?;
    Ok(listener)
}

async fn serve_until(
    listener: std::net::TcpListener,
    annotator: Arc<Annotator>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::from_std(listener).map_err(ServiceError::Server)?;
    tracing::info!(addr = %listener.local_addr().map_err(ServiceError::Server)?, "serving");
    axum::serve(listener, router(annotator.clone()))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(ServiceError::Server)?;
    tracing::info!("shutting down");
    annotator.store().compact()?;
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime, ServiceError> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(ServiceError::Server)
}

/// A server running on its own thread. Dropping it shuts the server down.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<Result<(), ServiceError>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// `http://host:port/api/v1`
    pub fn base_url(&self) -> String {
        format!("http://{}{}", self.addr, API_BASE)
    }

    /// Stops accepting requests, finishes in-flight ones, compacts the store
    /// and releases it.
    pub fn shutdown(mut self) -> Result<(), ServiceError> {
        self.stop_and_join()
    }

    fn stop_and_join(&mut self) -> Result<(), ServiceError> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        match self.thread.take() {
            Some(t) => {
                t.join().unwrap_or_else(|_| Err(ServiceError::Server(std::io::Error::other("server thread panicked"))))
            }
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Err(e) = self.stop_and_join() {
            tracing::warn!(error = %e, "server shutdown failed");
        }
    }
}

/// Serves `annotator` on `addr` (port 0 picks a free port) in a background
/// thread.
pub fn spawn(annotator: Annotator, addr: SocketAddr) -> Result<ServerHandle, ServiceError> {
    let listener = bind(addr)?;
    let addr = listener.local_addr().map_err(ServiceError::Server)?;
    let rt = runtime()?;
    let (stop, stopped) = oneshot::channel::<()>();
    let annotator = Arc::new(annotator);
    let thread = std::thread::Builder::new()
        .name("xannot-server".into())
        .spawn(move || {
            rt.block_on(serve_until(listener, annotator, async {
                let _ = stopped.await;
            }))
        })
        .map_err(ServiceError::Server)?;
    Ok(ServerHandle { addr, stop: Some(stop), thread: Some(thread) })
}

/// Opens the store, binds, and serves until Ctrl-C.
pub fn run(config: &Config) -> Result<(), ServiceError> {
    let annotator = open_annotator(config)?;
    let listener = bind(SocketAddr::new(config.host, config.port))?;
    runtime()?.block_on(serve_until(listener, Arc::new(annotator), async {
        let _ = tokio::signal::ctrl_c().await;
    }))
}
