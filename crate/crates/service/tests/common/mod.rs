#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;

use drivesim::core::demo::demo_bank;
use drivesim::server::{router, AppState, ServerConfig, SharedRenderer};

pub const MIXED: &str = "Remove all cars in the scene and add a Porsche driving the wrong way toward me fast. \
Additionally, add a police car also driving the wrong way and chasing behind the Porsche. \
The view should be moved 5 meters ahead and 0.5 meters above.";

/// Serves `app` on an ephemeral loopback port.
pub async fn spawn(app: axum::Router) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

pub async fn spawn_service(renderer: SharedRenderer) -> SocketAddr {
    spawn(router(AppState::new(ServerConfig { bank: demo_bank(), renderer }))).await
}

pub fn fixture(name: &str) -> serde_json::Value {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

pub fn shared<R: drivesim::core::render::FrameRenderer + Send + Sync + 'static>(r: R) -> SharedRenderer {
    Arc::new(r)
}
