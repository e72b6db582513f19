//! Minimal HTTP front end for the extractor.
//!
//! `GET /random?bytes=N` (1 <= N <= 4096) answers with N fresh bytes,
//! hex-encoded, and their generation time. `GET /health` reports the
//! buffer fill level and production rate.

pub mod buffer;
pub mod producer;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub use buffer::{ByteBuffer, Draw};
pub use producer::{spawn_producer, Producer};

pub const MAX_REQUEST_BYTES: usize = 4096;
pub const DEFAULT_BUFFER_BYTES: usize = 1 << 20;

#[derive(Debug, Deserialize)]
pub struct RandomQuery {
    pub bytes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RandomBody {
    pub bytes: usize,
    pub hex: String,
    /// RFC 3339.
    pub generated_at: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HealthBody {
    pub fill_bytes: usize,
    pub capacity_bytes: usize,
    pub throughput_bits_per_sec: f64,
    pub bytes_served: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

fn error(status: StatusCode, msg: String) -> Response {
    (status, Json(ErrorBody { error: msg })).into_response()
}

async fn random(State(buffer): State<Arc<ByteBuffer>>, Query(q): Query<RandomQuery>) -> Response {
    if !(1..=MAX_REQUEST_BYTES).contains(&q.bytes) {
        return error(
            StatusCode::BAD_REQUEST,
            format!("bytes must be between 1 and {MAX_REQUEST_BYTES}, got {}", q.bytes),
        );
    }
    match buffer.try_take(q.bytes) {
        Some(draw) => Json(RandomBody {
            bytes: draw.bytes.len(),
            hex: hex::encode(&draw.bytes),
            generated_at: draw.generated_at.to_rfc3339(),
        })
        .into_response(),
        None => error(
            StatusCode::SERVICE_UNAVAILABLE,
            format!("buffer holds {} bytes, {} requested", buffer.fill(), q.bytes),
        ),
    }
}

async fn health(State(buffer): State<Arc<ByteBuffer>>) -> Json<HealthBody> {
    Json(HealthBody {
        fill_bytes: buffer.fill(),
        capacity_bytes: buffer.capacity(),
        throughput_bits_per_sec: buffer.throughput_bits_per_sec(),
        bytes_served: buffer.bytes_served(),
    })
}

pub fn router(buffer: Arc<ByteBuffer>) -> Router {
    Router::new()
        .route("/random", get(random))
        .route("/health", get(health))
        .with_state(buffer)
}

/// Serves on `listener` until the future is dropped or the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, buffer: Arc<ByteBuffer>) -> std::io::Result<()> {
    axum::serve(listener, router(buffer)).await
}
