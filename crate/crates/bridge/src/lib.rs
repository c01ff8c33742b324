//! Lets an external process act as the 2D editor or the inpainter.
//!
//! Protocol: JSON over HTTP with images as base64-encoded 8-bit PNG.
//!
//! ```text
//! POST /v1/edit     {instruction, current_png, original_png} -> {edited_png}
//! POST /v1/inpaint  {image_png, mask_png}                    -> {inpainted_png}
//! ```
//!
//! An optional bearer token is sent as `Authorization: Bearer <token>`.
//! Transport failures are retried with exponential backoff; every attempt
//! sends the same request bytes.

mod client;
pub mod server;

pub use client::{
    remote_edit, remote_inpaint, RemoteClient, RemoteEditor, RemoteEndpoint, BACKOFF_BASE,
};

use radiant_core::Error as CoreError;

pub type Result<T, E = BridgeError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum BridgeError {
    #[error("remote rejected the request with HTTP {status}: {body}")]
    RemoteRejected { status: u16, body: String },
    #[error("remote unavailable after {attempts} attempts: {last_error}")]
    RemoteUnavailable { attempts: u32, last_error: String },
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl From<BridgeError> for CoreError {
    fn from(e: BridgeError) -> Self {
        match e {
            BridgeError::Core(inner) => inner,
            other => CoreError::Remote(other.to_string()),
        }
    }
}
