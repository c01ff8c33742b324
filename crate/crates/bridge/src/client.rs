use std::path::Path;
use std::thread;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use radiant_core::idu::{EditInstruction, Editor};
use radiant_core::scene::{MaskImage, RgbImage};
use radiant_core::synth::io::{decode_rgb_png, encode_mask_png, encode_rgb_png, from_u8, to_u8};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{BridgeError, Result};

/// Delay before the first retry; doubles on every further attempt.
pub const BACKOFF_BASE: Duration = Duration::from_millis(500);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemoteEndpoint {
    pub base_url: String,
    /// Per-attempt timeout in seconds.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default)]
    pub max_retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_token: Option<String>,
}

fn default_timeout() -> f64 {
    30.0
}

impl RemoteEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        RemoteEndpoint {
            base_url: base_url.into(),
            timeout: default_timeout(),
            max_retries: 0,
            auth_token: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timeout > 0.0) || !self.timeout.is_finite() {
            return Err(BridgeError::InvalidEndpoint(format!(
                "timeout must be positive, got {}",
                self.timeout
            )));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(BridgeError::InvalidEndpoint(format!(
                "{:?} is not an http(s) URL",
                self.base_url
            )));
        }
        Ok(())
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base_url.trim_end_matches('/'), path)
    }
}

/// Blocking client bound to one endpoint. Safe to share across threads.
#[derive(Clone, Debug)]
pub struct RemoteClient {
    endpoint: RemoteEndpoint,
    http: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct EditRequest<'a> {
    instruction: &'a str,
    current_png: String,
    original_png: String,
}

#[derive(Serialize)]
struct InpaintRequest {
    image_png: String,
    mask_png: String,
}

fn png_b64(img: &RgbImage) -> Result<String> {
    Ok(STANDARD.encode(encode_rgb_png(img)?))
}

fn response_image(body: &Value, key: &str) -> Result<RgbImage> {
    let encoded = body.get(key).and_then(Value::as_str).ok_or_else(|| {
        BridgeError::ProtocolViolation(format!("response has no string field {key:?}"))
    })?;
    let bytes = STANDARD
        .decode(encoded)
        .map_err(|e| BridgeError::ProtocolViolation(format!("{key}: invalid base64: {e}")))?;
    decode_rgb_png(&bytes, Path::new(key))
        .map_err(|e| BridgeError::ProtocolViolation(e.to_string()))
}

fn check_dims(got: &RgbImage, want: (u32, u32)) -> Result<()> {
    if got.dims() != want {
        return Err(BridgeError::ProtocolViolation(format!(
            "expected a {}x{} image, got {}x{}",
            want.0,
            want.1,
            got.width(),
            got.height()
        )));
    }
    Ok(())
}

impl RemoteClient {
    pub fn new(endpoint: RemoteEndpoint) -> Result<Self> {
        endpoint.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(endpoint.timeout))
            .build()
            .map_err(|e| BridgeError::InvalidEndpoint(e.to_string()))?;
        Ok(RemoteClient { endpoint, http })
    }

    pub fn endpoint(&self) -> &RemoteEndpoint {
        &self.endpoint
    }

    /// Posts `body` until a response arrives or attempts run out.
    fn post(&self, path: &str, body: Vec<u8>) -> Result<Value> {
        let url = self.endpoint.url(path);
        let attempts = self.endpoint.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(BACKOFF_BASE * 2u32.saturating_pow(attempt - 1));
            }
            let mut req = self
                .http
                .post(&url)
                .header(reqwest::header::CONTENT_TYPE, "application/json")
                .body(body.clone());
            if let Some(token) = &self.endpoint.auth_token {
                req = req.bearer_auth(token);
            }
            let resp = match req.send() {
                Ok(r) => r,
                Err(e) => {
                    last_error = e.to_string();
                    continue;
                }
            };
            let status = resp.status();
            let text = match resp.text() {
                Ok(t) => t,
                Err(e) => {
                    last_error = e.to_string();
                    continue;
                }
            };
            if status != reqwest::StatusCode::OK {
                return Err(BridgeError::RemoteRejected {
                    status: status.as_u16(),
                    body: text,
                });
            }
            return serde_json::from_str(&text)
                .map_err(|e| BridgeError::ProtocolViolation(format!("response is not JSON: {e}")));
        }
        Err(BridgeError::RemoteUnavailable {
            attempts,
            last_error,
        })
    }

    pub fn edit(
        &self,
        current: &RgbImage,
        original: &RgbImage,
        instruction: &str,
    ) -> Result<RgbImage> {
        original.ensure_dims(current.dims())?;
        let body = serde_json::to_vec(&EditRequest {
            instruction,
            current_png: png_b64(current)?,
            original_png: png_b64(original)?,
        })
        .expect("request serializes");
        let out = response_image(&self.post("/v1/edit", body)?, "edited_png")?;
        check_dims(&out, current.dims())?;
        Ok(out)
    }

    /// Inpaints the pixels where `mask` is set. Responses that change any
    /// other pixel by more than one 8-bit level are rejected.
    pub fn inpaint(&self, rgb: &RgbImage, mask: &MaskImage) -> Result<RgbImage> {
        mask.ensure_dims(rgb.dims())?;
        let body = serde_json::to_vec(&InpaintRequest {
            image_png: png_b64(rgb)?,
            mask_png: STANDARD.encode(encode_mask_png(mask)?),
        })
        .expect("request serializes");
        let out = response_image(&self.post("/v1/inpaint", body)?, "inpainted_png")?;
        check_dims(&out, rgb.dims())?;
        let tolerance = 1.0 / 255.0 + 1e-9;
        for (i, ((a, b), &m)) in rgb
            .pixels()
            .iter()
            .zip(out.pixels())
            .zip(mask.pixels())
            .enumerate()
        {
            let sent = a.map(|v| from_u8(to_u8(v)));
            if !m && (sent - b).abs().max() > tolerance {
                let w = rgb.width() as usize;
                return Err(BridgeError::ProtocolViolation(format!(
                    "inpainting changed unmasked pixel ({}, {})",
                    i % w,
                    i / w
                )));
            }
        }
        Ok(out)
    }
}

pub fn remote_edit(
    endpoint: &RemoteEndpoint,
    current: &RgbImage,
    original: &RgbImage,
    instruction: &str,
) -> Result<RgbImage> {
    RemoteClient::new(endpoint.clone())?.edit(current, original, instruction)
}

pub fn remote_inpaint(
    endpoint: &RemoteEndpoint,
    rgb: &RgbImage,
    mask: &MaskImage,
) -> Result<RgbImage> {
    RemoteClient::new(endpoint.clone())?.inpaint(rgb, mask)
}

/// [`Editor`] backed by a remote service. Failures surface as
/// [`radiant_core::Error::Remote`].
#[derive(Clone, Debug)]
pub struct RemoteEditor {
    client: RemoteClient,
}

impl RemoteEditor {
    pub fn new(endpoint: RemoteEndpoint) -> Result<Self> {
        Ok(RemoteEditor {
            client: RemoteClient::new(endpoint)?,
        })
    }
}

impl Editor for RemoteEditor {
    fn edit(
        &self,
        current: &RgbImage,
        original: &RgbImage,
        instruction: &EditInstruction,
    ) -> radiant_core::Result<RgbImage> {
        Ok(self.client.edit(current, original, &instruction.text)?)
    }
}
