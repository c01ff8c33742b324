//! Loopback reference server for the editing protocol.
//!
//! `/v1/edit` handles the instruction `recolor r g b lambda` and treats
//! anything else as identity. `/v1/inpaint` fills masked pixels with the mean
//! of the unmasked ones. [`Fault`] injects protocol errors for testing
//! clients.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use radiant_core::idu::EditorKind;
use radiant_core::scene::RgbImage;
use radiant_core::synth::io::{decode_mask_png, decode_rgb_png, encode_rgb_png};
use radiant_core::Rgb;
use serde_json::{json, Value};
use tiny_http::{Header, Request, Response, Server};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Answer every request with this status.
    Reject(u16),
    /// Return an image one pixel wider than the input.
    WrongSize,
    /// Inpainting also shifts one unmasked pixel by 0.2.
    TouchUnmasked,
    /// Sleep before answering the first `count` requests.
    Stall { count: usize, delay: Duration },
}

/// One request as received.
#[derive(Clone, Debug, PartialEq)]
pub struct Recorded {
    pub path: String,
    pub authorization: Option<String>,
    pub body: Vec<u8>,
}

#[derive(Default)]
struct State {
    fault: Fault,
    log: Vec<Recorded>,
}

pub struct LoopbackServer {
    server: Arc<Server>,
    state: Arc<Mutex<State>>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl LoopbackServer {
    /// Binds 127.0.0.1 on `port`; 0 picks a free port.
    pub fn start(port: u16, fault: Fault) -> std::io::Result<Self> {
        let server = Server::http(("127.0.0.1", port)).map_err(std::io::Error::other)?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("server is not bound to an IP address"))?;
        let server = Arc::new(server);
        let state = Arc::new(Mutex::new(State {
            fault,
            log: Vec::new(),
        }));
        let worker = {
            let (server, state) = (server.clone(), state.clone());
            thread::spawn(move || {
                for req in server.incoming_requests() {
                    let state = state.clone();
                    thread::spawn(move || handle(req, &state));
                }
            })
        };
        Ok(LoopbackServer {
            server,
            state,
            addr,
            worker: Some(worker),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests(&self) -> Vec<Recorded> {
        self.state.lock().unwrap().log.clone()
    }

    pub fn set_fault(&self, fault: Fault) {
        self.state.lock().unwrap().fault = fault;
    }

    /// Blocks until the server is shut down by another thread.
    pub fn wait(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for LoopbackServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn json_response(status: u16, body: &Value) -> Response<std::io::Cursor<Vec<u8>>> {
    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
    Response::from_data(serde_json::to_vec(body).expect("json"))
        .with_status_code(status)
        .with_header(header)
}

fn handle(mut req: Request, state: &Mutex<State>) {
    let mut body = Vec::new();
    if req.as_reader().read_to_end(&mut body).is_err() {
        let _ = req.respond(json_response(400, &json!({"error": "unreadable body"})));
        return;
    }
    let authorization = req
        .headers()
        .iter()
        .find(|h| h.field.equiv("Authorization"))
        .map(|h| h.value.to_string());
    let path = req.url().to_string();
    let (fault, index) = {
        let mut s = state.lock().unwrap();
        s.log.push(Recorded {
            path: path.clone(),
            authorization,
            body: body.clone(),
        });
        (s.fault, s.log.len() - 1)
    };
    if let Fault::Stall { count, delay } = fault {
        if index < count {
            thread::sleep(delay);
        }
    }
    if let Fault::Reject(status) = fault {
        let _ = req.respond(json_response(
            status,
            &json!({"error": "rejected by test fault"}),
        ));
        return;
    }
    let result = match (req.method(), path.as_str()) {
        (tiny_http::Method::Post, "/v1/edit") => edit(&body, fault),
        (tiny_http::Method::Post, "/v1/inpaint") => inpaint(&body, fault),
        _ => Err((404, format!("no route for {path}"))),
    };
    let _ = match result {
        Ok(v) => req.respond(json_response(200, &v)),
        Err((status, msg)) => req.respond(json_response(status, &json!({ "error": msg }))),
    };
}

type Handled = Result<Value, (u16, String)>;

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a str, (u16, String)> {
    v.get(key)
        .and_then(Value::as_str)
        .ok_or((400, format!("missing field {key}")))
}

fn image_field(v: &Value, key: &str) -> Result<(Vec<u8>, RgbImage), (u16, String)> {
    let bytes = STANDARD
        .decode(field(v, key)?)
        .map_err(|e| (400, format!("{key}: {e}")))?;
    let img = decode_rgb_png(&bytes, Path::new(key)).map_err(|e| (400, e.to_string()))?;
    Ok((bytes, img))
}

fn encode(img: &RgbImage) -> Result<String, (u16, String)> {
    Ok(STANDARD.encode(encode_rgb_png(img).map_err(|e| (500, e.to_string()))?))
}

fn widen(img: &RgbImage) -> RgbImage {
    RgbImage::from_fn(img.width() + 1, img.height(), |x, y| {
        *img.get(x.min(img.width() - 1), y)
    })
}

fn parse_recolor(instruction: &str) -> Result<Option<(Rgb, f64)>, (u16, String)> {
    let mut words = instruction.split_whitespace();
    if words.next() != Some("recolor") {
        return Ok(None);
    }
    let nums: Vec<f64> = words
        .map(|w| w.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| (400, format!("recolor arguments: {e}")))?;
    let [r, g, b, lambda] = nums[..] else {
        return Err((400, "usage: recolor r g b lambda".into()));
    };
    let target = Rgb::new(r, g, b);
    EditorKind::Recolor { target, lambda }
        .validate()
        .map_err(|e| (400, e.to_string()))?;
    Ok(Some((target, lambda)))
}

fn edit(body: &[u8], fault: Fault) -> Handled {
    let v: Value = serde_json::from_slice(body).map_err(|e| (400, e.to_string()))?;
    let instruction = field(&v, "instruction")?;
    let (current_bytes, current) = image_field(&v, "current_png")?;
    let (_, original) = image_field(&v, "original_png")?;
    if original.dims() != current.dims() {
        return Err((400, "current and original differ in size".into()));
    }
    let out = match parse_recolor(instruction)? {
        Some((target, lambda)) => encode(&current.map(|c| c + (target - c) * lambda))?,
        None if fault == Fault::WrongSize => encode(&widen(&current))?,
        None => STANDARD.encode(current_bytes),
    };
    Ok(json!({ "edited_png": out }))
}

fn inpaint(body: &[u8], fault: Fault) -> Handled {
    let v: Value = serde_json::from_slice(body).map_err(|e| (400, e.to_string()))?;
    let (_, img) = image_field(&v, "image_png")?;
    let mask_bytes = STANDARD
        .decode(field(&v, "mask_png")?)
        .map_err(|e| (400, format!("mask_png: {e}")))?;
    let mask =
        decode_mask_png(&mask_bytes, Path::new("mask_png")).map_err(|e| (400, e.to_string()))?;
    if mask.dims() != img.dims() {
        return Err((400, "image and mask differ in size".into()));
    }
    let (sum, n) = img
        .pixels()
        .iter()
        .zip(mask.pixels())
        .filter(|(_, &m)| !m)
        .fold((Rgb::zeros(), 0usize), |(s, n), (c, _)| (s + c, n + 1));
    let mean = if n > 0 { sum / n as f64 } else { Rgb::zeros() };
    let mut out = RgbImage::from_fn(img.width(), img.height(), |x, y| {
        if *mask.get(x, y) {
            mean
        } else {
            *img.get(x, y)
        }
    });
    match fault {
        Fault::WrongSize => out = widen(&out),
        Fault::TouchUnmasked => {
            if let Some(i) = mask.pixels().iter().position(|&m| !m) {
                let p = &mut out.pixels_mut()[i];
                *p = p.map(|c| if c > 0.5 { c - 0.2 } else { c + 0.2 });
            }
        }
        _ => {}
    }
    Ok(json!({ "inpainted_png": encode(&out)? }))
}
