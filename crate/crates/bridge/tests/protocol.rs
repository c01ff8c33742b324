use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use radiant_bridge::server::{Fault, LoopbackServer};
use radiant_bridge::{remote_edit, remote_inpaint, BridgeError, RemoteEditor, RemoteEndpoint};
use radiant_core::idu::{EditInstruction, Editor};
use radiant_core::scene::{MaskImage, RgbImage};
use radiant_core::synth::io::from_u8;
use radiant_core::Rgb;

/// An 8-bit exact test image.
fn image(w: u32, h: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |x, y| {
        Rgb::new(
            from_u8((x * 37 % 256) as u8),
            from_u8((y * 53 % 256) as u8),
            from_u8(((x + y) * 11 % 256) as u8),
        )
    })
}

fn endpoint(server: &LoopbackServer) -> RemoteEndpoint {
    RemoteEndpoint {
        timeout: 5.0,
        ..RemoteEndpoint::new(server.url())
    }
}

#[test]
fn identity_edit_is_bit_exact() {
    let server = LoopbackServer::start(0, Fault::None).unwrap();
    let img = image(17, 9);
    let out = remote_edit(
        &endpoint(&server),
        &img,
        &image(17, 9).map(|c| c * 0.0),
        "make it shiny",
    )
    .unwrap();
    assert_eq!(out, img);
}

#[test]
fn recolor_edit_follows_instruction() {
    let server = LoopbackServer::start(0, Fault::None).unwrap();
    let img = RgbImage::filled(4, 4, Rgb::new(1.0, 0.0, 0.0));
    let out = remote_edit(&endpoint(&server), &img, &img, "recolor 0 0 1 0.5").unwrap();
    for p in out.pixels() {
        assert_eq!(*p, Rgb::new(from_u8(128), 0.0, from_u8(128)));
    }
    let full = remote_edit(&endpoint(&server), &img, &img, "recolor 0 0 1 1").unwrap();
    assert!(full.pixels().iter().all(|p| *p == Rgb::new(0.0, 0.0, 1.0)));
}

#[test]
fn remote_editor_implements_editor() {
    let server = LoopbackServer::start(0, Fault::None).unwrap();
    let editor = RemoteEditor::new(endpoint(&server)).unwrap();
    let img = image(8, 8);
    let out = editor
        .edit(&img, &img, &EditInstruction::new("identity").unwrap())
        .unwrap();
    assert_eq!(out, img);
    server.set_fault(Fault::Reject(500));
    let err = editor
        .edit(&img, &img, &EditInstruction::new("identity").unwrap())
        .unwrap_err();
    assert!(matches!(err, radiant_core::Error::Remote(_)), "{err}");
}

#[test]
fn rejection_carries_status() {
    let server = LoopbackServer::start(0, Fault::Reject(400)).unwrap();
    let img = image(5, 5);
    let err = remote_edit(&endpoint(&server), &img, &img, "x").unwrap_err();
    assert!(
        matches!(err, BridgeError::RemoteRejected { status: 400, .. }),
        "{err}"
    );
    assert_eq!(server.requests().len(), 1, "rejections are not retried");
}

#[test]
fn wrong_size_is_a_protocol_violation() {
    let server = LoopbackServer::start(0, Fault::WrongSize).unwrap();
    let img = image(6, 4);
    let err = remote_edit(&endpoint(&server), &img, &img, "identity").unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, BridgeError::ProtocolViolation(_)));
    assert!(msg.contains("6x4") && msg.contains("7x4"), "{msg}");
    let mask = MaskImage::filled(6, 4, false);
    assert!(matches!(
        remote_inpaint(&endpoint(&server), &img, &mask),
        Err(BridgeError::ProtocolViolation(_))
    ));
}

#[test]
fn inpaint_mean_fill_and_echo() {
    let server = LoopbackServer::start(0, Fault::None).unwrap();
    let img = image(10, 6);
    let none = MaskImage::filled(10, 6, false);
    assert_eq!(
        remote_inpaint(&endpoint(&server), &img, &none).unwrap(),
        img
    );

    let mask = MaskImage::from_fn(10, 6, |x, y| (3..7).contains(&x) && (1..4).contains(&y));
    let out = remote_inpaint(&endpoint(&server), &img, &mask).unwrap();
    let mut sum = Rgb::zeros();
    let mut n = 0.0;
    for (p, &m) in img.pixels().iter().zip(mask.pixels()) {
        if !m {
            sum += p;
            n += 1.0;
        }
    }
    let mean = (sum / n).map(|c| from_u8((c * 255.0).round() as u8));
    for ((p, q), &m) in img.pixels().iter().zip(out.pixels()).zip(mask.pixels()) {
        assert_eq!(*q, if m { mean } else { *p });
    }
}

#[test]
fn modified_unmasked_pixels_are_rejected() {
    let server = LoopbackServer::start(0, Fault::TouchUnmasked).unwrap();
    let img = image(8, 8);
    let mask = MaskImage::from_fn(8, 8, |x, _| x > 4);
    let err = remote_inpaint(&endpoint(&server), &img, &mask).unwrap_err();
    assert!(
        matches!(&err, BridgeError::ProtocolViolation(m) if m.contains("unmasked")),
        "{err}"
    );
}

#[test]
fn unreachable_endpoint_uses_every_attempt_with_backoff() {
    // A listener that accepts and immediately closes every connection.
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let accepted = Arc::new(AtomicUsize::new(0));
    {
        let accepted = accepted.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                accepted.fetch_add(1, Ordering::SeqCst);
                drop(stream);
            }
        });
    }
    let ep = RemoteEndpoint {
        max_retries: 2,
        timeout: 2.0,
        ..RemoteEndpoint::new(url)
    };
    let img = image(3, 3);
    let start = Instant::now();
    let err = remote_edit(&ep, &img, &img, "identity").unwrap_err();
    let elapsed = start.elapsed();
    assert!(
        matches!(err, BridgeError::RemoteUnavailable { attempts: 3, .. }),
        "{err}"
    );
    assert_eq!(accepted.load(Ordering::SeqCst), 3);
    // Backoff of 0.5 s then 1 s.
    assert!(elapsed >= Duration::from_millis(1500), "{elapsed:?}");
    assert!(elapsed < Duration::from_millis(4000), "{elapsed:?}");

    // Nothing listening at all.
    let closed = TcpListener::bind("127.0.0.1:0").unwrap();
    let dead = format!("http://{}", closed.local_addr().unwrap());
    drop(closed);
    let ep = RemoteEndpoint {
        max_retries: 1,
        ..RemoteEndpoint::new(dead)
    };
    assert!(matches!(
        remote_edit(&ep, &img, &img, "identity"),
        Err(BridgeError::RemoteUnavailable { attempts: 2, .. })
    ));
}

#[test]
fn retries_resend_identical_bytes_and_auth() {
    let server = LoopbackServer::start(
        0,
        Fault::Stall {
            count: 2,
            delay: Duration::from_millis(1500),
        },
    )
    .unwrap();
    let ep = RemoteEndpoint {
        timeout: 0.5,
        max_retries: 2,
        auth_token: Some("s3cret".into()),
        ..RemoteEndpoint::new(server.url())
    };
    let img = image(12, 7);
    let out = remote_edit(&ep, &img, &img, "identity").unwrap();
    assert_eq!(out, img);
    let reqs = server.requests();
    assert_eq!(reqs.len(), 3);
    for r in &reqs {
        assert_eq!(r.body, reqs[0].body);
        assert_eq!(r.path, "/v1/edit");
        assert_eq!(r.authorization.as_deref(), Some("Bearer s3cret"));
    }
    let body: serde_json::Value = serde_json::from_slice(&reqs[0].body).unwrap();
    assert_eq!(body["instruction"], "identity");
    assert!(body["current_png"].is_string() && body["original_png"].is_string());
}

#[test]
fn invalid_endpoints_are_rejected() {
    let img = image(2, 2);
    let ep = RemoteEndpoint {
        timeout: 0.0,
        ..RemoteEndpoint::new("http://127.0.0.1:1")
    };
    assert!(matches!(
        remote_edit(&ep, &img, &img, "x"),
        Err(BridgeError::InvalidEndpoint(_))
    ));
    assert!(matches!(
        remote_edit(&RemoteEndpoint::new("ftp://x"), &img, &img, "x"),
        Err(BridgeError::InvalidEndpoint(_))
    ));
    let server = LoopbackServer::start(0, Fault::None).unwrap();
    let err = remote_edit(&endpoint(&server), &img, &image(3, 2), "x").unwrap_err();
    assert!(matches!(
        err,
        BridgeError::Core(radiant_core::Error::DimensionMismatch { .. })
    ));
    assert!(server.requests().is_empty());
}
