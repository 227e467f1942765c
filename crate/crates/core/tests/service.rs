//! Client contract tests against the bundled fake server.

use std::time::Duration;

use scenecomp::guidance::{DiffusionStep, Weighting};
use scenecomp::imaging::ImageBuf;
use scenecomp::metrics::FeatureExtractor;
use scenecomp::service::{FakeConfig, FakeFault, FakeServer, FakeTarget, RemoteFeatures, ServiceError};
use scenecomp::{ServiceClient, ServiceEndpoint};

fn client(url: &str, retries: u32) -> ServiceClient {
    ServiceClient::new(ServiceEndpoint {
        base_url: url.into(),
        timeout_ms: 2_000,
        retries,
        token: None,
    })
    .unwrap()
}

fn gradient_image(w: usize, h: usize) -> ImageBuf {
    let mut img = ImageBuf::new(w, h, 3);
    for y in 0..h {
        for x in 0..w {
            img.set(x, y, 0, x as f64 / (w - 1) as f64);
            img.set(x, y, 1, y as f64 / (h - 1) as f64);
            img.set(x, y, 2, 0.25);
        }
    }
    img
}

fn quantized(img: &ImageBuf) -> ImageBuf {
    ImageBuf::decode_png(&img.encode_png().unwrap()).unwrap()
}

#[test]
fn health_lists_models() {
    let server = FakeServer::start(FakeConfig {
        models: vec!["clip".into()],
        ..Default::default()
    })
    .unwrap();
    let h = client(&server.url(), 0).health().unwrap();
    assert_eq!(h.status, "ok");
    assert_eq!(h.models, vec!["clip".to_string()]);
    // unloaded model: typed 503, retried, then reported
    let err = client(&server.url(), 0).estimate_disparity(&gradient_image(4, 4)).unwrap_err();
    assert!(matches!(err, ServiceError::Transport { attempts: 1, .. }), "{err}");
}

#[test]
fn score_matches_known_value_and_caches() {
    let server = FakeServer::start(FakeConfig {
        target: FakeTarget::Constant([0.5, 0.5, 0.5]),
        ..Default::default()
    })
    .unwrap();
    let c = client(&server.url(), 0);
    let img = ImageBuf::filled(8, 8, 3, 0.2);
    let q = quantized(&img);
    let expected = 1.0 - q.data.iter().map(|v| (v - 0.5).abs()).sum::<f64>() / q.data.len() as f64;
    let s = c.score_image(&img, "a desk").unwrap();
    assert!((s - expected).abs() < 1e-12);
    let hits = server.hits();
    assert_eq!(c.score_image(&img, "a desk").unwrap(), s);
    assert_eq!(server.hits(), hits, "second call must be served from cache");
    assert_eq!(c.stats().cache_hits, 1);
    // another prompt is another key
    c.score_image(&img, "a lamp").unwrap();
    assert_eq!(server.hits(), hits + 1);
}

#[test]
fn unreachable_endpoint_makes_retries_plus_one_attempts() {
    // bind then drop to get a port nobody listens on
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let c = client(&format!("http://127.0.0.1:{port}"), 2);
    let err = c.score_image(&ImageBuf::filled(4, 4, 3, 0.1), "x").unwrap_err();
    assert!(matches!(err, ServiceError::Transport { attempts: 3, .. }), "{err}");
    assert_eq!(c.stats().attempts, 3);
}

#[test]
fn timeout_is_a_transport_error() {
    let server = FakeServer::start(FakeConfig {
        delay: Duration::from_millis(400),
        ..Default::default()
    })
    .unwrap();
    let c = ServiceClient::new(ServiceEndpoint {
        base_url: server.url(),
        timeout_ms: 50,
        retries: 1,
        token: None,
    })
    .unwrap();
    let err = c.score_image(&ImageBuf::filled(4, 4, 3, 0.1), "x").unwrap_err();
    assert!(matches!(err, ServiceError::Transport { attempts: 2, .. }), "{err}");
}

#[test]
fn disparity_echo_roundtrip() {
    let server = FakeServer::start(FakeConfig::default()).unwrap();
    let c = client(&server.url(), 0);
    let img = gradient_image(256, 256);
    let d = c.estimate_disparity(&img).unwrap();
    assert_eq!((d.width, d.height, d.channels), (256, 256, 1));
    for (a, b) in d.data.iter().zip(quantized(&img).luminance()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn faults_map_to_protocol_errors_and_are_not_cached() {
    let server = FakeServer::start(FakeConfig::default()).unwrap();
    let c = client(&server.url(), 0);
    let img = gradient_image(16, 8);
    server.set_fault(FakeFault::NonFiniteDepth);
    assert!(matches!(c.estimate_disparity(&img), Err(ServiceError::Protocol(_))));
    server.set_fault(FakeFault::WrongDepthSize);
    assert!(matches!(c.estimate_disparity(&img), Err(ServiceError::Protocol(_))));
    server.set_fault(FakeFault::Malformed);
    assert!(matches!(c.score_image(&img, "p"), Err(ServiceError::Protocol(_))));
    // failures left nothing in the cache
    server.set_fault(FakeFault::None);
    let before = server.hits();
    c.estimate_disparity(&img).unwrap();
    c.score_image(&img, "p").unwrap();
    assert_eq!(server.hits(), before + 2);
    assert_eq!(c.stats().cache_hits, 0);
}

#[test]
fn server_errors_are_retried() {
    let server = FakeServer::start(FakeConfig::default()).unwrap();
    server.set_fault(FakeFault::ServerError);
    let c = client(&server.url(), 2);
    let err = c.score_image(&ImageBuf::filled(4, 4, 3, 0.1), "x").unwrap_err();
    assert!(matches!(err, ServiceError::Transport { attempts: 3, .. }));
    assert_eq!(server.hits(), 3);
}

#[test]
fn bad_requests_are_request_errors() {
    let img = ImageBuf::filled(8, 8, 3, 0.3);
    let server = FakeServer::start(FakeConfig {
        target: FakeTarget::Image(ImageBuf::filled(4, 4, 3, 0.0)),
        ..Default::default()
    })
    .unwrap();
    let c = client(&server.url(), 3);
    match c.score_image(&img, "p") {
        Err(ServiceError::Request { status: 400, code, .. }) => assert_eq!(code, "shape_mismatch"),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(c.stats().attempts, 1, "4xx is not retried");
}

#[test]
fn features_shape_validation_and_determinism() {
    let server = FakeServer::start(FakeConfig::default()).unwrap();
    let c = client(&server.url(), 0);
    let img = gradient_image(32, 32);
    let f = c.deep_features(&img, 192).unwrap();
    assert_eq!(f.len(), 192);
    let fresh = client(&server.url(), 0);
    assert_eq!(fresh.deep_features(&img, 192).unwrap(), f);
    assert_eq!(c.deep_features(&img, 64).unwrap().len(), 64);
    let before = server.hits();
    assert!(matches!(c.deep_features(&img, 100), Err(ServiceError::Request { .. })));
    assert_eq!(server.hits(), before, "invalid layer rejected client-side");
    let remote = RemoteFeatures { client: &c, layer: 2048 };
    assert_eq!(remote.extract(&img).unwrap().len(), 2048);
}

#[test]
fn denoise_points_back_to_target() {
    let server = FakeServer::start(FakeConfig {
        target: FakeTarget::Constant([0.5; 3]),
        ..Default::default()
    })
    .unwrap();
    let c = client(&server.url(), 0);
    let noise = ImageBuf::filled(4, 2, 4, 0.3);
    let step = DiffusionStep::new(0.36, noise.clone(), &Weighting::OneMinusAlphaBar);
    // x_t built from the target itself: predicted noise equals the injected noise
    let x0 = ImageBuf::filled(4, 2, 4, 0.5);
    let x_t = step.noised(&x0);
    let eps = c.denoise(&x_t, "p", &step).unwrap();
    for (a, b) in eps.data.iter().zip(&noise.data) {
        assert!((a - b).abs() < 1e-5);
    }
}

#[test]
fn endpoint_validation() {
    assert!(ServiceClient::new(ServiceEndpoint {
        timeout_ms: 0,
        ..ServiceEndpoint::new("http://localhost:1")
    })
    .is_err());
    assert!(ServiceClient::new(ServiceEndpoint::new("ftp://x")).is_err());
    let e: ServiceEndpoint = serde_json::from_str(r#"{"base_url":"http://h:1"}"#).unwrap();
    assert_eq!((e.timeout_ms, e.retries), (30_000, 2));
}

/// Runs the read-only contract against an external service when
/// `SCENECOMP_SERVICE_URL` is set.
#[test]
fn external_service_contract() {
    let Ok(url) = std::env::var("SCENECOMP_SERVICE_URL") else {
        return;
    };
    let c = client(&url, 1);
    assert_eq!(c.health().unwrap().status, "ok");
    let img = gradient_image(64, 64);
    let a = c.score_image(&img, "a red gradient").unwrap();
    let fresh = client(&url, 1);
    assert_eq!(fresh.score_image(&img, "a red gradient").unwrap(), a);
    let d = c.estimate_disparity(&img).unwrap();
    assert_eq!((d.width, d.height), (64, 64));
    assert_eq!(c.deep_features(&img, 192).unwrap().len(), 192);
}
