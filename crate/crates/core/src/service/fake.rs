//! In-process HTTP server speaking the scoring protocol with cheap,
//! deterministic stand-ins for the learned models.
//!
//! * `/clip_score`: `1 - mean|image - target|`.
//! * `/depth`: the image's luminance.
//! * `/features`: a fixed random projection of an 8×8 luminance thumbnail.
//! * `/denoise`: the noise that would turn `target` into `x_t`.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::imaging::ImageBuf;
use crate::rng::substream;

use super::wire::{
    decode_f32_b64, decode_png_b64, encode_f32_b64, DenoiseRequest, DenoiseResponse, DepthRequest, DepthResponse,
    ErrorResponse, FeaturesRequest, FeaturesResponse, HealthResponse, ScoreRequest, ScoreResponse, FEATURE_LAYERS,
};

/// Reference image for `/clip_score` and `/denoise`.
#[derive(Debug, Clone, PartialEq)]
pub enum FakeTarget {
    /// Same value at every pixel; works for any image size.
    Constant([f64; 3]),
    /// Exact image; requests of another size are rejected.
    Image(ImageBuf),
}

/// Injected misbehaviour for client contract tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FakeFault {
    #[default]
    None,
    /// `/depth` payload contains a NaN.
    NonFiniteDepth,
    /// `/depth` reports a map one pixel wider than the request.
    WrongDepthSize,
    /// Every endpoint answers 200 with a body that is not JSON.
    Malformed,
    /// Every endpoint answers 500.
    ServerError,
}

#[derive(Debug, Clone)]
pub struct FakeConfig {
    pub target: FakeTarget,
    pub models: Vec<String>,
    /// Sleep before answering, for timeout tests.
    pub delay: Duration,
}

impl Default for FakeConfig {
    fn default() -> Self {
        Self {
            target: FakeTarget::Constant([0.5; 3]),
            models: ["clip", "depth", "features", "denoise"].map(String::from).to_vec(),
            delay: Duration::ZERO,
        }
    }
}

struct Shared {
    config: FakeConfig,
    fault: Mutex<FakeFault>,
    hits: AtomicU64,
    stop: AtomicBool,
}

/// Running fake server; shuts down on drop.
pub struct FakeServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    handle: Option<JoinHandle<()>>,
}

impl FakeServer {
    pub fn start(config: FakeConfig) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            config,
            fault: Mutex::new(FakeFault::None),
            hits: AtomicU64::new(0),
            stop: AtomicBool::new(false),
        });
        let worker = shared.clone();
        let handle = thread::spawn(move || {
            for stream in listener.incoming() {
                if worker.stop.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(stream) = stream {
                    let s = worker.clone();
                    thread::spawn(move || {
                        let _ = serve_connection(stream, &s);
                    });
                }
            }
        });
        Ok(Self {
            addr,
            shared,
            handle: Some(handle),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Requests answered so far, `/health` included.
    pub fn hits(&self) -> u64 {
        self.shared.hits.load(Ordering::SeqCst)
    }

    pub fn set_fault(&self, fault: FakeFault) {
        *self.shared.fault.lock().unwrap() = fault;
    }
}

impl Drop for FakeServer {
    fn drop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        // wake the accept loop
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

struct Reply {
    status: u16,
    body: String,
}

fn ok<T: Serialize>(v: &T) -> Reply {
    Reply {
        status: 200,
        body: serde_json::to_string(v).expect("serializable"),
    }
}

fn error(status: u16, code: &str, message: impl Into<String>) -> Reply {
    Reply {
        status,
        body: serde_json::to_string(&ErrorResponse::new(code, message)).expect("serializable"),
    }
}

fn serve_connection(stream: TcpStream, shared: &Shared) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(10)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let mut parts = line.split_whitespace();
    let (method, path) = match (parts.next(), parts.next()) {
        (Some(m), Some(p)) => (m.to_string(), p.to_string()),
        _ => return Ok(()),
    };
    let mut length = 0usize;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;

    shared.hits.fetch_add(1, Ordering::SeqCst);
    if !shared.config.delay.is_zero() {
        thread::sleep(shared.config.delay);
    }
    let reply = route(shared, &method, &path, &body);
    let reason = match reply.status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Error",
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        reply.body.len(),
        reply.body
    )?;
    out.flush()
}

fn route(shared: &Shared, method: &str, path: &str, body: &[u8]) -> Reply {
    let fault = *shared.fault.lock().unwrap();
    match fault {
        FakeFault::ServerError => return error(500, "internal", "injected failure"),
        FakeFault::Malformed => {
            return Reply {
                status: 200,
                body: "{not json".into(),
            }
        }
        _ => {}
    }
    let loaded = |m: &str| shared.config.models.iter().any(|x| x == m);
    let model = match path {
        "/health" if method == "GET" => {
            return ok(&HealthResponse {
                status: "ok".into(),
                models: shared.config.models.clone(),
            })
        }
        "/clip_score" => "clip",
        "/depth" => "depth",
        "/features" => "features",
        "/denoise" => "denoise",
        _ => return error(404, "not_found", format!("no route for {method} {path}")),
    };
    if method != "POST" {
        return error(404, "not_found", format!("{path} expects POST"));
    }
    if !loaded(model) {
        return error(503, "model_unavailable", format!("model `{model}` is not loaded"));
    }
    let result = match model {
        "clip" => clip_score(shared, body),
        "depth" => depth(body, fault),
        "features" => features(body),
        _ => denoise(shared, body),
    };
    result.unwrap_or_else(|(code, msg)| error(400, code, msg))
}

type Handled = Result<Reply, (&'static str, String)>;

fn parse<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, (&'static str, String)> {
    serde_json::from_slice(body).map_err(|e| ("bad_request", e.to_string()))
}

fn image(b64: &str) -> Result<ImageBuf, (&'static str, String)> {
    decode_png_b64(b64).map_err(|e| ("bad_image", e))
}

fn target_value(target: &FakeTarget, x: usize, y: usize, c: usize) -> f64 {
    match target {
        FakeTarget::Constant(rgb) => rgb.get(c).copied().unwrap_or(0.5),
        FakeTarget::Image(img) => img.get(x, y, c.min(img.channels - 1)),
    }
}

fn check_target_shape(target: &FakeTarget, w: usize, h: usize) -> Result<(), (&'static str, String)> {
    match target {
        FakeTarget::Image(t) if (t.width, t.height) != (w, h) => Err((
            "shape_mismatch",
            format!("image is {w}x{h}, target is {}x{}", t.width, t.height),
        )),
        _ => Ok(()),
    }
}

fn clip_score(shared: &Shared, body: &[u8]) -> Handled {
    let req: ScoreRequest = parse(body)?;
    let img = image(&req.image)?;
    check_target_shape(&shared.config.target, img.width, img.height)?;
    let mut total = 0.0;
    for y in 0..img.height {
        for x in 0..img.width {
            for c in 0..3 {
                total += (img.get(x, y, c) - target_value(&shared.config.target, x, y, c)).abs();
            }
        }
    }
    let similarity = 1.0 - total / (img.width * img.height * 3) as f64;
    Ok(ok(&ScoreResponse { similarity }))
}

fn depth(body: &[u8], fault: FakeFault) -> Handled {
    let req: DepthRequest = parse(body)?;
    let img = image(&req.image)?;
    let mut lum = img.luminance();
    let mut width = img.width;
    match fault {
        FakeFault::NonFiniteDepth => lum[0] = f64::NAN,
        FakeFault::WrongDepthSize => {
            width += 1;
            lum.extend(std::iter::repeat_n(0.0, img.height));
        }
        _ => {}
    }
    Ok(ok(&DepthResponse {
        width,
        height: img.height,
        disparity: encode_f32_b64(&lum),
    }))
}

/// Area-averaged 8×8 luminance thumbnail.
fn thumbnail(img: &ImageBuf) -> [f64; 64] {
    let lum = img.luminance();
    let mut sum = [0.0; 64];
    let mut count = [0usize; 64];
    for y in 0..img.height {
        for x in 0..img.width {
            let cell = (y * 8 / img.height) * 8 + x * 8 / img.width;
            sum[cell] += lum[y * img.width + x];
            count[cell] += 1;
        }
    }
    std::array::from_fn(|i| if count[i] > 0 { sum[i] / count[i] as f64 } else { 0.0 })
}

fn features(body: &[u8]) -> Handled {
    let req: FeaturesRequest = parse(body)?;
    if !FEATURE_LAYERS.contains(&req.layer) {
        return Err(("unsupported_layer", format!("layer {} is not one of {FEATURE_LAYERS:?}", req.layer)));
    }
    let thumb = thumbnail(&image(&req.image)?);
    let mut rng = substream(&[0xFEA7, req.layer as u64]);
    let values = (0..req.layer)
        .map(|_| {
            thumb
                .iter()
                .map(|t| {
                    let w: f64 = StandardNormal.sample(&mut rng);
                    w * t / 8.0
                })
                .sum()
        })
        .collect();
    Ok(ok(&FeaturesResponse {
        dim: req.layer,
        values,
    }))
}

fn denoise(shared: &Shared, body: &[u8]) -> Handled {
    let req: DenoiseRequest = parse(body)?;
    let n = req.width * req.height * req.channels;
    let data = decode_f32_b64(&req.data, n).map_err(|e| ("bad_payload", e))?;
    if !(req.alpha_bar > 0.0 && req.alpha_bar < 1.0) {
        return Err(("bad_request", "alpha_bar must lie in (0, 1)".into()));
    }
    check_target_shape(&shared.config.target, req.width, req.height)?;
    let (sa, sn) = (req.alpha_bar.sqrt(), (1.0 - req.alpha_bar).sqrt());
    let eps: Vec<f64> = data
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let (p, c) = (i / req.channels, i % req.channels);
            let target = target_value(&shared.config.target, p % req.width, p / req.width, c);
            (x - sa * target) / sn
        })
        .collect();
    Ok(ok(&DenoiseResponse {
        width: req.width,
        height: req.height,
        channels: req.channels,
        data: encode_f32_b64(&eps),
    }))
}
