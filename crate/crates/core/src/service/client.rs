use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use log::{debug, warn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::guidance::DiffusionStep;
use crate::imaging::ImageBuf;

use super::wire::{
    decode_f32_b64, encode_f32_b64, DenoiseRequest, DenoiseResponse, DepthRequest, DepthResponse, ErrorResponse,
    FeaturesRequest, FeaturesResponse, HealthResponse, ScoreRequest, ScoreResponse, FEATURE_LAYERS,
};
use super::ServiceError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceEndpoint {
    pub base_url: String,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default)]
    pub token: Option<String>,
}

fn default_timeout() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    2
}

impl ServiceEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            timeout_ms: default_timeout(),
            retries: default_retries(),
            token: None,
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.timeout_ms == 0 {
            return Err(ServiceError::Config("timeout must be positive".into()));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(ServiceError::Config(format!("base url `{}` is not http(s)", self.base_url)));
        }
        Ok(())
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base_url.trim_end_matches('/'), path)
    }
}

/// Request counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClientStats {
    /// HTTP attempts, retries included.
    pub attempts: u64,
    pub cache_hits: u64,
}

type Digest32 = [u8; 32];

#[derive(Default)]
struct Caches {
    score: HashMap<(Digest32, String), f64>,
    depth: HashMap<Digest32, ImageBuf>,
    features: HashMap<(Digest32, usize), Vec<f64>>,
}

/// Blocking client for the scoring service. Safe to share across threads.
pub struct ServiceClient {
    endpoint: ServiceEndpoint,
    agent: ureq::Agent,
    cache: Mutex<Caches>,
    attempts: AtomicU64,
    cache_hits: AtomicU64,
}

impl std::fmt::Debug for ServiceClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServiceClient")
            .field("endpoint", &self.endpoint.base_url)
            .field("stats", &self.stats())
            .finish()
    }
}

/// A PNG encoding plus its content digest.
struct Encoded {
    b64: String,
    digest: Digest32,
}

fn encode(image: &ImageBuf) -> Result<Encoded, ServiceError> {
    use base64::Engine;
    let png = image.encode_png()?;
    Ok(Encoded {
        digest: Sha256::digest(&png).into(),
        b64: base64::engine::general_purpose::STANDARD.encode(&png),
    })
}

enum Outcome {
    Done(u16, String),
    Retry(String),
}

impl ServiceClient {
    pub fn new(endpoint: ServiceEndpoint) -> Result<Self, ServiceError> {
        endpoint.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(endpoint.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            endpoint,
            agent,
            cache: Mutex::new(Caches::default()),
            attempts: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        })
    }

    pub fn endpoint(&self) -> &ServiceEndpoint {
        &self.endpoint
    }

    pub fn stats(&self) -> ClientStats {
        ClientStats {
            attempts: self.attempts.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
        }
    }

    fn attempt(&self, path: &str, body: Option<&str>) -> Outcome {
        self.attempts.fetch_add(1, Ordering::Relaxed);
        let url = self.endpoint.url(path);
        let auth = self.endpoint.token.as_ref().map(|t| format!("Bearer {t}"));
        let result = match body {
            Some(body) => {
                let mut req = self.agent.post(&url).header("Content-Type", "application/json");
                if let Some(a) = &auth {
                    req = req.header("Authorization", a);
                }
                req.send(body)
            }
            None => {
                let mut req = self.agent.get(&url);
                if let Some(a) = &auth {
                    req = req.header("Authorization", a);
                }
                req.call()
            }
        };
        match result {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                match resp.body_mut().read_to_string() {
                    Ok(text) => Outcome::Done(status, text),
                    Err(e) => Outcome::Retry(format!("reading body: {e}")),
                }
            }
            Err(e) => Outcome::Retry(e.to_string()),
        }
    }

    /// Sends with retries on transport failures and 5xx responses.
    fn exchange<T: DeserializeOwned>(&self, path: &str, body: Option<String>) -> Result<T, ServiceError> {
        let total = self.endpoint.retries as u64 + 1;
        let mut last = String::new();
        for n in 1..=total {
            match self.attempt(path, body.as_deref()) {
                Outcome::Done(status, text) if status < 400 => {
                    return serde_json::from_str(&text)
                        .map_err(|e| ServiceError::Protocol(format!("{path}: malformed response: {e}")));
                }
                Outcome::Done(status, text) => {
                    let (code, message) = match serde_json::from_str::<ErrorResponse>(&text) {
                        Ok(e) => (e.error.code, e.error.message),
                        Err(_) => ("unknown".to_string(), text),
                    };
                    if status < 500 {
                        return Err(ServiceError::Request { status, code, message });
                    }
                    last = format!("HTTP {status} {code}: {message}");
                }
                Outcome::Retry(msg) => last = msg,
            }
            if n < total {
                debug!("{path}: attempt {n} failed ({last}), retrying");
            }
        }
        warn!("{path}: giving up after {total} attempts");
        Err(ServiceError::Transport { attempts: total, message: last })
    }

    fn post<Q: Serialize, T: DeserializeOwned>(&self, path: &str, request: &Q) -> Result<T, ServiceError> {
        let body = serde_json::to_string(request).map_err(|e| ServiceError::Protocol(e.to_string()))?;
        self.exchange(path, Some(body))
    }

    fn hit(&self) {
        self.cache_hits.fetch_add(1, Ordering::Relaxed);
    }

    pub fn health(&self) -> Result<HealthResponse, ServiceError> {
        self.exchange("/health", None)
    }

    /// Text-image similarity, cached by (PNG digest, prompt).
    pub fn score_image(&self, image: &ImageBuf, prompt: &str) -> Result<f64, ServiceError> {
        let enc = encode(image)?;
        let key = (enc.digest, prompt.to_string());
        if let Some(v) = self.cache.lock().unwrap().score.get(&key) {
            self.hit();
            return Ok(*v);
        }
        let resp: ScoreResponse = self.post(
            "/clip_score",
            &ScoreRequest {
                image: enc.b64,
                prompt: prompt.into(),
            },
        )?;
        if !resp.similarity.is_finite() {
            return Err(ServiceError::Protocol("similarity is not finite".into()));
        }
        self.cache.lock().unwrap().score.insert(key, resp.similarity);
        Ok(resp.similarity)
    }

    /// Single-channel disparity map with the image's dimensions.
    pub fn estimate_disparity(&self, image: &ImageBuf) -> Result<ImageBuf, ServiceError> {
        let enc = encode(image)?;
        if let Some(v) = self.cache.lock().unwrap().depth.get(&enc.digest) {
            self.hit();
            return Ok(v.clone());
        }
        let resp: DepthResponse = self.post("/depth", &DepthRequest { image: enc.b64 })?;
        if (resp.width, resp.height) != (image.width, image.height) {
            return Err(ServiceError::Protocol(format!(
                "disparity is {}x{}, expected {}x{}",
                resp.width, resp.height, image.width, image.height
            )));
        }
        let values = decode_f32_b64(&resp.disparity, resp.width * resp.height).map_err(ServiceError::Protocol)?;
        let map = ImageBuf::from_vec(resp.width, resp.height, 1, values);
        self.cache.lock().unwrap().depth.insert(enc.digest, map.clone());
        Ok(map)
    }

    pub fn deep_features(&self, image: &ImageBuf, layer: usize) -> Result<Vec<f64>, ServiceError> {
        if !FEATURE_LAYERS.contains(&layer) {
            return Err(ServiceError::Request {
                status: 400,
                code: "unsupported_layer".into(),
                message: format!("layer {layer} is not one of {FEATURE_LAYERS:?}"),
            });
        }
        let enc = encode(image)?;
        let key = (enc.digest, layer);
        if let Some(v) = self.cache.lock().unwrap().features.get(&key) {
            self.hit();
            return Ok(v.clone());
        }
        let resp: FeaturesResponse = self.post("/features", &FeaturesRequest { image: enc.b64, layer })?;
        if resp.dim != layer || resp.values.len() != layer {
            return Err(ServiceError::Protocol(format!(
                "feature dim {} with {} values, expected {layer}",
                resp.dim,
                resp.values.len()
            )));
        }
        if resp.values.iter().any(|v| !v.is_finite()) {
            return Err(ServiceError::Protocol("features contain a non-finite value".into()));
        }
        self.cache.lock().unwrap().features.insert(key, resp.values.clone());
        Ok(resp.values)
    }

    /// Noise prediction for `x_t`. Not cached: inputs are noisy.
    pub fn denoise(&self, x_t: &ImageBuf, prompt: &str, step: &DiffusionStep) -> Result<ImageBuf, ServiceError> {
        let resp: DenoiseResponse = self.post(
            "/denoise",
            &DenoiseRequest {
                width: x_t.width,
                height: x_t.height,
                channels: x_t.channels,
                data: encode_f32_b64(&x_t.data),
                prompt: prompt.into(),
                t: step.t,
                alpha_bar: step.alpha_bar,
            },
        )?;
        if (resp.width, resp.height, resp.channels) != (x_t.width, x_t.height, x_t.channels) {
            return Err(ServiceError::Protocol("denoise output shape differs from input".into()));
        }
        let values = decode_f32_b64(&resp.data, x_t.data.len()).map_err(ServiceError::Protocol)?;
        Ok(ImageBuf::from_vec(x_t.width, x_t.height, x_t.channels, values))
    }
}
