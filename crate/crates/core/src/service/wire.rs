//! JSON bodies of the scoring-service protocol.
//!
//! Images travel as base64 PNG. Float arrays (disparity maps, tensors for
//! denoising) travel as base64 of little-endian 32-bit floats, row-major.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::imaging::{ImageBuf, ImageError};

/// Feature widths the service can return.
pub const FEATURE_LAYERS: [usize; 3] = [64, 192, 2048];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub models: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub image: String,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRequest {
    pub image: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthResponse {
    pub width: usize,
    pub height: usize,
    pub disparity: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesRequest {
    pub image: String,
    pub layer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesResponse {
    pub dim: usize,
    pub values: Vec<f64>,
}

/// Noise prediction for an arbitrary-channel float tensor `x_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseRequest {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: String,
    pub prompt: String,
    pub t: f64,
    pub alpha_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseResponse {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: ErrorDetail,
}

impl ErrorResponse {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            error: ErrorDetail {
                code: code.into(),
                message: message.into(),
            },
        }
    }
}

pub fn encode_png_b64(image: &ImageBuf) -> Result<String, ImageError> {
    Ok(STANDARD.encode(image.encode_png()?))
}

pub fn decode_png_b64(text: &str) -> Result<ImageBuf, String> {
    let bytes = STANDARD.decode(text).map_err(|e| format!("bad base64: {e}"))?;
    ImageBuf::decode_png(&bytes).map_err(|e| e.to_string())
}

pub fn encode_f32_b64(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

/// Decodes `expected` finite floats.
pub fn decode_f32_b64(text: &str, expected: usize) -> Result<Vec<f64>, String> {
    let bytes = STANDARD.decode(text).map_err(|e| format!("bad base64: {e}"))?;
    if bytes.len() != 4 * expected {
        return Err(format!("expected {expected} floats, payload holds {} bytes", bytes.len()));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err("payload contains a non-finite value".into());
    }
    Ok(values)
}
