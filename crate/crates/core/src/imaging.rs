//! Floating-point image buffers and their on-disk encodings (8-bit PNG, PFM).

use std::io::{self, BufRead, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("png codec error: {0}")]
    Png(#[from] image::ImageError),
    #[error("malformed PFM: {0}")]
    Pfm(String),
    #[error("unsupported channel count {0}")]
    Channels(usize),
}

/// Row-major, channel-interleaved image; row 0 is the top row.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuf {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl ImageBuf {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height * channels, "image data length");
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        let i = self.index(x, y, c);
        self.data[i] = v;
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = self.index(x, y, 0);
        &self.data[i..i + self.channels]
    }

    pub fn same_shape(&self, other: &ImageBuf) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Rec. 709 luma for RGB images, the single channel for grayscale.
    pub fn luminance(&self) -> Vec<f64> {
        (0..self.width * self.height)
            .map(|p| {
                let px = &self.data[p * self.channels..(p + 1) * self.channels];
                if self.channels >= 3 {
                    0.2126 * px[0] + 0.7152 * px[1] + 0.0722 * px[2]
                } else {
                    px[0]
                }
            })
            .collect()
    }

    /// Copies channels `[start, start + count)` into a new image.
    pub fn channel_slice(&self, start: usize, count: usize) -> ImageBuf {
        let mut out = ImageBuf::new(self.width, self.height, count);
        for p in 0..self.width * self.height {
            for c in 0..count {
                out.data[p * count + c] = self.data[p * self.channels + start + c];
            }
        }
        out
    }

    /// Stacks the channels of `a` followed by the channels of `b`.
    pub fn concat_channels(a: &ImageBuf, b: &ImageBuf) -> ImageBuf {
        assert!(a.width == b.width && a.height == b.height);
        let ch = a.channels + b.channels;
        let mut out = ImageBuf::new(a.width, a.height, ch);
        for p in 0..a.width * a.height {
            out.data[p * ch..p * ch + a.channels]
                .copy_from_slice(&a.data[p * a.channels..(p + 1) * a.channels]);
            out.data[p * ch + a.channels..(p + 1) * ch]
                .copy_from_slice(&b.data[p * b.channels..(p + 1) * b.channels]);
        }
        out
    }

    pub fn clamped01(&self) -> ImageBuf {
        ImageBuf {
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            ..*self
        }
    }

    pub fn l2_distance(&self, other: &ImageBuf) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Quantizes to 8-bit, `round(255 * clamp(v))`, expanding grayscale to RGB.
    pub fn to_rgb8(&self) -> Result<Vec<u8>, ImageError> {
        let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let mut out = Vec::with_capacity(self.width * self.height * 3);
        for p in 0..self.width * self.height {
            let px = &self.data[p * self.channels..(p + 1) * self.channels];
            match self.channels {
                1 => out.extend([q(px[0]); 3]),
                3 | 4 => out.extend([q(px[0]), q(px[1]), q(px[2])]),
                n => return Err(ImageError::Channels(n)),
            }
        }
        Ok(out)
    }

    /// Canonical PNG encoding (8-bit RGB, no alpha).
    pub fn encode_png(&self) -> Result<Vec<u8>, ImageError> {
        let raw = self.to_rgb8()?;
        let mut bytes = Vec::new();
        let encoder = image::codecs::png::PngEncoder::new(&mut bytes);
        image::ImageEncoder::write_image(
            encoder,
            &raw,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
        )?;
        Ok(bytes)
    }

    pub fn decode_png(bytes: &[u8]) -> Result<ImageBuf, ImageError> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?.to_rgb8();
        let (w, h) = img.dimensions();
        let data = img.into_raw().into_iter().map(|b| f64::from(b) / 255.0).collect();
        Ok(ImageBuf::from_vec(w as usize, h as usize, 3, data))
    }

    pub fn read_png(path: &Path) -> Result<ImageBuf, ImageError> {
        Self::decode_png(&std::fs::read(path)?)
    }
}

/// Writes a single-channel PFM: `Pf\n<w> <h>\n-1.0\n`, then little-endian
/// `f32` rows from bottom to top.
pub fn write_pfm<W: Write>(mut out: W, width: usize, height: usize, values: &[f64]) -> io::Result<()> {
    assert_eq!(values.len(), width * height, "pfm payload length");
    write!(out, "Pf\n{width} {height}\n-1.0\n")?;
    let mut row = Vec::with_capacity(width * 4);
    for y in (0..height).rev() {
        row.clear();
        for v in &values[y * width..(y + 1) * width] {
            row.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out.write_all(&row)?;
    }
    Ok(())
}

pub fn encode_pfm(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(16 + width * height * 4);
    write_pfm(&mut bytes, width, height, values).expect("writing to a Vec cannot fail");
    bytes
}

/// Reads a single-channel PFM into top-down row order.
pub fn read_pfm<R: BufRead>(mut input: R) -> Result<(usize, usize, Vec<f64>), ImageError> {
    let mut token = || -> Result<String, ImageError> {
        let mut tok = Vec::new();
        loop {
            let mut b = [0u8];
            if input.read(&mut b)? == 0 {
                break;
            }
            if b[0].is_ascii_whitespace() {
                if tok.is_empty() {
                    continue;
                }
                break;
            }
            tok.push(b[0]);
        }
        String::from_utf8(tok).map_err(|_| ImageError::Pfm("non-ASCII header".into()))
    };
    let magic = token()?;
    if magic != "Pf" {
        return Err(ImageError::Pfm(format!("expected `Pf`, found `{magic}`")));
    }
    let parse_dim = |s: String| {
        s.parse::<usize>()
            .map_err(|_| ImageError::Pfm(format!("bad dimension `{s}`")))
    };
    let width = parse_dim(token()?)?;
    let height = parse_dim(token()?)?;
    let scale_tok = token()?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| ImageError::Pfm(format!("bad scale `{scale_tok}`")))?;
    let little = scale < 0.0;
    let mut raw = vec![0u8; width * height * 4];
    input.read_exact(&mut raw)?;
    let mut values = vec![0.0; width * height];
    for (i, chunk) in raw.chunks_exact(4).enumerate() {
        let b: [u8; 4] = chunk.try_into().unwrap();
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (x, row_from_bottom) = (i % width, i / width);
        values[(height - 1 - row_from_bottom) * width + x] = f64::from(v);
    }
    Ok((width, height, values))
}
