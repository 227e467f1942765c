//! `RGRD` grid checkpoints.
//!
//! All fields little-endian:
//!
//! | offset | size | field                                        |
//! |--------|------|----------------------------------------------|
//! | 0      | 4    | magic `RGRD`                                 |
//! | 4      | 4    | `u32` format version (1)                     |
//! | 8      | 12   | `u32` node counts nx, ny, nz                 |
//! | 20     | 12   | `f32` bounds min x, y, z                     |
//! | 32     | 12   | `f32` bounds max x, y, z                     |
//! | 44     | 4·N  | `f32` density per node, x fastest then y, z  |
//! | 44+4N  | 12·N | `f32` color per node, r g b interleaved      |
//!
//! with `N = nx·ny·nz`. Values are stored at single precision, so a
//! save/load round trip is exact only for grids already representable in
//! `f32`.

use std::io::{Read, Write};

use crate::{Color, Vec3};

use super::grid::RadianceGrid;
use super::FieldError;

pub const MAGIC: &[u8; 4] = b"RGRD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 44;

pub fn write_grid<W: Write>(mut out: W, grid: &RadianceGrid) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + grid.node_count() * 16);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    for r in grid.resolution() {
        buf.extend_from_slice(&(r as u32).to_le_bytes());
    }
    let (min, max) = grid.bounds();
    for v in min.iter().chain(max.iter()) {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    for d in grid.density() {
        buf.extend_from_slice(&(*d as f32).to_le_bytes());
    }
    for c in grid.colors() {
        for v in c.iter() {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)
}

pub fn encode_grid(grid: &RadianceGrid) -> Vec<u8> {
    let mut out = Vec::new();
    write_grid(&mut out, grid).expect("writing to a Vec cannot fail");
    out
}

pub fn read_grid<R: Read>(mut input: R) -> Result<RadianceGrid, FieldError> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(FieldError::Checkpoint("missing RGRD magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let f32_at = |o: usize| f64::from(f32::from_le_bytes(header[o..o + 4].try_into().unwrap()));
    let version = u32_at(4);
    if version != VERSION {
        return Err(FieldError::Checkpoint(format!("unsupported version {version}")));
    }
    let res = [u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize];
    let min = Vec3::new(f32_at(20), f32_at(24), f32_at(28));
    let max = Vec3::new(f32_at(32), f32_at(36), f32_at(40));
    let n: usize = res
        .iter()
        .try_fold(1usize, |acc, &r| acc.checked_mul(r))
        .filter(|&n| n <= 1 << 30)
        .ok_or_else(|| FieldError::Checkpoint("node count too large".into()))?;
    let mut payload = vec![0u8; n * 16];
    input.read_exact(&mut payload)?;
    let floats: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    let density = floats[..n].to_vec();
    let color = floats[n..].chunks_exact(3).map(|c| Color::new(c[0], c[1], c[2])).collect();
    RadianceGrid::from_parts(min, max, res, density, color)
}
