//! Wavefront OBJ subset: `v x y z [r g b]` and triangular `f` records.

use std::io::{self, BufRead, Write};

use crate::{Color, Vec3};

use super::mesh::TriMesh;
use super::GeometryError;

/// Vertex color assumed when a `v` line carries no color.
pub const DEFAULT_VERTEX_COLOR: f64 = 0.5;

pub fn write_obj<W: Write>(mut out: W, mesh: &TriMesh) -> io::Result<()> {
    for (p, c) in mesh.positions.iter().zip(&mesh.colors) {
        writeln!(out, "v {} {} {} {} {} {}", p.x, p.y, p.z, c.x, c.y, c.z)?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn read_obj<R: BufRead>(input: R) -> Result<TriMesh, GeometryError> {
    let mut mesh = TriMesh::default();
    let mut faces: Vec<(usize, [i64; 3])> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let bad = |msg: &str| GeometryError::Obj {
            line: lineno,
            message: msg.to_string(),
        };
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let nums: Vec<f64> = fields
                    .map(|f| f.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("non-numeric vertex field"))?;
                if nums.len() != 3 && nums.len() != 6 {
                    return Err(bad("vertex needs 3 coordinates and optionally 3 color components"));
                }
                if nums.iter().any(|v| !v.is_finite()) {
                    return Err(bad("non-finite vertex field"));
                }
                mesh.positions.push(Vec3::new(nums[0], nums[1], nums[2]));
                mesh.colors.push(if nums.len() == 6 {
                    Color::new(nums[3], nums[4], nums[5])
                } else {
                    Color::repeat(DEFAULT_VERTEX_COLOR)
                });
            }
            Some("f") => {
                let idx: Vec<i64> = fields
                    .map(|f| f.split('/').next().unwrap_or("").parse::<i64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("non-integer face index"))?;
                if idx.len() != 3 {
                    return Err(bad("only triangular faces are supported"));
                }
                faces.push((lineno, [idx[0], idx[1], idx[2]]));
            }
            _ => {}
        }
    }
    let n = mesh.positions.len() as i64;
    for (lineno, f) in faces {
        let mut tri = [0u32; 3];
        for (slot, &i) in tri.iter_mut().zip(&f) {
            // negative indices count back from the last vertex
            let resolved = if i < 0 { n + i } else { i - 1 };
            if !(0..n).contains(&resolved) {
                return Err(GeometryError::Obj {
                    line: lineno,
                    message: format!("face index {i} out of range"),
                });
            }
            *slot = resolved as u32;
        }
        mesh.triangles.push(tri);
    }
    Ok(mesh)
}
