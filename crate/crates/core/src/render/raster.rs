use crate::geometry::TriMesh;
use crate::{Color, Vec3};

use super::camera::PerspectiveCamera;

/// Triangles with a vertex closer than this to the camera plane are skipped.
pub const NEAR_Z: f64 = 1e-6;

/// The surface sample that won the depth test at a pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment {
    pub mesh: u32,
    pub triangle: u32,
    /// Perspective-correct barycentric weights of the triangle's vertices.
    pub weights: [f64; 3],
}

/// Per-pixel rasterization output, row-major from the top-left pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct GBuffer {
    pub width: usize,
    pub height: usize,
    pub occupancy: Vec<bool>,
    /// Camera-space depth along the optical axis; `+∞` where unoccupied.
    pub depth: Vec<f64>,
    /// Unit geometric normal of the winning triangle.
    pub normal: Vec<Vec3>,
    pub color: Vec<Color>,
    pub fragment: Vec<Option<Fragment>>,
}

impl GBuffer {
    pub fn empty(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            occupancy: vec![false; n],
            depth: vec![f64::INFINITY; n],
            normal: vec![Vec3::zeros(); n],
            color: vec![Color::zeros(); n],
            fragment: vec![None; n],
        }
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|o| **o).count()
    }
}

/// Z-buffered rasterization of already-posed meshes.
///
/// Pixel centers inside a triangle (either winding) are covered. Depth is
/// interpolated as `1/z` in screen space, which is exact for planar
/// triangles; colors use perspective-correct barycentrics. On equal depth
/// the earlier triangle is kept.
pub fn rasterize(meshes: &[TriMesh], cam: &PerspectiveCamera) -> GBuffer {
    let mut gbuf = GBuffer::empty(cam.width, cam.height);
    for (mi, mesh) in meshes.iter().enumerate() {
        let projected: Vec<(f64, f64, f64)> = mesh.positions.iter().map(|p| cam.project(p)).collect();
        for (ti, tri) in mesh.triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| projected[i as usize]);
            if a.2 <= NEAR_Z || b.2 <= NEAR_Z || c.2 <= NEAR_Z {
                continue;
            }
            let area = edge(a, b, c.0, c.1);
            if area == 0.0 || !area.is_finite() {
                continue;
            }
            let normal = mesh.face_normal(ti);
            let normal = if normal.norm() > 0.0 { normal.normalize() } else { normal };
            let x0 = a.0.min(b.0).min(c.0).floor().max(0.0) as usize;
            let y0 = a.1.min(b.1).min(c.1).floor().max(0.0) as usize;
            let x1 = (a.0.max(b.0).max(c.0).ceil().max(0.0) as usize).min(cam.width);
            let y1 = (a.1.max(b.1).max(c.1).ceil().max(0.0) as usize).min(cam.height);
            for py in y0..y1 {
                for px in x0..x1 {
                    let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
                    let l0 = edge(b, c, x, y) / area;
                    let l1 = edge(c, a, x, y) / area;
                    let l2 = edge(a, b, x, y) / area;
                    if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
                        continue;
                    }
                    let inv = [l0 / a.2, l1 / b.2, l2 / c.2];
                    let inv_z = inv[0] + inv[1] + inv[2];
                    let z = 1.0 / inv_z;
                    let p = py * cam.width + px;
                    if z < gbuf.depth[p] {
                        let weights = inv.map(|w| w * z);
                        let color = tri
                            .iter()
                            .zip(weights)
                            .map(|(&v, w)| mesh.colors[v as usize] * w)
                            .sum::<Color>();
                        gbuf.occupancy[p] = true;
                        gbuf.depth[p] = z;
                        gbuf.normal[p] = normal;
                        gbuf.color[p] = color;
                        gbuf.fragment[p] = Some(Fragment {
                            mesh: mi as u32,
                            triangle: ti as u32,
                            weights,
                        });
                    }
                }
            }
        }
    }
    gbuf
}

/// Twice the signed area of `(p, q, (x, y))` in screen space.
#[inline]
fn edge(p: (f64, f64, f64), q: (f64, f64, f64), x: f64, y: f64) -> f64 {
    (q.0 - p.0) * (y - p.1) - (q.1 - p.1) * (x - p.0)
}
