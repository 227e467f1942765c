use std::sync::Arc;

use crate::Vec3;

use super::mesh::TriMesh;

/// Signed distance source: negative inside, positive outside, zero on the
/// surface.
#[derive(Debug, Clone)]
pub enum SdfSource {
    Sphere { center: Vec3, radius: f64 },
    Box { center: Vec3, half_extents: Vec3 },
    Union(Vec<SdfSource>),
    Intersection(Vec<SdfSource>),
    Mesh(Arc<MeshDistance>),
}

impl SdfSource {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        SdfSource::Sphere { center, radius }
    }

    pub fn cuboid(center: Vec3, half_extents: Vec3) -> Self {
        SdfSource::Box {
            center,
            half_extents,
        }
    }

    pub fn mesh(mesh: TriMesh) -> Self {
        SdfSource::Mesh(Arc::new(MeshDistance::new(mesh)))
    }

    /// Axis-aligned box enclosing the zero level set.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        match self {
            SdfSource::Sphere { center, radius } => {
                let r = Vec3::repeat(*radius);
                (center - r, center + r)
            }
            SdfSource::Box {
                center,
                half_extents,
            } => (center - half_extents, center + half_extents),
            SdfSource::Union(children) => children
                .iter()
                .map(SdfSource::bounding_box)
                .reduce(|(a0, a1), (b0, b1)| (a0.inf(&b0), a1.sup(&b1)))
                .unwrap_or((Vec3::zeros(), Vec3::zeros())),
            SdfSource::Intersection(children) => children
                .iter()
                .map(SdfSource::bounding_box)
                .reduce(|(a0, a1), (b0, b1)| (a0.sup(&b0), a1.inf(&b1)))
                .unwrap_or((Vec3::zeros(), Vec3::zeros())),
            SdfSource::Mesh(m) => m.bounds,
        }
    }
}

/// Signed distance at `point`.
///
/// Unions take the minimum of their children and intersections the maximum.
/// An empty union is "everywhere outside" and an empty intersection
/// "everywhere inside"; both are reported as `±f64::MAX` so the result stays
/// finite.
pub fn eval_sdf(source: &SdfSource, point: &Vec3) -> f64 {
    match source {
        SdfSource::Sphere { center, radius } => (point - center).norm() - radius,
        SdfSource::Box {
            center,
            half_extents,
        } => {
            let q = (point - center).abs() - half_extents;
            let outside = q.sup(&Vec3::zeros()).norm();
            let inside = q.max().min(0.0);
            outside + inside
        }
        SdfSource::Union(children) => children
            .iter()
            .map(|c| eval_sdf(c, point))
            .fold(f64::MAX, f64::min),
        SdfSource::Intersection(children) => children
            .iter()
            .map(|c| eval_sdf(c, point))
            .fold(-f64::MAX, f64::max),
        SdfSource::Mesh(m) => m.signed_distance(point),
    }
}

/// Distance field of a closed triangle mesh. The sign comes from the
/// generalized winding number, so small gaps in the input degrade gracefully.
#[derive(Debug)]
pub struct MeshDistance {
    mesh: TriMesh,
    bounds: (Vec3, Vec3),
}

impl MeshDistance {
    pub fn new(mesh: TriMesh) -> Self {
        let bounds = mesh.bounding_box();
        Self { mesh, bounds }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        if self.mesh.triangles.is_empty() {
            return f64::MAX;
        }
        let mut best = f64::INFINITY;
        let mut winding = 0.0;
        for tri in &self.mesh.triangles {
            let [a, b, c] = tri.map(|i| self.mesh.positions[i as usize]);
            let d = (closest_point_on_triangle(p, &a, &b, &c) - p).norm_squared();
            best = best.min(d);
            winding += solid_angle(p, &a, &b, &c);
        }
        let inside = (winding / (4.0 * std::f64::consts::PI)).abs() > 0.5;
        if inside {
            -best.sqrt()
        } else {
            best.sqrt()
        }
    }
}

/// Oriented solid angle subtended by triangle `abc` at `p`
/// (Van Oosterom–Strackee).
fn solid_angle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let (a, b, c) = (a - p, b - p, c - p);
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(&c));
    let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
    2.0 * num.atan2(den)
}

/// Closest point on a triangle (Ericson, Real-Time Collision Detection 5.1.5).
pub(crate) fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}
