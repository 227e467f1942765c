use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::{Color, Vec3};

/// Indexed triangle mesh with per-vertex colors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub positions: Vec<Vec3>,
    pub colors: Vec<Color>,
    pub triangles: Vec<[u32; 3]>,
}

/// Edge-incidence summary of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    /// Edges used by exactly one triangle.
    pub boundary_edges: usize,
    /// Edges used by three or more triangles.
    pub nonmanifold_edges: usize,
}

impl Topology {
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.faces as i64
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edges == 0 && self.nonmanifold_edges == 0
    }
}

impl TriMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        if self.positions.is_empty() {
            (Vec3::zeros(), Vec3::zeros())
        } else {
            (lo, hi)
        }
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.positions[i as usize])
    }

    /// Unnormalized face normal following the winding order.
    pub fn face_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle(t);
        (b - a).cross(&(c - a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.face_normal(t).norm()
    }

    /// Checks index ranges and color count.
    pub fn validate(&self) -> Result<(), String> {
        if self.colors.len() != self.positions.len() {
            return Err(format!(
                "{} colors for {} vertices",
                self.colors.len(),
                self.positions.len()
            ));
        }
        let n = self.positions.len() as u32;
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(format!("triangle {t} references a vertex out of range"));
            }
        }
        Ok(())
    }

    pub fn topology(&self) -> Topology {
        let mut uses: HashMap<(u32, u32), u32> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        Topology {
            vertices: self.positions.len(),
            edges: uses.len(),
            faces: self.triangles.len(),
            boundary_edges: uses.values().filter(|&&c| c == 1).count(),
            nonmanifold_edges: uses.values().filter(|&&c| c > 2).count(),
        }
    }

    /// Axis-aligned unit cube centered at the origin, outward winding.
    pub fn unit_cube() -> TriMesh {
        let positions: Vec<Vec3> = (0..8)
            .map(|b| {
                Vec3::new(
                    if b & 1 != 0 { 0.5 } else { -0.5 },
                    if b & 2 != 0 { 0.5 } else { -0.5 },
                    if b & 4 != 0 { 0.5 } else { -0.5 },
                )
            })
            .collect();
        let triangles = vec![
            [0, 2, 1], [1, 2, 3], // -z
            [4, 5, 6], [5, 7, 6], // +z
            [0, 1, 4], [1, 5, 4], // -y
            [2, 6, 3], [3, 6, 7], // +y
            [0, 4, 2], [2, 4, 6], // -x
            [1, 3, 5], [3, 7, 5], // +x
        ];
        TriMesh {
            colors: vec![Color::repeat(0.5); 8],
            positions,
            triangles,
        }
    }
}

/// Placement of one object: uniform scale, then yaw about +y, then
/// translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectPose {
    pub translation: [f64; 3],
    /// Radians in `[0, 2π)`, right-handed about the world up axis (+y).
    pub yaw: f64,
    pub log_scale: f64,
}

impl Default for ObjectPose {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl ObjectPose {
    pub const IDENTITY: ObjectPose = ObjectPose {
        translation: [0.0; 3],
        yaw: 0.0,
        log_scale: 0.0,
    };

    pub fn new(translation: Vec3, yaw: f64, log_scale: f64) -> Self {
        Self {
            translation: [translation.x, translation.y, translation.z],
            yaw: normalize_yaw(yaw),
            log_scale,
        }
    }

    pub fn translation(&self) -> Vec3 {
        Vec3::from(self.translation)
    }

    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    /// Maps an object-space point into the world.
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        let mut p = *v;
        if self.log_scale != 0.0 {
            p *= self.scale();
        }
        if self.yaw != 0.0 {
            let (s, c) = self.yaw.sin_cos();
            p = Vec3::new(c * p.x + s * p.z, p.y, -s * p.x + c * p.z);
        }
        if self.translation != [0.0; 3] {
            p += self.translation();
        }
        p
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let y = yaw.rem_euclid(TAU);
    // rem_euclid rounds tiny negatives up to exactly 2π
    if y >= TAU {
        0.0
    } else {
        y
    }
}

/// Applies `pose` to every vertex. Colors and winding are preserved: the
/// linear part has positive determinant.
pub fn transform_mesh(mesh: &TriMesh, pose: &ObjectPose) -> TriMesh {
    TriMesh {
        positions: mesh.positions.iter().map(|p| pose.apply(p)).collect(),
        colors: mesh.colors.clone(),
        triangles: mesh.triangles.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, LN_2};

    #[test]
    fn identity_pose_is_a_no_op() {
        let m = TriMesh::unit_cube();
        assert_eq!(transform_mesh(&m, &ObjectPose::IDENTITY), m);
    }

    #[test]
    fn quarter_turn_about_up_axis() {
        let pose = ObjectPose::new(Vec3::zeros(), FRAC_PI_2, 0.0);
        let p = pose.apply(&Vec3::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(p, Vec3::new(0.0, 0.0, -1.0), epsilon = 1e-15);
    }

    #[test]
    fn log_two_doubles_extents() {
        let m = TriMesh::unit_cube();
        let pose = ObjectPose::new(Vec3::new(3.0, -1.0, 2.0), 0.0, LN_2);
        let (lo, hi) = transform_mesh(&m, &pose).bounding_box();
        assert_abs_diff_eq!(hi - lo, Vec3::repeat(2.0), epsilon = 1e-12);
    }

    #[test]
    fn winding_preserved_under_rotation() {
        let m = TriMesh::unit_cube();
        let pose = ObjectPose::new(Vec3::new(0.2, 0.0, 0.0), 1.3, 0.4);
        let t = transform_mesh(&m, &pose);
        for f in 0..m.triangles.len() {
            let [a, b, c] = t.triangle(f);
            let centroid = (a + b + c) / 3.0 - pose.translation();
            assert!(t.face_normal(f).dot(&centroid) > 0.0);
        }
    }

    #[test]
    fn yaw_normalization() {
        assert_eq!(normalize_yaw(-1e-300), 0.0);
        assert_abs_diff_eq!(normalize_yaw(-FRAC_PI_2), 3.0 * FRAC_PI_2, epsilon = 1e-15);
        assert!(normalize_yaw(7.0 * TAU + 0.5) < TAU);
    }

    #[test]
    fn cube_is_closed_genus_zero() {
        let topo = TriMesh::unit_cube().topology();
        assert!(topo.is_closed());
        assert_eq!(topo.euler_characteristic(), 2);
    }
}
