use std::collections::HashMap;

use crate::{Color, Vec3};

use super::lattice::{TetLattice, CUBE_TETS};
use super::mesh::TriMesh;

/// Relative offset applied to lattice values that are exactly zero, so every
/// vertex is strictly inside or outside.
pub const ZERO_NUDGE: f64 = 1e-12;

/// Extracts the zero level set of the lattice SDF.
///
/// Each tetrahedron with mixed signs emits one triangle (one vertex on the
/// odd side) or two (two on each side). Zero crossings are placed by linear
/// interpolation along sign-changing edges and shared between neighbors
/// through an edge-keyed vertex table, so the surface has no cracks.
/// Triangles are wound so their normals point toward positive SDF. Output
/// ordering follows the cell index.
pub fn marching_tetrahedra<F>(lattice: &TetLattice, color_fn: F) -> TriMesh
where
    F: Fn(&Vec3) -> Color,
{
    let nudge = ZERO_NUDGE * lattice.spacing().min();
    let values: Vec<f64> = lattice
        .sdf()
        .iter()
        .map(|&s| if s == 0.0 { nudge } else { s })
        .collect();

    let mut mesh = TriMesh::default();
    let mut edge_vertex: HashMap<(usize, usize), u32> = HashMap::new();

    let mut crossing = |a: usize, b: usize, mesh: &mut TriMesh| -> u32 {
        let key = (a.min(b), a.max(b));
        *edge_vertex.entry(key).or_insert_with(|| {
            let (s0, s1) = (values[key.0], values[key.1]);
            let t = s0.abs() / (s0.abs() + s1.abs());
            let p0 = lattice.position(key.0);
            let p1 = lattice.position(key.1);
            let p = p0 + (p1 - p0) * t;
            mesh.positions.push(p);
            mesh.colors.push(color_fn(&p));
            (mesh.positions.len() - 1) as u32
        })
    };

    for [i, j, k] in lattice.cells() {
        let corners = lattice.cell_corners(i, j, k);
        for tet in CUBE_TETS {
            let v = tet.map(|c| corners[c]);
            let mask = (0..4).fold(0u8, |m, q| m | (u8::from(values[v[q]] < 0.0) << q));
            let inside: Vec<usize> = (0..4).filter(|q| mask & (1 << q) != 0).map(|q| v[q]).collect();
            let outside: Vec<usize> = (0..4).filter(|q| mask & (1 << q) == 0).map(|q| v[q]).collect();

            let toward_outside = centroid(lattice, &outside) - centroid(lattice, &inside);
            match inside.len() {
                1 | 3 => {
                    let (lone, rest) = if inside.len() == 1 { (inside[0], &outside) } else { (outside[0], &inside) };
                    let tri = [
                        crossing(lone, rest[0], &mut mesh),
                        crossing(lone, rest[1], &mut mesh),
                        crossing(lone, rest[2], &mut mesh),
                    ];
                    push_oriented(&mut mesh, tri, &toward_outside);
                }
                2 => {
                    let (a, b) = (inside[0], inside[1]);
                    let (c, d) = (outside[0], outside[1]);
                    // crossings on a-c, a-d, b-d, b-c form a cycle
                    let ac = crossing(a, c, &mut mesh);
                    let ad = crossing(a, d, &mut mesh);
                    let bd = crossing(b, d, &mut mesh);
                    let bc = crossing(b, c, &mut mesh);
                    push_oriented(&mut mesh, [ac, ad, bd], &toward_outside);
                    push_oriented(&mut mesh, [ac, bd, bc], &toward_outside);
                }
                _ => {}
            }
        }
    }
    mesh
}

fn centroid(lattice: &TetLattice, verts: &[usize]) -> Vec3 {
    verts.iter().map(|&v| lattice.position(v)).sum::<Vec3>() / verts.len().max(1) as f64
}

fn push_oriented(mesh: &mut TriMesh, mut tri: [u32; 3], outward: &Vec3) {
    let [a, b, c] = tri.map(|i| mesh.positions[i as usize]);
    if (b - a).cross(&(c - a)).dot(outward) < 0.0 {
        tri.swap(1, 2);
    }
    mesh.triangles.push(tri);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{bake_lattice, eval_sdf, SdfSource};

    fn constant_color(_: &Vec3) -> Color {
        Color::new(0.2, 0.4, 0.6)
    }

    fn sphere_mesh(res: usize) -> (TriMesh, TetLattice, SdfSource) {
        let src = SdfSource::sphere(Vec3::zeros(), 0.5);
        let lat = bake_lattice(&src, Vec3::repeat(-1.0), Vec3::repeat(1.0), [res; 3]).unwrap();
        (marching_tetrahedra(&lat, constant_color), lat, src)
    }

    #[test]
    fn all_positive_gives_empty_mesh() {
        let mut lat = TetLattice::new(Vec3::zeros(), Vec3::repeat(1.0), [3; 3]).unwrap();
        lat.sdf_mut().iter_mut().for_each(|s| *s = 1.0);
        assert!(marching_tetrahedra(&lat, constant_color).is_empty());
        lat.sdf_mut().iter_mut().for_each(|s| *s = -1.0);
        assert!(marching_tetrahedra(&lat, constant_color).is_empty());
    }

    #[test]
    fn single_negative_vertex_interpolates_linearly() {
        // only the corner at the origin is inside; it touches the tets of one cell
        let mut lat = TetLattice::new(Vec3::zeros(), Vec3::repeat(2.0), [2; 3]).unwrap();
        lat.sdf_mut().iter_mut().for_each(|s| *s = 3.0);
        lat.sdf_mut()[0] = -1.0;
        let mesh = marching_tetrahedra(&lat, constant_color);
        // corner 0 belongs to all six tets of cell (0,0,0)
        assert_eq!(mesh.triangles.len(), 6);
        let t = 1.0 / (1.0 + 3.0);
        assert_eq!(mesh.positions.len(), 7);
        for p in &mesh.positions {
            let hit = (1..8).any(|b: usize| {
                let corner = Vec3::new((b & 1) as f64, ((b >> 1) & 1) as f64, ((b >> 2) & 1) as f64);
                *p == corner * t
            });
            assert!(hit, "{p:?} is not at t = 1/4 along an edge from the origin");
        }
    }

    #[test]
    fn sphere_is_closed_with_euler_two() {
        let (mesh, lat, src) = sphere_mesh(32);
        let topo = mesh.topology();
        assert!(topo.is_closed(), "{topo:?}");
        assert_eq!(topo.euler_characteristic(), 2);
        let max_err = mesh
            .positions
            .iter()
            .map(|p| eval_sdf(&src, p).abs())
            .fold(0.0, f64::max);
        assert!(max_err <= 1.5 * lat.cell_diagonal());
        assert!((0..mesh.triangles.len()).all(|t| mesh.triangle_area(t) > 0.0));
        mesh.validate().unwrap();
    }

    #[test]
    fn normals_point_outward_on_sphere() {
        let (mesh, _, _) = sphere_mesh(12);
        for t in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.triangle(t);
            assert!(mesh.face_normal(t).dot(&((a + b + c) / 3.0)) > 0.0);
        }
    }

    #[test]
    fn refinement_does_not_increase_error() {
        let err = |res| {
            let (mesh, _, src) = sphere_mesh(res);
            mesh.positions.iter().map(|p| eval_sdf(&src, p).abs()).fold(0.0, f64::max)
        };
        let (e8, e16, e32) = (err(8), err(16), err(32));
        assert!(e16 <= e8 && e32 <= e16, "{e8} {e16} {e32}");
    }

    #[test]
    fn zero_valued_vertices_do_not_break_closure() {
        // box faces aligned with lattice planes put many vertices exactly on the surface
        let src = SdfSource::cuboid(Vec3::zeros(), Vec3::repeat(0.5));
        let lat = bake_lattice(&src, Vec3::repeat(-1.0), Vec3::repeat(1.0), [8; 3]).unwrap();
        assert!(lat.sdf().contains(&0.0));
        let topo = marching_tetrahedra(&lat, constant_color).topology();
        assert!(topo.is_closed());
        assert_eq!(topo.euler_characteristic(), 2);
    }

    #[test]
    fn deformation_moves_crossings() {
        let src = SdfSource::sphere(Vec3::zeros(), 0.5);
        let mut lat = bake_lattice(&src, Vec3::repeat(-1.0), Vec3::repeat(1.0), [8; 3]).unwrap();
        let base = marching_tetrahedra(&lat, constant_color);
        for v in 0..lat.vertex_count() {
            lat.set_deformation(v, Vec3::new(0.01, 0.0, 0.0));
        }
        let shifted = marching_tetrahedra(&lat, constant_color);
        assert_eq!(base.triangles, shifted.triangles);
        for (a, b) in base.positions.iter().zip(&shifted.positions) {
            assert!(((b - a).x - 0.01).abs() < 1e-12);
        }
    }
}
