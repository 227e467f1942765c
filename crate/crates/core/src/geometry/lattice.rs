use crate::Vec3;

use super::sdf::{eval_sdf, SdfSource};
use super::GeometryError;

/// Largest allowed deformation, per axis, as a fraction of the cell spacing.
pub const MAX_DEFORMATION: f64 = 0.45;

/// Cube corners are numbered `x + 2y + 4z`. All six tetrahedra share the
/// main diagonal 0–7, so neighboring cubes split shared faces identically.
pub const CUBE_TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Signed distance values and deformation offsets on the vertices of a
/// regular grid of cubes, each split into six tetrahedra.
#[derive(Debug, Clone, PartialEq)]
pub struct TetLattice {
    resolution: [usize; 3],
    min: Vec3,
    max: Vec3,
    sdf: Vec<f64>,
    deformation: Vec<Vec3>,
}

impl TetLattice {
    /// Lattice of `resolution` cells per axis with zero SDF and zero
    /// deformation.
    pub fn new(min: Vec3, max: Vec3, resolution: [usize; 3]) -> Result<Self, GeometryError> {
        if resolution.iter().any(|&r| r < 2) {
            return Err(GeometryError::Resolution(resolution));
        }
        let extent = max - min;
        if !extent.iter().all(|e| e.is_finite() && *e > 0.0) {
            return Err(GeometryError::DegenerateBounds);
        }
        let n = resolution.iter().map(|r| r + 1).product();
        Ok(Self {
            resolution,
            min,
            max,
            sdf: vec![0.0; n],
            deformation: vec![Vec3::zeros(); n],
        })
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        (self.min, self.max)
    }

    pub fn vertex_count(&self) -> usize {
        self.sdf.len()
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn spacing(&self) -> Vec3 {
        let r = &self.resolution;
        (self.max - self.min).component_div(&Vec3::new(r[0] as f64, r[1] as f64, r[2] as f64))
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.spacing().norm()
    }

    #[inline]
    pub fn vertex_index(&self, i: usize, j: usize, k: usize) -> usize {
        let nx = self.resolution[0] + 1;
        let ny = self.resolution[1] + 1;
        i + nx * (j + ny * k)
    }

    pub fn vertex_coords(&self, index: usize) -> [usize; 3] {
        let nx = self.resolution[0] + 1;
        let ny = self.resolution[1] + 1;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Undeformed grid position of a vertex.
    pub fn rest_position(&self, index: usize) -> Vec3 {
        let [i, j, k] = self.vertex_coords(index);
        let r = &self.resolution;
        let lerp = |lo: f64, hi: f64, a: usize, n: usize| lo + (hi - lo) * (a as f64 / n as f64);
        Vec3::new(
            lerp(self.min.x, self.max.x, i, r[0]),
            lerp(self.min.y, self.max.y, j, r[1]),
            lerp(self.min.z, self.max.z, k, r[2]),
        )
    }

    /// Deformed position used for surface extraction.
    pub fn position(&self, index: usize) -> Vec3 {
        self.rest_position(index) + self.deformation[index]
    }

    pub fn sdf(&self) -> &[f64] {
        &self.sdf
    }

    pub fn sdf_mut(&mut self) -> &mut [f64] {
        &mut self.sdf
    }

    pub fn deformation(&self) -> &[Vec3] {
        &self.deformation
    }

    /// Sets one deformation offset, clamped per axis to
    /// `MAX_DEFORMATION × spacing`.
    pub fn set_deformation(&mut self, index: usize, offset: Vec3) {
        let limit = self.spacing() * MAX_DEFORMATION;
        self.deformation[index] = offset.zip_map(&limit, |o, l| o.clamp(-l, l));
    }

    /// Global vertex indices of the 8 corners of cell `(i, j, k)`.
    pub fn cell_corners(&self, i: usize, j: usize, k: usize) -> [usize; 8] {
        std::array::from_fn(|b| self.vertex_index(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1)))
    }

    /// Cells in index order (x fastest).
    pub fn cells(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [rx, ry, rz] = self.resolution;
        (0..rz).flat_map(move |k| (0..ry).flat_map(move |j| (0..rx).map(move |i| [i, j, k])))
    }
}

/// Samples `source` at every lattice vertex; deformations stay zero.
pub fn bake_lattice(
    source: &SdfSource,
    min: Vec3,
    max: Vec3,
    resolution: [usize; 3],
) -> Result<TetLattice, GeometryError> {
    let mut lattice = TetLattice::new(min, max, resolution)?;
    let values: Vec<f64> = (0..lattice.vertex_count())
        .map(|v| eval_sdf(source, &lattice.rest_position(v)))
        .collect();
    lattice.sdf = values;
    Ok(lattice)
}
