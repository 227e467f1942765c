//! Explicit geometry for objects of interest: SDF sources, tetrahedral
//! lattices, marching tetrahedra and rigid-plus-scale mesh transforms.

mod lattice;
mod mesh;
mod mtet;
pub mod obj;
mod sdf;

use thiserror::Error;

pub use lattice::{bake_lattice, TetLattice, CUBE_TETS, MAX_DEFORMATION};
pub use mesh::{normalize_yaw, transform_mesh, ObjectPose, Topology, TriMesh};
pub use mtet::{marching_tetrahedra, ZERO_NUDGE};
pub use sdf::{eval_sdf, MeshDistance, SdfSource};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("lattice resolution {0:?} must be at least 2 cells per axis")]
    Resolution([usize; 3]),
    #[error("lattice bounds have zero or non-finite extent")]
    DegenerateBounds,
    #[error("OBJ line {line}: {message}")]
    Obj { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
