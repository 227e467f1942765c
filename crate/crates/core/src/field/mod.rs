//! Environment radiance field: a dense voxel grid of density and color,
//! rendered by emission–absorption ray marching with an exact backward pass.

pub mod checkpoint;
mod grid;
mod render;

use rayon::prelude::*;
use thiserror::Error;

pub use grid::{sample_field, DensityInit, RadianceGrid, Stencil};
pub use render::{
    render_ray, render_ray_backward, GradSink, GridGrad, SparseGrad, Ray, RayRender, RaySample, RayUpstream, SampleSpec, Stratification,
    DISPARITY_EPS,
};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid resolution {0:?} must be at least 2 nodes per axis")]
    Resolution([usize; 3]),
    #[error("grid bounds have zero or non-finite extent")]
    DegenerateBounds,
    #[error("buffer length does not match the grid shape")]
    Shape,
    #[error("{0}")]
    InvalidValue(&'static str),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// One ray's share of a batched backward pass.
#[derive(Debug, Clone, Copy)]
pub struct BackwardJob {
    pub ray: Ray,
    pub spec: SampleSpec,
    pub stop_depth: Option<f64>,
    pub upstream: RayUpstream,
}

/// Rays per partial gradient buffer in [`accumulate_backward`].
const BACKWARD_CHUNK: usize = 256;

/// Sums [`render_ray_backward`] over `jobs`.
///
/// Jobs are split into fixed-size chunks, each chunk records its
/// contributions sparsely, and the records are replayed in chunk order. The
/// result does not depend on the number of worker threads.
pub fn accumulate_backward(grid: &RadianceGrid, jobs: &[BackwardJob]) -> GridGrad {
    let partials: Vec<SparseGrad> = jobs
        .par_chunks(BACKWARD_CHUNK)
        .map(|chunk| {
            let mut g = SparseGrad::default();
            for job in chunk {
                render_ray_backward(grid, &job.ray, &job.spec, job.stop_depth, &job.upstream, &mut g);
            }
            g
        })
        .collect();
    let mut total = GridGrad::zeros_like(grid);
    for p in &partials {
        p.replay_into(&mut total);
    }
    total
}
