//! Desk-scale toolkit for text-guided 3D scene composition.
//!
//! A scene is a set of explicit objects of interest (meshes extracted from
//! signed distance fields on a tetrahedral lattice) placed inside an implicit
//! environment (a dense voxel radiance field). The crate provides:
//!
//! * [`geometry`]: SDF sources, tetrahedral lattices, marching tetrahedra and
//!   mesh transforms.
//! * [`field`]: the voxel radiance field with forward volume rendering and
//!   analytic backward pass.
//! * [`render`]: perspective and equirectangular cameras, a z-buffered
//!   software rasterizer and mesh/volume compositing.
//! * [`layout`]: particle swarm layout search, a finite-difference ascent
//!   baseline and synthetic score landscapes.
//! * [`guidance`]: score-distillation gradients, depth alignment, schedules
//!   and the alternating scene optimizer.
//! * [`metrics`]: CLIP-style average precision, depth alignment error,
//!   Fréchet distance and the image degradation study.
//! * [`service`]: HTTP client for the model scoring service plus an
//!   in-process fake server speaking the same protocol.
//! * [`scene`]: scene description files and scene state assembly.
//! * [`scoring`]: render-based layout scoring against a text prompt.
//!
//! Learned models never run in-process. Every model-backed quantity goes
//! through a trait ([`layout::Scorer`], [`scoring::ImageSimilarity`],
//! [`guidance::NoisePredictor`],
//! [`guidance::DisparityOracle`], [`metrics::FeatureExtractor`]) with a mock
//! implementation and a service-backed implementation.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod field;
pub mod geometry;
pub mod guidance;
pub mod imaging;
pub mod layout;
pub mod metrics;
pub mod render;
pub mod rng;
pub mod scene;
pub mod scoring;
pub mod service;

pub use field::{RadianceGrid, Ray};
pub use geometry::{ObjectPose, SdfSource, TetLattice, TriMesh};
pub use imaging::ImageBuf;
pub use layout::{Bounds, ConfigVector, Scorer, Swarm};
pub use render::{EquirectCamera, GBuffer, PerspectiveCamera, RenderProducts};
pub use scene::{SceneDescription, SceneState};
pub use scoring::{ImageSimilarity, RenderScorer};
pub use service::{ServiceClient, ServiceEndpoint};

/// World-space 3-vector.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Linear RGB triple in `[0, 1]`.
pub type Color = nalgebra::Vector3<f64>;
