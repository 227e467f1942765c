//! Scene descriptions (the JSON input format) and the mutable scene state
//! optimized by the driver.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{DensityInit, FieldError, RadianceGrid};
use crate::geometry::obj::read_obj;
use crate::geometry::{bake_lattice, marching_tetrahedra, transform_mesh, GeometryError, ObjectPose, SdfSource, TriMesh};
use crate::layout::{Bounds, ConfigVector, DIMS_PER_OBJECT};
use crate::{Color, Vec3};

/// Current scene-file schema version.
pub const SCENE_SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported scene schema {0} (expected {SCENE_SCHEMA})")]
    Schema(u32),
    #[error("object '{name}': {message}")]
    Object { name: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Analytic shape description, object-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Sphere {
        #[serde(default)]
        center: [f64; 3],
        radius: f64,
    },
    Box {
        #[serde(default)]
        center: [f64; 3],
        half_extents: [f64; 3],
    },
    Union(Vec<ShapeSpec>),
    Intersection(Vec<ShapeSpec>),
}

impl ShapeSpec {
    pub fn to_sdf(&self) -> SdfSource {
        match self {
            ShapeSpec::Sphere { center, radius } => SdfSource::sphere(Vec3::from(*center), *radius),
            ShapeSpec::Box { center, half_extents } => SdfSource::cuboid(Vec3::from(*center), Vec3::from(*half_extents)),
            ShapeSpec::Union(c) => SdfSource::Union(c.iter().map(ShapeSpec::to_sdf).collect()),
            ShapeSpec::Intersection(c) => SdfSource::Intersection(c.iter().map(ShapeSpec::to_sdf).collect()),
        }
    }
}

/// Where an object's geometry comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// Analytic SDF meshed by marching tetrahedra.
    Sdf {
        shape: ShapeSpec,
        #[serde(default = "default_lattice_resolution")]
        lattice_resolution: usize,
    },
    /// Triangle mesh in OBJ format, relative paths resolved against the
    /// scene file's directory.
    Obj { path: PathBuf },
}

fn default_lattice_resolution() -> usize {
    32
}

/// Per-object search box over pose parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseBounds {
    pub translation_min: [f64; 3],
    pub translation_max: [f64; 3],
    #[serde(default = "default_yaw_range")]
    pub yaw: [f64; 2],
    #[serde(default = "default_log_scale_range")]
    pub log_scale: [f64; 2],
}

fn default_yaw_range() -> [f64; 2] {
    [0.0, std::f64::consts::TAU]
}

fn default_log_scale_range() -> [f64; 2] {
    [-0.5, 0.5]
}

impl PoseBounds {
    pub fn to_bounds(&self) -> Bounds {
        let mut lower = self.translation_min.to_vec();
        lower.extend([self.yaw[0], self.log_scale[0]]);
        let mut upper = self.translation_max.to_vec();
        upper.extend([self.yaw[1], self.log_scale[1]]);
        Bounds { lower, upper }
    }

    pub fn contains(&self, pose: &ObjectPose) -> bool {
        self.to_bounds().contains(ConfigVector::from_poses(&[*pose]).as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub name: String,
    pub geometry: GeometrySpec,
    /// Initial vertex color for SDF objects.
    #[serde(default = "default_object_color")]
    pub color: [f64; 3],
    #[serde(default)]
    pub pose: ObjectPose,
    pub bounds: PoseBounds,
}

fn default_object_color() -> [f64; 3] {
    [0.7, 0.7, 0.7]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub resolution: [usize; 3],
    pub min: [f64; 3],
    pub max: [f64; 3],
    #[serde(default)]
    pub init: DensityInit,
}

/// The scene file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDescription {
    pub schema: u32,
    pub prompt: String,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    pub environment: EnvironmentSpec,
    #[serde(default)]
    pub center: [f64; 3],
    pub scene_radius: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SceneDescription {
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let desc: SceneDescription = serde_json::from_str(text)?;
        desc.validate()?;
        Ok(desc)
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene descriptions always serialize")
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.schema != SCENE_SCHEMA {
            return Err(SceneError::Schema(self.schema));
        }
        if !(self.scene_radius > 0.0 && self.scene_radius.is_finite()) {
            return Err(SceneError::Invalid("scene_radius must be positive".into()));
        }
        for o in &self.objects {
            let err = |message: String| SceneError::Object {
                name: o.name.clone(),
                message,
            };
            o.bounds.to_bounds().validate().map_err(|e| err(e.to_string()))?;
            if !o.bounds.contains(&o.pose) {
                return Err(err("initial pose lies outside its bounds".into()));
            }
            if let GeometrySpec::Sdf { lattice_resolution, .. } = o.geometry {
                if lattice_resolution < 2 {
                    return Err(err("lattice_resolution must be at least 2".into()));
                }
            }
        }
        Ok(())
    }

    /// The bundled two-object desk scene: a sphere "lamp" and a box
    /// "table" inside a 64³ environment.
    pub fn demo() -> Self {
        SceneDescription {
            schema: SCENE_SCHEMA,
            prompt: "a lamp standing next to a small table".into(),
            objects: vec![
                ObjectSpec {
                    name: "lamp".into(),
                    geometry: GeometrySpec::Sdf {
                        shape: ShapeSpec::Sphere {
                            center: [0.0; 3],
                            radius: 0.25,
                        },
                        lattice_resolution: 24,
                    },
                    color: [0.95, 0.85, 0.4],
                    pose: ObjectPose::new(Vec3::new(-0.5, 0.25, 0.0), 0.0, 0.0),
                    bounds: PoseBounds {
                        translation_min: [-1.0, 0.0, -1.0],
                        translation_max: [1.0, 0.6, 1.0],
                        yaw: default_yaw_range(),
                        log_scale: default_log_scale_range(),
                    },
                },
                ObjectSpec {
                    name: "table".into(),
                    geometry: GeometrySpec::Sdf {
                        shape: ShapeSpec::Box {
                            center: [0.0; 3],
                            half_extents: [0.4, 0.2, 0.3],
                        },
                        lattice_resolution: 24,
                    },
                    color: [0.55, 0.35, 0.2],
                    pose: ObjectPose::new(Vec3::new(0.4, 0.2, 0.0), 0.0, 0.0),
                    bounds: PoseBounds {
                        translation_min: [-1.0, 0.0, -1.0],
                        translation_max: [1.0, 0.6, 1.0],
                        yaw: default_yaw_range(),
                        log_scale: default_log_scale_range(),
                    },
                },
            ],
            environment: EnvironmentSpec {
                resolution: [64; 3],
                min: [-2.0; 3],
                max: [2.0; 3],
                init: DensityInit::default(),
            },
            center: [0.0; 3],
            scene_radius: 2.0,
            seed: 0,
        }
    }

    /// Meshes objects and initializes the environment. `base_dir` resolves
    /// relative OBJ paths.
    pub fn instantiate(&self, base_dir: &Path) -> Result<SceneState, SceneError> {
        self.validate()?;
        let mut objects = Vec::with_capacity(self.objects.len());
        for o in &self.objects {
            let mesh = match &o.geometry {
                GeometrySpec::Sdf {
                    shape,
                    lattice_resolution,
                } => mesh_shape(shape, *lattice_resolution, Color::from(o.color))?,
                GeometrySpec::Obj { path } => {
                    let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                    let file = std::fs::File::open(&full).map_err(|source| SceneError::Io { path: full.clone(), source })?;
                    read_obj(std::io::BufReader::new(file))?
                }
            };
            if mesh.is_empty() {
                return Err(SceneError::Object {
                    name: o.name.clone(),
                    message: "geometry produced an empty mesh".into(),
                });
            }
            objects.push(SceneObject {
                name: o.name.clone(),
                mesh,
                pose: o.pose,
                bounds: o.bounds.to_bounds(),
            });
        }
        let env = &self.environment;
        let mut grid = RadianceGrid::new(Vec3::from(env.min), Vec3::from(env.max), env.resolution)?;
        grid.apply_init(&env.init);
        Ok(SceneState {
            objects,
            grid,
            center: Vec3::from(self.center),
            radius: self.scene_radius,
        })
    }
}

/// Bakes `shape` on a lattice padded by two cells around its bounding box
/// and extracts a constant-colored surface.
pub fn mesh_shape(shape: &ShapeSpec, resolution: usize, color: Color) -> Result<TriMesh, GeometryError> {
    let sdf = shape.to_sdf();
    let (lo, hi) = sdf.bounding_box();
    let pad = (hi - lo).max() / resolution as f64 * 2.0;
    let lattice = bake_lattice(&sdf, lo - Vec3::repeat(pad), hi + Vec3::repeat(pad), [resolution; 3])?;
    Ok(marching_tetrahedra(&lattice, |_| color))
}

/// One object of interest: object-space mesh (geometry frozen, vertex
/// colors trainable) and its current pose.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub name: String,
    pub mesh: TriMesh,
    pub pose: ObjectPose,
    pub bounds: Bounds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneState {
    pub objects: Vec<SceneObject>,
    pub grid: RadianceGrid,
    pub center: Vec3,
    pub radius: f64,
}

impl SceneState {
    pub fn config(&self) -> ConfigVector {
        ConfigVector::from_poses(&self.objects.iter().map(|o| o.pose).collect::<Vec<_>>())
    }

    /// Adopts the poses encoded in `config`.
    pub fn set_config(&mut self, config: &[f64]) {
        assert_eq!(config.len(), DIMS_PER_OBJECT * self.objects.len(), "config length");
        let poses = ConfigVector(config.to_vec()).to_poses();
        for (o, p) in self.objects.iter_mut().zip(poses) {
            o.pose = p;
        }
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::concat(&self.objects.iter().map(|o| o.bounds.clone()).collect::<Vec<_>>())
    }

    pub fn posed_meshes(&self) -> Vec<TriMesh> {
        self.objects.iter().map(|o| transform_mesh(&o.mesh, &o.pose)).collect()
    }

    /// Meshes posed by `config` instead of the current poses.
    pub fn posed_meshes_for(&self, config: &[f64]) -> Vec<TriMesh> {
        let poses = ConfigVector(config.to_vec()).to_poses();
        self.objects.iter().zip(poses).map(|(o, p)| transform_mesh(&o.mesh, &p)).collect()
    }
}

/// Output of layout search: object names with their chosen poses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layout {
    pub objects: Vec<LayoutEntry>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutEntry {
    pub name: String,
    pub pose: ObjectPose,
}

impl Layout {
    pub fn from_state(state: &SceneState, score: Option<f64>) -> Self {
        Layout {
            objects: state
                .objects
                .iter()
                .map(|o| LayoutEntry {
                    name: o.name.clone(),
                    pose: o.pose,
                })
                .collect(),
            score,
        }
    }

    /// Applies poses by object name; every scene object must be listed.
    pub fn apply(&self, state: &mut SceneState) -> Result<(), SceneError> {
        for o in &mut state.objects {
            let entry = self
                .objects
                .iter()
                .find(|e| e.name == o.name)
                .ok_or_else(|| SceneError::Invalid(format!("layout has no pose for object '{}'", o.name)))?;
            o.pose = ObjectPose::new(entry.pose.translation(), entry.pose.yaw, entry.pose.log_scale);
        }
        Ok(())
    }
}
