use serde::{Deserialize, Serialize};

use super::DatasetMeta;
use crate::render::{Background, RenderConfig};
use crate::scene::{Aabb, Camera, VoxelField};
use crate::{Error, Result, Rgb, Vec3};

/// Density inside every primitive, per world unit.
pub const SIGMA_MAX: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Sphere { radius: f64 },
    Box { half_extents: Vec3 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Object,
    Background,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(flatten)]
    pub shape: Shape,
    pub center: Vec3,
    pub color: Rgb,
    pub role: Role,
}

impl Primitive {
    /// Signed distance (exact for spheres, the usual box bound for boxes).
    fn sdf(&self, p: &Vec3) -> f64 {
        let q = p - self.center;
        match self.shape {
            Shape::Sphere { radius } => q.norm() - radius,
            Shape::Box { half_extents } => {
                let d = q.abs() - half_extents;
                d.map(|v| v.max(0.0)).norm() + d.max().min(0.0)
            }
        }
    }

    fn half_extent(&self) -> Vec3 {
        match self.shape {
            Shape::Sphere { radius } => Vec3::repeat(radius),
            Shape::Box { half_extents } => half_extents,
        }
    }
}

/// Horizontal checkerboard slab whose top face sits at `top`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundPlane {
    pub top: f64,
    pub thickness: f64,
    pub color_a: Rgb,
    pub color_b: Rgb,
    pub checker_size: f64,
}

impl GroundPlane {
    fn sdf(&self, p: &Vec3) -> f64 {
        (p.z - self.top).max(self.top - self.thickness - p.z)
    }

    fn color(&self, p: &Vec3) -> Rgb {
        let cx = (p.x / self.checker_size).floor() as i64;
        let cy = (p.y / self.checker_size).floor() as i64;
        if (cx + cy).rem_euclid(2) == 0 {
            self.color_a
        } else {
            self.color_b
        }
    }
}

/// Cameras on a horizontal circle around `look_at`, at world height `height`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRig {
    pub count: usize,
    pub radius: f64,
    pub height: f64,
    pub look_at: Vec3,
    pub fov_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
    pub ground: Option<GroundPlane>,
    pub resolution: [usize; 3],
    pub bounds: Aabb,
    pub rig: CameraRig,
    pub image_width: u32,
    pub image_height: u32,
    pub near: f64,
    pub far: f64,
    pub samples_per_ray: usize,
    /// Color behind everything in full-scene and background renders.
    pub sky: Rgb,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            primitives: vec![
                Primitive {
                    shape: Shape::Sphere { radius: 0.3 },
                    center: Vec3::new(0.15, -0.1, -0.2),
                    color: Rgb::new(0.9, 0.25, 0.1),
                    role: Role::Object,
                },
                Primitive {
                    shape: Shape::Sphere { radius: 0.09 },
                    center: Vec3::new(0.15, -0.1, 0.15),
                    color: Rgb::new(0.95, 0.85, 0.2),
                    role: Role::Object,
                },
                Primitive {
                    shape: Shape::Box {
                        half_extents: Vec3::new(0.15, 0.15, 0.3),
                    },
                    center: Vec3::new(-0.45, 0.45, -0.3),
                    color: Rgb::new(0.2, 0.45, 0.75),
                    role: Role::Background,
                },
            ],
            ground: Some(GroundPlane {
                top: -0.6,
                thickness: 0.12,
                color_a: Rgb::new(0.85, 0.85, 0.8),
                color_b: Rgb::new(0.25, 0.3, 0.35),
                checker_size: 0.25,
            }),
            resolution: [96; 3],
            bounds: Aabb::cube(1.0),
            rig: CameraRig {
                count: 24,
                radius: 2.8,
                height: 0.9,
                look_at: Vec3::new(0.0, 0.0, -0.25),
                fov_deg: 45.0,
            },
            image_width: 64,
            image_height: 64,
            near: 1.2,
            far: 4.6,
            samples_per_ray: 160,
            sky: Rgb::new(0.6, 0.75, 0.95),
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScene(m.into()));
        if self.rig.count <= 3 {
            return bad("camera rig needs more than 3 cameras");
        }
        if !self.primitives.iter().any(|p| p.role == Role::Object) {
            return bad("at least one object primitive is required");
        }
        if self.ground.is_none() && !self.primitives.iter().any(|p| p.role == Role::Background) {
            return bad("at least one background element is required");
        }
        if self.image_width == 0 || self.image_height == 0 {
            return bad("image size must be positive");
        }
        Aabb::new(self.bounds.min, self.bounds.max)?;
        self.render_config().validate()?;
        for (index, p) in self.primitives.iter().enumerate() {
            let h = p.half_extent();
            if h.iter().any(|&v| !(v > 0.0)) {
                return bad("primitive sizes must be positive");
            }
            if !self.bounds.contains(&(p.center - h)) || !self.bounds.contains(&(p.center + h)) {
                return Err(Error::PrimitiveOutOfBounds { index });
            }
        }
        if let Some(g) = &self.ground {
            if !(g.thickness > 0.0 && g.checker_size > 0.0) {
                return bad("ground thickness and checker size must be positive");
            }
            if g.top > self.bounds.max.z || g.top - g.thickness < self.bounds.min.z {
                return Err(Error::PrimitiveOutOfBounds {
                    index: self.primitives.len(),
                });
            }
        }
        Ok(())
    }

    pub fn cameras(&self) -> Result<Vec<Camera>> {
        self.orbit(self.rig.count, 0.0)
    }

    /// Cameras halfway between the training cameras, for held-out evaluation.
    pub fn holdout_cameras(&self, count: usize) -> Result<Vec<Camera>> {
        self.orbit(count, 0.5)
    }

    fn orbit(&self, count: usize, phase: f64) -> Result<Vec<Camera>> {
        let rig = &self.rig;
        (0..count)
            .map(|k| {
                let theta = std::f64::consts::TAU * (k as f64 + phase) / rig.count as f64;
                let eye = Vec3::new(
                    rig.look_at.x + rig.radius * theta.cos(),
                    rig.look_at.y + rig.radius * theta.sin(),
                    rig.height,
                );
                Camera::look_at(
                    eye,
                    rig.look_at,
                    Vec3::z(),
                    self.image_width,
                    self.image_height,
                    rig.fov_deg,
                )
            })
            .collect()
    }

    /// Deterministic render settings shared by all ground-truth renders.
    pub fn render_config(&self) -> RenderConfig {
        RenderConfig::new(self.samples_per_ray, self.near, self.far)
    }

    pub fn sky_render_config(&self) -> RenderConfig {
        self.render_config()
            .with_background(Background::Color(self.sky))
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            near: self.near,
            far: self.far,
            bounds: self.bounds,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub full: VoxelField,
    pub object: VoxelField,
    pub background: VoxelField,
}

/// Nearest element of one role: (signed distance, color at the point).
fn nearest<'a>(
    p: &Vec3,
    prims: impl Iterator<Item = &'a Primitive>,
    ground: Option<&GroundPlane>,
) -> Option<(f64, Rgb)> {
    let mut best: Option<(f64, Rgb)> = None;
    // Inside several shapes the first listed wins; otherwise the closest.
    let mut consider = |d: f64, c: Rgb| match best {
        Some((b, _)) if b <= 0.0 || d >= b => {}
        _ => best = Some((d, c)),
    };
    for prim in prims {
        consider(prim.sdf(p), prim.color);
    }
    if let Some(g) = ground {
        consider(g.sdf(p), g.color(p));
    }
    best
}

/// Rasterises the primitives into object-only, background-only and combined
/// grids. Voxels whose center lies inside a primitive get density
/// [`SIGMA_MAX`]; every voxel, empty or not, takes the color of the nearest
/// element of its field so that interpolation never blends in unrelated colors.
pub fn generate_scene(spec: &SceneSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let mut object = VoxelField::empty(spec.resolution, spec.bounds)?;
    let mut background = object.clone();
    let mut full = object.clone();
    let objects: Vec<&Primitive> = spec
        .primitives
        .iter()
        .filter(|p| p.role == Role::Object)
        .collect();
    let backs: Vec<&Primitive> = spec
        .primitives
        .iter()
        .filter(|p| p.role == Role::Background)
        .collect();
    for i in 0..object.len() {
        let p = object.voxel_center(i);
        let (od, oc) =
            nearest(&p, objects.iter().copied(), None).expect("validated: object primitive exists");
        let (bd, bc) = nearest(&p, backs.iter().copied(), spec.ground.as_ref())
            .expect("validated: background exists");
        let o_sigma = if od <= 0.0 { SIGMA_MAX } else { 0.0 };
        let b_sigma = if bd <= 0.0 { SIGMA_MAX } else { 0.0 };
        object.set_voxel(i, o_sigma, oc);
        background.set_voxel(i, b_sigma, bc);
        let full_color = if o_sigma > 0.0 || (b_sigma == 0.0 && od <= bd) {
            oc
        } else {
            bc
        };
        full.set_voxel(i, o_sigma.max(b_sigma), full_color);
    }
    Ok(GroundTruth {
        full,
        object,
        background,
    })
}
