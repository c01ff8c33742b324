//! Geometric and field primitives shared by every pipeline stage.

mod camera;
mod field;
mod image;
mod transform;

pub use camera::{Camera, Ray};
pub use field::{Aabb, Cell, FieldGrad, VoxelField};
pub use image::{DepthImage, GrayImage, Image, MaskImage, RgbImage, Rgba, RgbaImage};
pub use transform::SrtTransform;
