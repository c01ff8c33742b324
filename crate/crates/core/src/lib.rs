//! Voxel radiance fields with analytic gradients, two-field depth-sorted
//! compositing, and an iterative dataset-update loop for editing an object
//! that has been disentangled from its background.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`scene`]: fields, cameras, rays, images and the object transform
//! - [`render`]: ray sampling, emission-absorption compositing, merged renders
//! - [`optim`]: losses, backpropagation through the compositor, Adam, training loops
//! - [`idu`]: the iterative dataset update with pluggable editors and segmenters
//! - [`synth`]: synthetic ground-truth scenes, dataset files, metrics

pub mod checkpoint;
pub mod error;
pub mod idu;
pub mod optim;
pub mod render;
pub mod scene;
pub mod synth;

pub use error::{Error, Result};

/// World-space vector or point.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Linear rgb triple, each channel nominally in `[0, 1]`.
pub type Rgb = nalgebra::Vector3<f64>;
