//! Ray generation, stratified sampling, emission-absorption compositing and
//! the depth-sorted merge of an object field with a background field.

mod composite;
mod sampling;
mod view;

pub use composite::{composite_ray, Composite, EMPTY_ALPHA};
pub use sampling::{merge_sorted, ray_rng, sample_along_ray, RaySamples, Sample, Source};
pub use view::{object_centroid, render_merged, render_view, trace_ray, Layer, RenderedView};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Rgb};

/// What shows through where the ray is not fully absorbed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    Color(Rgb),
    Transparent,
}

impl Background {
    /// Color added for residual transmittance; black when transparent.
    pub fn color(&self) -> Rgb {
        match self {
            Background::Color(c) => *c,
            Background::Transparent => Rgb::zeros(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub samples_per_ray: usize,
    pub jitter: bool,
    pub background: Background,
    pub rng_seed: u64,
    pub near: f64,
    pub far: f64,
}

impl RenderConfig {
    pub fn new(samples_per_ray: usize, near: f64, far: f64) -> Self {
        RenderConfig {
            samples_per_ray,
            jitter: false,
            background: Background::Transparent,
            rng_seed: 0,
            near,
            far,
        }
    }

    pub fn with_background(mut self, background: Background) -> Self {
        self.background = background;
        self
    }

    pub fn with_jitter(mut self, seed: u64) -> Self {
        self.jitter = true;
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_ray < 2 {
            return Err(Error::InvalidConfig(format!(
                "samples_per_ray must be at least 2, got {}",
                self.samples_per_ray
            )));
        }
        if !(0.0 <= self.near && self.near < self.far) || !self.far.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= near < far, got near={} far={}",
                self.near, self.far
            )));
        }
        Ok(())
    }
}

pub use view::mean_masked_color;
