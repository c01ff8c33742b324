use crate::scene::{MaskImage, RgbImage};
use crate::Result;

/// Recovers the object mask of an edited black-background image.
pub trait Segmenter: Send + Sync {
    fn segment(&self, rgb: &RgbImage, prior: &MaskImage) -> Result<MaskImage>;
}

/// Returns the prior unchanged. Valid while edits keep object boundaries.
#[derive(Clone, Copy, Debug, Default)]
pub struct KnownMask;

impl Segmenter for KnownMask {
    fn segment(&self, rgb: &RgbImage, prior: &MaskImage) -> Result<MaskImage> {
        prior.ensure_dims(rgb.dims())?;
        Ok(prior.clone())
    }
}

/// Marks a pixel as object when any channel exceeds `threshold`.
#[derive(Clone, Copy, Debug)]
pub struct AlphaThreshold {
    pub threshold: f64,
}

impl Default for AlphaThreshold {
    fn default() -> Self {
        AlphaThreshold { threshold: 1e-3 }
    }
}

impl Segmenter for AlphaThreshold {
    fn segment(&self, rgb: &RgbImage, _prior: &MaskImage) -> Result<MaskImage> {
        Ok(rgb.map(|c| c.max() > self.threshold))
    }
}
