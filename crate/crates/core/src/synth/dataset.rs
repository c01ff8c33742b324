use rayon::prelude::*;

use super::mask_from_alpha;
use crate::render::{render_view, Background, RenderConfig};
use crate::scene::{Aabb, Camera, DepthImage, MaskImage, RgbImage, Rgba, RgbaImage, VoxelField};
use crate::{Error, Result};

/// Rendered opacity above which a pixel counts as covered, both for masks
/// and for depth validity.
pub const DEPTH_VALID_ALPHA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channels {
    Rgb,
    Rgba,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetView {
    /// Straight color; alpha is 1 everywhere for rgb datasets.
    pub image: RgbaImage,
    pub camera: Camera,
    pub mask: Option<MaskImage>,
    /// World-space depth, `0` where invalid.
    pub depth: Option<DepthImage>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetMeta {
    pub near: f64,
    pub far: f64,
    pub bounds: Aabb,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset {
    pub channels: Channels,
    pub views: Vec<DatasetView>,
    pub meta: DatasetMeta,
}

impl MultiViewDataset {
    pub fn validate(&self) -> Result<()> {
        for v in &self.views {
            let dims = (v.camera.width, v.camera.height);
            v.image.ensure_dims(dims)?;
            if let Some(m) = &v.mask {
                m.ensure_dims(dims)?;
            }
            if let Some(d) = &v.depth {
                d.ensure_dims(dims)?;
                if d.pixels().iter().any(|&z| !(z >= 0.0) || !z.is_finite()) {
                    return Err(Error::InvalidConfig(
                        "depth maps must be finite and non-negative".into(),
                    ));
                }
            }
            if !v.image.is_valid() {
                return Err(Error::InvalidConfig("image channels outside [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn cameras(&self) -> Vec<Camera> {
        self.views.iter().map(|v| v.camera.clone()).collect()
    }
}

/// Renders `source` from every camera. A transparent background yields an
/// rgba dataset; masks always come from the rendered opacity of `mask_field`.
pub fn render_dataset(
    source: &VoxelField,
    mask_field: &VoxelField,
    cameras: &[Camera],
    cfg: &RenderConfig,
    meta: DatasetMeta,
) -> Result<MultiViewDataset> {
    let channels = match cfg.background {
        Background::Transparent => Channels::Rgba,
        Background::Color(_) => Channels::Rgb,
    };
    let mask_cfg = cfg.clone().with_background(Background::Transparent);
    let views = cameras
        .par_iter()
        .map(|camera| {
            let view = render_view(source, camera, cfg)?;
            let image = match channels {
                Channels::Rgba => view.to_rgba(),
                Channels::Rgb => view
                    .rgb
                    .map(|c| Rgba::new(c.map(|v| v.clamp(0.0, 1.0)), 1.0)),
            };
            let depth = DepthImage::from_pixels(
                camera.width,
                camera.height,
                view.depth
                    .pixels()
                    .iter()
                    .zip(view.alpha.pixels())
                    .map(|(&d, &a)| if a >= DEPTH_VALID_ALPHA { d } else { 0.0 })
                    .collect(),
            )?;
            let mask_alpha = if std::ptr::eq(source, mask_field) && channels == Channels::Rgba {
                view.alpha
            } else {
                render_view(mask_field, camera, &mask_cfg)?.alpha
            };
            Ok(super::DatasetView {
                image,
                camera: camera.clone(),
                mask: Some(mask_from_alpha(&mask_alpha, DEPTH_VALID_ALPHA)),
                depth: Some(depth),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiViewDataset {
        channels,
        views,
        meta,
    })
}

/// Perfect inpainting of view `index`: the background field rendered from
/// that view's camera.
pub fn oracle_inpaint(
    index: usize,
    dataset: &MultiViewDataset,
    gt_background: &VoxelField,
    cfg: &RenderConfig,
) -> Result<RgbImage> {
    let view = dataset
        .views
        .get(index)
        .ok_or_else(|| Error::InvalidConfig(format!("view {index} does not exist")))?;
    Ok(render_view(gt_background, &view.camera, cfg)?.rgb)
}
