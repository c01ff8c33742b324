use crate::optim::TrainView;
use crate::scene::{Camera, MaskImage, RgbImage, Rgba, RgbaImage};
use crate::synth::{
    mask_from_alpha, Channels, DatasetMeta, DatasetView, MultiViewDataset, DEPTH_VALID_ALPHA,
};
use crate::{Error, Result, Rgb};

/// Premultiplies by alpha, i.e. composites over black.
pub fn alpha_blend_black(img: &RgbaImage) -> RgbImage {
    img.map(|p| p.rgb * p.alpha)
}

/// Attaches `mask` as a binary alpha channel.
pub fn apply_mask(rgb: &RgbImage, mask: &MaskImage) -> Result<RgbaImage> {
    mask.ensure_dims(rgb.dims())?;
    let pixels = rgb
        .pixels()
        .iter()
        .zip(mask.pixels())
        .map(|(&c, &m)| Rgba::new(c, if m { 1.0 } else { 0.0 }))
        .collect();
    RgbaImage::from_pixels(rgb.width(), rgb.height(), pixels)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IduView {
    /// The unedited image, kept for conditioning.
    pub original: RgbaImage,
    pub current: RgbaImage,
    pub camera: Camera,
    /// Most recent segmentation of `current`.
    pub mask: MaskImage,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IduDataset {
    pub views: Vec<IduView>,
    pub meta: DatasetMeta,
}

impl IduDataset {
    /// Builds the editing dataset from an object dataset. Alpha is made
    /// binary from the view mask (or from alpha when no mask is stored) and
    /// color is zeroed outside it, so an identity edit is a fixed point.
    pub fn from_object_dataset(dataset: &MultiViewDataset) -> Result<Self> {
        if dataset.views.is_empty() {
            return Err(Error::EmptyDataset);
        }
        dataset.validate()?;
        let views = dataset
            .views
            .iter()
            .map(|v| {
                let mask = match &v.mask {
                    Some(m) => m.clone(),
                    None => mask_from_alpha(&v.image.alpha(), DEPTH_VALID_ALPHA),
                };
                let rgb = RgbImage::from_pixels(
                    v.image.width(),
                    v.image.height(),
                    v.image
                        .pixels()
                        .iter()
                        .zip(mask.pixels())
                        .map(|(p, &m)| if m { p.rgb } else { Rgb::zeros() })
                        .collect(),
                )?;
                let img = apply_mask(&rgb, &mask)?;
                Ok(IduView {
                    original: img.clone(),
                    current: img,
                    camera: v.camera.clone(),
                    mask,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let out = IduDataset {
            views,
            meta: dataset.meta.clone(),
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.views.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for v in &self.views {
            let dims = (v.camera.width, v.camera.height);
            v.original.ensure_dims(dims)?;
            v.current.ensure_dims(dims)?;
            v.mask.ensure_dims(dims)?;
            for img in [&v.original, &v.current] {
                if !img.is_valid()
                    || img
                        .pixels()
                        .iter()
                        .any(|p| p.alpha != 0.0 && p.alpha != 1.0)
                {
                    return Err(Error::InvalidConfig(
                        "IDU images need channels in [0, 1] and binary alpha".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    /// Current images as an rgba dataset, with the current masks.
    pub fn current_dataset(&self) -> MultiViewDataset {
        MultiViewDataset {
            channels: Channels::Rgba,
            views: self
                .views
                .iter()
                .map(|v| DatasetView {
                    image: v.current.clone(),
                    camera: v.camera.clone(),
                    mask: Some(v.mask.clone()),
                    depth: None,
                })
                .collect(),
            meta: self.meta.clone(),
        }
    }

    pub(crate) fn train_views(&self) -> Vec<TrainView<'_>> {
        self.views
            .iter()
            .map(|v| TrainView {
                camera: &v.camera,
                target: &v.current,
                depth: None,
            })
            .collect()
    }
}
