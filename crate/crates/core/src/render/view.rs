use rayon::prelude::*;

use super::{
    composite_ray, merge_sorted, sample_along_ray, Composite, RenderConfig, Sample, Source,
};
use crate::scene::{
    Camera, GrayImage, Image, Ray, RgbImage, Rgba, RgbaImage, SrtTransform, VoxelField,
};
use crate::{Error, Result, Rgb, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct RenderedView {
    pub rgb: RgbImage,
    pub alpha: GrayImage,
    pub depth: GrayImage,
}

impl RenderedView {
    /// Straight-alpha image; only meaningful for transparent-background renders.
    pub fn to_rgba(&self) -> RgbaImage {
        let pixels = self
            .rgb
            .pixels()
            .iter()
            .zip(self.alpha.pixels())
            .map(|(c, &a)| {
                let a = a.clamp(0.0, 1.0);
                if a > 0.0 {
                    Rgba::new((c / a).map(|v| v.clamp(0.0, 1.0)), a)
                } else {
                    Rgba::transparent()
                }
            })
            .collect();
        Image::from_pixels(self.rgb.width(), self.rgb.height(), pixels).expect("same dimensions")
    }
}

/// One field taking part in a render.
#[derive(Clone, Copy, Debug)]
pub struct Layer<'a> {
    pub field: &'a VoxelField,
    pub transform: Option<&'a SrtTransform>,
    pub source: Source,
}

impl<'a> Layer<'a> {
    pub fn new(field: &'a VoxelField, source: Source) -> Self {
        Layer {
            field,
            transform: None,
            source,
        }
    }

    pub fn transformed(mut self, transform: Option<&'a SrtTransform>) -> Self {
        self.transform = transform.filter(|x| !x.is_identity());
        self
    }

    /// Evaluates the field at every sample depth along `ray`.
    #[inline]
    pub fn fill(&self, ray: &Ray, samples: &mut [Sample]) {
        let correction = self.transform.map_or(1.0, |x| x.density_correction());
        for s in samples.iter_mut() {
            let p = ray.at(s.depth);
            let q = match self.transform {
                Some(x) => x.world_to_canonical(&p),
                None => p,
            };
            let (density, color) = self.field.query(&q);
            s.density = density * correction;
            s.color = color;
            s.source = self.source;
        }
    }
}

/// Samples every layer on the same strata, merges them by depth (earlier
/// layers win ties) and composites the result.
pub fn trace_ray(layers: &[Layer<'_>], ray: &Ray, ray_id: u64, cfg: &RenderConfig) -> Composite {
    let mut base = sample_along_ray(ray, cfg, ray_id);
    let mut merged: Option<Vec<Sample>> = None;
    for layer in layers {
        let mut own = base.samples.clone();
        layer.fill(ray, &mut own);
        merged = Some(match merged {
            None => own,
            Some(prev) => merge_sorted(&prev, &own),
        });
    }
    base.samples = merged.unwrap_or_default();
    composite_ray(&base, &cfg.background)
}

fn render_layers(
    layers: &[Layer<'_>],
    camera: &Camera,
    cfg: &RenderConfig,
) -> Result<RenderedView> {
    cfg.validate()?;
    let (w, h) = (camera.width, camera.height);
    let pixels: Vec<Composite> = (0..h)
        .into_par_iter()
        .flat_map_iter(|py| {
            (0..w).map(move |px| {
                let ray = camera.ray_unchecked(px, py, cfg.near, cfg.far);
                trace_ray(layers, &ray, py as u64 * w as u64 + px as u64, cfg)
            })
        })
        .collect();
    let rgb = pixels.iter().map(|c| c.rgb).collect();
    let alpha = pixels.iter().map(|c| c.alpha.clamp(0.0, 1.0)).collect();
    let depth = pixels.iter().map(|c| c.depth).collect();
    Ok(RenderedView {
        rgb: Image::from_pixels(w, h, rgb)?,
        alpha: Image::from_pixels(w, h, alpha)?,
        depth: Image::from_pixels(w, h, depth)?,
    })
}

pub fn render_view(
    field: &VoxelField,
    camera: &Camera,
    cfg: &RenderConfig,
) -> Result<RenderedView> {
    render_layers(&[Layer::new(field, Source::Background)], camera, cfg)
}

/// Renders the object field, optionally moved by `transform`, together with
/// the background field by compositing the depth-sorted union of both
/// fields' samples along each ray.
pub fn render_merged(
    object: &VoxelField,
    background: &VoxelField,
    transform: Option<&SrtTransform>,
    camera: &Camera,
    cfg: &RenderConfig,
) -> Result<RenderedView> {
    let layers = [
        Layer::new(background, Source::Background),
        Layer::new(object, Source::Object).transformed(transform),
    ];
    render_layers(&layers, camera, cfg)
}

/// Density-weighted mean of voxel centers.
pub fn object_centroid(field: &VoxelField) -> Result<Vec3> {
    let mut total = 0.0;
    let mut acc = Vec3::zeros();
    for (i, &d) in field.density().iter().enumerate() {
        if d > 0.0 {
            total += d;
            acc += field.voxel_center(i) * d;
        }
    }
    if total <= 0.0 {
        return Err(Error::EmptyObjectField);
    }
    Ok(acc / total)
}

/// Mean straight color over `mask` pixels of a transparent-background render.
pub fn mean_masked_color(view: &RenderedView, mask: &Image<bool>) -> Option<Rgb> {
    let mut acc = Rgb::zeros();
    let mut n = 0usize;
    for ((c, &a), &m) in view
        .rgb
        .pixels()
        .iter()
        .zip(view.alpha.pixels())
        .zip(mask.pixels())
    {
        if m && a > 1e-6 {
            acc += c / a;
            n += 1;
        }
    }
    (n > 0).then(|| acc / n as f64)
}
