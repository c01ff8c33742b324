use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backprop::backprop_ray_into;
use super::{
    adam_step, blended_photometric_loss, depth_loss, AdamState, CompositeGrad, SampleGrad,
};
use crate::render::{
    composite_ray, sample_along_ray, Background, Layer, RenderConfig, Source, EMPTY_ALPHA,
};
use crate::scene::{Aabb, Camera, Cell, DepthImage, FieldGrad, Ray, Rgba, RgbaImage, VoxelField};
use crate::synth::MultiViewDataset;
use crate::{Error, Result, Rgb};

/// Background used to composite both prediction and target during training.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainBackground {
    /// Fresh uniform color per batch.
    Random,
    Color(Rgb),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub rays_per_batch: usize,
    /// Adam step size for colors.
    pub learning_rate: f64,
    /// Adam step size for densities, which live on a much larger scale.
    pub density_learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub depth_loss_weight: f64,
    pub rng_seed: u64,
    pub resolution: [usize; 3],
    pub samples_per_ray: usize,
    pub background: TrainBackground,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 500,
            rays_per_batch: 2048,
            learning_rate: 0.05,
            density_learning_rate: 0.5,
            adam_beta1: 0.9,
            adam_beta2: 0.99,
            adam_eps: 1e-8,
            depth_loss_weight: 0.0,
            rng_seed: 0,
            resolution: [96; 3],
            samples_per_ray: 160,
            background: TrainBackground::Random,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.rays_per_batch == 0 {
            return bad("rays_per_batch must be positive".into());
        }
        if !(self.learning_rate > 0.0) || !(self.density_learning_rate > 0.0) {
            return bad("learning rates must be positive".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if !(self.adam_eps >= 0.0) || !(self.depth_loss_weight >= 0.0) {
            return bad("adam_eps and depth_loss_weight must be non-negative".into());
        }
        if self.samples_per_ray < 2 || self.resolution.iter().any(|&n| n < 2) {
            return bad("samples_per_ray and every resolution axis must be at least 2".into());
        }
        Ok(())
    }
}

/// One supervised ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayTarget {
    pub ray: Ray,
    pub ray_id: u64,
    pub target: Rgba,
    /// True depth, when the pixel carries one.
    pub depth: Option<f64>,
}

/// Rays evaluated together for one optimizer step.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub rays: Vec<RayTarget>,
    /// Sampling parameters; `background` must be an opaque color.
    pub render: RenderConfig,
    pub depth_loss_weight: f64,
}

impl Batch {
    fn background(&self) -> Rgb {
        self.render.background.color()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BatchStats {
    pub loss: f64,
    pub rgb_mse: f64,
    /// Mean absolute depth error over rays with a valid depth.
    pub depth_mae: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    pub iteration: usize,
    pub loss: f64,
    pub psnr: f64,
    pub depth_mae: Option<f64>,
    pub background: Rgb,
}

fn mse_to_psnr(mse: f64) -> f64 {
    if mse < 1e-10 {
        99.0
    } else {
        (10.0 * (1.0 / mse).log10()).min(99.0)
    }
}

/// Forward-only batch loss; the finite-difference oracle for
/// [`batch_loss_and_grad`].
pub fn batch_loss(field: &VoxelField, batch: &Batch) -> f64 {
    let layer = [Layer::new(field, Source::Background)];
    let bg = batch.background();
    let n = batch.rays.len() as f64;
    let mut total = 0.0;
    for rt in &batch.rays {
        let mut samples = sample_along_ray(&rt.ray, &batch.render, rt.ray_id);
        layer[0].fill(&rt.ray, &mut samples.samples);
        let c = composite_ray(&samples, &batch.render.background);
        total += blended_photometric_loss(&c.rgb, &rt.target, &bg);
        if let Some(d) = rt.depth {
            total += batch.depth_loss_weight * depth_loss(c.depth, d, true);
        }
    }
    total / n
}

struct GradRecord {
    cell: Cell,
    grad: SampleGrad,
}

#[derive(Default)]
struct ChunkResult {
    records: Vec<GradRecord>,
    loss: f64,
    rgb_se: f64,
    depth_ae: f64,
    depth_count: usize,
}

const RAYS_PER_CHUNK: usize = 128;

fn process_chunk(field: &VoxelField, batch: &Batch, rays: &[RayTarget]) -> ChunkResult {
    let bg = batch.background();
    let n = batch.rays.len() as f64;
    let mut out = ChunkResult::default();
    let mut cells: Vec<Option<Cell>> = Vec::new();
    let mut grads: Vec<SampleGrad> = Vec::new();
    for rt in rays {
        let mut samples = sample_along_ray(&rt.ray, &batch.render, rt.ray_id);
        cells.clear();
        for s in samples.samples.iter_mut() {
            let cell = field.locate(&rt.ray.at(s.depth));
            if let Some(cell) = &cell {
                let (d, c) = field.evaluate(cell);
                s.density = d;
                s.color = c;
            }
            cells.push(cell);
        }
        let c = composite_ray(&samples, &batch.render.background);
        let target = rt.target.over(&bg);
        let diff = c.rgb - target;
        let rgb_loss = diff.norm_squared() / 3.0;
        out.rgb_se += rgb_loss;
        out.loss += rgb_loss;
        let mut up = CompositeGrad {
            rgb: diff * (2.0 / (3.0 * n)),
            alpha: 0.0,
            depth: 0.0,
        };
        if let Some(d) = rt.depth {
            out.depth_ae += (c.depth - d).abs();
            out.depth_count += 1;
            if batch.depth_loss_weight > 0.0 {
                out.loss += batch.depth_loss_weight * depth_loss(c.depth, d, true);
                if c.alpha >= EMPTY_ALPHA {
                    up.depth = 2.0 * batch.depth_loss_weight * (c.depth - d) / n;
                }
            }
        }
        backprop_ray_into(&samples, &batch.render.background, &up, &mut grads);
        for (cell, g) in cells.iter().zip(&grads) {
            if let Some(cell) = cell {
                if g.density != 0.0 || g.color != Rgb::zeros() {
                    out.records.push(GradRecord {
                        cell: *cell,
                        grad: *g,
                    });
                }
            }
        }
    }
    out
}

/// Batch loss and its exact gradient with respect to every voxel parameter.
///
/// Rays are processed in fixed-size chunks and gradients are accumulated in
/// chunk order, so the result does not depend on the thread count.
pub fn batch_loss_and_grad(field: &VoxelField, batch: &Batch) -> (BatchStats, FieldGrad) {
    let chunks: Vec<ChunkResult> = batch
        .rays
        .par_chunks(RAYS_PER_CHUNK)
        .map(|rays| process_chunk(field, batch, rays))
        .collect();
    let mut grad = FieldGrad::zeros_like(field);
    let mut stats = BatchStats::default();
    let (mut rgb_se, mut depth_ae, mut depth_count) = (0.0, 0.0, 0usize);
    for chunk in &chunks {
        for r in &chunk.records {
            grad.scatter(field, &r.cell, r.grad.density, &r.grad.color);
        }
        stats.loss += chunk.loss;
        rgb_se += chunk.rgb_se;
        depth_ae += chunk.depth_ae;
        depth_count += chunk.depth_count;
    }
    let n = batch.rays.len().max(1) as f64;
    stats.loss /= n;
    stats.rgb_mse = rgb_se / n;
    stats.depth_mae = (depth_count > 0).then(|| depth_ae / depth_count as f64);
    (stats, grad)
}

/// Supervision for one view.
#[derive(Clone, Copy, Debug)]
pub struct TrainView<'a> {
    pub camera: &'a Camera,
    pub target: &'a RgbaImage,
    /// Per-pixel true depth, `0` where invalid.
    pub depth: Option<&'a DepthImage>,
}

/// Stateful field fitting: owns the field, the Adam moments and the batch RNG.
#[derive(Clone, Debug)]
pub struct Trainer {
    field: VoxelField,
    adam: AdamState,
    rng: ChaCha8Rng,
    cfg: TrainConfig,
    near: f64,
    far: f64,
    iteration: usize,
}

impl Trainer {
    pub fn new(field: VoxelField, cfg: TrainConfig, near: f64, far: f64) -> Result<Self> {
        cfg.validate()?;
        RenderConfig::new(cfg.samples_per_ray, near, far).validate()?;
        Ok(Trainer {
            adam: AdamState::new(&field),
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            field,
            cfg,
            near,
            far,
            iteration: 0,
        })
    }

    pub fn field(&self) -> &VoxelField {
        &self.field
    }

    pub fn into_field(self) -> VoxelField {
        self.field
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Draws a batch uniformly over every pixel of every view and takes one
    /// Adam step on it.
    pub fn step(&mut self, views: &[TrainView<'_>]) -> Result<StepStats> {
        if views.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let bg = match self.cfg.background {
            TrainBackground::Random => {
                Rgb::new(self.rng.random(), self.rng.random(), self.rng.random())
            }
            TrainBackground::Color(c) => c,
        };
        let mut offsets = Vec::with_capacity(views.len());
        let mut total = 0usize;
        for v in views {
            v.target.ensure_dims((v.camera.width, v.camera.height))?;
            offsets.push(total);
            total += v.camera.pixel_count();
        }
        let seed = self.rng.next_u64();
        let mut rays = Vec::with_capacity(self.cfg.rays_per_batch);
        for i in 0..self.cfg.rays_per_batch {
            let g = self.rng.random_range(0..total);
            let view = offsets.partition_point(|&o| o <= g) - 1;
            let local = g - offsets[view];
            let v = &views[view];
            let (px, py) = (
                (local % v.camera.width as usize) as u32,
                (local / v.camera.width as usize) as u32,
            );
            let depth = v.depth.map(|d| *d.get(px, py)).filter(|&d| d > 0.0);
            rays.push(RayTarget {
                ray: v.camera.ray_unchecked(px, py, self.near, self.far),
                ray_id: i as u64,
                target: *v.target.get(px, py),
                depth,
            });
        }
        let batch = Batch {
            rays,
            render: RenderConfig::new(self.cfg.samples_per_ray, self.near, self.far)
                .with_jitter(seed)
                .with_background(Background::Color(bg)),
            depth_loss_weight: self.cfg.depth_loss_weight,
        };
        let (stats, grad) = batch_loss_and_grad(&self.field, &batch);
        if !stats.loss.is_finite() {
            return Err(Error::Divergence(format!(
                "loss is {} at iteration {}",
                stats.loss, self.iteration
            )));
        }
        adam_step(&mut self.field, &grad, &mut self.adam, &self.cfg)?;
        self.iteration += 1;
        Ok(StepStats {
            iteration: self.iteration,
            loss: stats.loss,
            psnr: mse_to_psnr(stats.rgb_mse),
            depth_mae: stats.depth_mae,
            background: bg,
        })
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub field: VoxelField,
    pub trace: Vec<StepStats>,
}

/// Starting point for fitting: faint uniform density, mid-grey color.
pub fn initial_field(resolution: [usize; 3], bounds: Aabb) -> Result<VoxelField> {
    VoxelField::filled(resolution, bounds, 0.01, Rgb::repeat(0.5))
}

fn views_of(dataset: &MultiViewDataset, with_depth: bool) -> Vec<TrainView<'_>> {
    dataset
        .views
        .iter()
        .map(|v| TrainView {
            camera: &v.camera,
            target: &v.image,
            depth: if with_depth { v.depth.as_ref() } else { None },
        })
        .collect()
}

fn run(
    trainer: &mut Trainer,
    views: &[TrainView<'_>],
    iterations: usize,
) -> Result<Vec<StepStats>> {
    (0..iterations).map(|_| trainer.step(views)).collect()
}

/// Fits the object field to straight-alpha images, compositing targets and
/// renders over the configured background (random per batch by default).
pub fn train_object_field(dataset: &MultiViewDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let init = initial_field(cfg.resolution, dataset.meta.bounds)?;
    train_object_field_from(init, dataset, cfg)
}

pub fn train_object_field_from(
    init: VoxelField,
    dataset: &MultiViewDataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if dataset.views.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut trainer = Trainer::new(init, cfg.clone(), dataset.meta.near, dataset.meta.far)?;
    let views = views_of(dataset, false);
    let trace = run(&mut trainer, &views, cfg.iterations)?;
    Ok(TrainOutcome {
        field: trainer.into_field(),
        trace,
    })
}

/// Fits the background field to inpainted images, adding the weighted
/// true-depth term wherever a view carries depth.
pub fn train_background_field(
    dataset: &MultiViewDataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if dataset.views.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let init = initial_field(cfg.resolution, dataset.meta.bounds)?;
    let mut trainer = Trainer::new(init, cfg.clone(), dataset.meta.near, dataset.meta.far)?;
    let views = views_of(dataset, true);
    let trace = run(&mut trainer, &views, cfg.iterations)?;
    Ok(TrainOutcome {
        field: trainer.into_field(),
        trace,
    })
}
