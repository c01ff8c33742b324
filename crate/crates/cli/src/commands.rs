use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use radiant_bridge::{RemoteClient, RemoteEditor};
use radiant_core::checkpoint::{load_field, save_field};
use radiant_core::idu::{
    idu_run_with, AlphaThreshold, EditInstruction, Editor, EditorKind, IduDataset, KnownMask,
    Segmenter,
};
use radiant_core::optim::{train_background_field, train_object_field, StepStats};
use radiant_core::render::{
    mean_masked_color, object_centroid, render_merged, render_view, Background,
};
use radiant_core::scene::{Camera, SrtTransform, VoxelField};
use radiant_core::synth::io::{read_rgb_png, view_name, write_pfm, write_rgb_png};
use radiant_core::synth::{
    edit_alignment, generate_scene, leakage, load_dataset, mask_from_alpha, mask_iou, psnr,
    render_dataset, save_dataset, DatasetView, MultiViewDataset, SceneSpec, DEPTH_VALID_ALPHA,
};
use radiant_core::Rgb;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EditorConfig, InpaintConfig, PipelineConfig, SegmenterConfig};
use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Target {
    Object,
    Background,
}

pub struct Ctx {
    pub cfg: PipelineConfig,
    pub quiet: bool,
}

impl Ctx {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.cfg.out.join(rel)
    }

    fn scene(&self) -> CliResult<SceneSpec> {
        let path = self.path("data/scene.json");
        let text =
            fs::read_to_string(&path).map_err(|_| CliError::missing("scene description", &path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    fn dataset(&self, rel: &str, what: &'static str) -> CliResult<MultiViewDataset> {
        let dir = self.path(rel);
        if !dir.join("cameras.json").is_file() {
            return Err(CliError::missing(what, &dir));
        }
        Ok(load_dataset(&dir)?)
    }

    fn field(&self, path: &Path, what: &'static str) -> CliResult<VoxelField> {
        let path = self.cfg.resolve(path);
        if !path.is_file() {
            return Err(CliError::missing(what, &path));
        }
        Ok(load_field(&path)?)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn json_bytes(v: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s.into_bytes()
}

/// Renders the ground-truth datasets and the inpainted background views.
pub fn gen_data(ctx: &Ctx) -> CliResult {
    let spec = &ctx.cfg.scene;
    spec.validate()?;
    let remote = match &ctx.cfg.inpaint {
        InpaintConfig::Oracle => None,
        InpaintConfig::Remote { endpoint } => Some(RemoteClient::new(endpoint.clone())?),
    };
    let gt = generate_scene(spec)?;
    let cameras = spec.cameras()?;
    let meta = spec.meta();
    let sky = spec.sky_render_config();
    let clear = spec
        .render_config()
        .with_background(Background::Transparent);

    let full = render_dataset(&gt.full, &gt.object, &cameras, &sky, meta.clone())?;
    let object = render_dataset(&gt.object, &gt.object, &cameras, &clear, meta.clone())?;
    let background = render_dataset(&gt.background, &gt.object, &cameras, &sky, meta)?;
    let inpainted = match &remote {
        None => background.clone(),
        Some(client) => {
            let views = full
                .views
                .iter()
                .zip(&background.views)
                .enumerate()
                .map(|(i, (f, b))| {
                    let mask = f.mask.as_ref().expect("rendered datasets carry masks");
                    let rgb = client
                        .inpaint(&f.image.rgb(), mask)
                        .map_err(|e| CliError::from(e).with_context(&format!("viewpoint {i}")))?;
                    Ok(DatasetView {
                        image: rgb.map(|c| radiant_core::scene::Rgba::new(*c, 1.0)),
                        camera: f.camera.clone(),
                        mask: f.mask.clone(),
                        depth: b.depth.clone(),
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            MultiViewDataset {
                views,
                ..background.clone()
            }
        }
    };

    write_file(&ctx.path("data/scene.json"), &json_bytes(spec))?;
    for (name, ds) in [
        ("full", &full),
        ("object", &object),
        ("background", &background),
        ("inpainted", &inpainted),
    ] {
        save_dataset(ds, &ctx.path(&format!("data/{name}")))?;
    }
    ctx.say(format!("wrote {}", ctx.path("data").display()));
    ctx.say(format!(
        "views: {}  image: {}x{}  grid: {}x{}x{}",
        cameras.len(),
        spec.image_width,
        spec.image_height,
        spec.resolution[0],
        spec.resolution[1],
        spec.resolution[2]
    ));
    for name in ["full", "object", "background", "inpainted"] {
        ctx.say(format!(
            "  data/{name}: images masks depth cameras.json meta.json"
        ));
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

fn train_log(header: &str, trace: &[StepStats]) -> String {
    let mut log = format!("# {header}\n# iteration loss psnr depth_mae\n");
    for s in trace {
        let _ = writeln!(
            log,
            "{} {:.8} {:.4} {}",
            s.iteration,
            s.loss,
            s.psnr,
            fmt_opt(s.depth_mae)
        );
    }
    log
}

pub fn train(ctx: &Ctx, target: Target) -> CliResult {
    let (outcome, name, tc) = match target {
        Target::Object => {
            let ds = ctx.dataset("data/object", "object dataset")?;
            let tc = ctx.cfg.object_train_config();
            (train_object_field(&ds, &tc)?, "object", tc)
        }
        Target::Background => {
            let scene = ctx.scene()?;
            let ds = ctx.dataset("data/inpainted", "inpainted background images")?;
            let tc = ctx.cfg.background_train_config(scene.sky);
            (train_background_field(&ds, &tc)?, "background", tc)
        }
    };
    let header = format!(
        "target {name} iterations {} rays_per_batch {} seed {} depth_loss_weight {}",
        tc.iterations, tc.rays_per_batch, tc.rng_seed, tc.depth_loss_weight
    );
    save_field(&ctx.path(&format!("fields/{name}.rcvf")), &outcome.field)?;
    write_file(
        &ctx.path(&format!("fields/{name}.log")),
        train_log(&header, &outcome.trace).as_bytes(),
    )?;
    match outcome.trace.last() {
        Some(s) => ctx.say(format!(
            "{name}: {} iterations, final loss {:.6}, psnr {:.2}",
            tc.iterations, s.loss, s.psnr
        )),
        None => ctx.say(format!("{name}: 0 iterations, initial field written")),
    }
    Ok(())
}

fn make_editor(cfg: &EditorConfig) -> CliResult<Box<dyn Editor>> {
    Ok(match cfg {
        EditorConfig::Remote { endpoint, .. } => Box::new(RemoteEditor::new(endpoint.clone())?),
        EditorConfig::Builtin(kind) => {
            kind.validate()?;
            Box::new(*kind)
        }
    })
}

fn make_segmenter(cfg: SegmenterConfig) -> Box<dyn Segmenter> {
    match cfg {
        SegmenterConfig::KnownMask => Box::new(KnownMask),
        SegmenterConfig::AlphaThreshold => Box::new(AlphaThreshold::default()),
    }
}

/// Mean straight color of `field` over the masked pixels of every view.
pub fn mean_object_color(
    field: &VoxelField,
    dataset: &MultiViewDataset,
    scene: &SceneSpec,
) -> CliResult<Option<Rgb>> {
    let cfg = scene
        .render_config()
        .with_background(Background::Transparent);
    let colors = dataset
        .views
        .par_iter()
        .map(|v| {
            let view = render_view(field, &v.camera, &cfg)?;
            Ok(v.mask.as_ref().and_then(|m| mean_masked_color(&view, m)))
        })
        .collect::<radiant_core::Result<Vec<_>>>()?;
    let found: Vec<Rgb> = colors.into_iter().flatten().collect();
    Ok((!found.is_empty()).then(|| found.iter().sum::<Rgb>() / found.len() as f64))
}

pub fn edit(ctx: &Ctx) -> CliResult {
    let cfg = &ctx.cfg;
    let scene = ctx.scene()?;
    let object = ctx.dataset("data/object", "object dataset")?;
    let field = ctx.field(Path::new("fields/object.rcvf"), "object checkpoint")?;
    let editor = make_editor(&cfg.editor)?;
    let segmenter = make_segmenter(cfg.segmenter);
    let instruction = EditInstruction::new(cfg.instruction.clone())?;
    let schedule = cfg.idu_schedule();
    let target = match &cfg.editor {
        EditorConfig::Builtin(EditorKind::Recolor { target, .. }) => Some(*target),
        _ => None,
    };

    let mut log = String::new();
    let _ = writeln!(log, "# outer_iterations {}", schedule.outer_iterations);
    let _ = writeln!(log, "# d {}", schedule.d);
    let _ = writeln!(log, "# n {}", schedule.n);
    let _ = writeln!(log, "# editor {}", cfg.editor.name());
    let _ = writeln!(
        log,
        "# segmenter {}",
        serde_json::to_string(&cfg.segmenter).expect("serializes")
    );
    let _ = writeln!(log, "# instruction {}", cfg.instruction);
    let _ = writeln!(log, "# outer loss psnr edit_alignment");

    let dataset = IduDataset::from_object_dataset(&object)?;
    let outcome = idu_run_with(
        field,
        dataset,
        editor.as_ref(),
        segmenter.as_ref(),
        &instruction,
        &schedule,
        &cfg.idu_train_config(),
        |p| {
            let (loss, psnr) = p
                .steps
                .last()
                .map_or((None, None), |s| (Some(s.loss), Some(s.psnr)));
            let align = match target {
                Some(t) => mean_object_color(p.field, &object, &scene)
                    .map_err(|e| radiant_core::Error::InvalidConfig(e.to_string()))?
                    .map(|c| edit_alignment(&c, &t)),
                None => None,
            };
            let line = format!(
                "{} {} {} {}",
                p.outer,
                fmt_opt(loss),
                fmt_opt(psnr),
                fmt_opt(align)
            );
            ctx.say(format!("edit outer {line}"));
            log.push_str(&line);
            log.push('\n');
            Ok(())
        },
    )?;
    save_field(&ctx.path("fields/object_edited.rcvf"), &outcome.field)?;
    save_dataset(
        &outcome.dataset.current_dataset(),
        &ctx.path("edit/dataset"),
    )?;
    write_file(&ctx.path("edit/log.txt"), log.as_bytes())?;
    ctx.say(format!(
        "wrote {}",
        ctx.path("fields/object_edited.rcvf").display()
    ));
    Ok(())
}

pub fn compose(ctx: &Ctx) -> CliResult {
    let c = &ctx.cfg.compose;
    let scene = ctx.scene()?;
    let full = ctx.dataset("data/full", "full-scene dataset")?;
    let object = ctx.field(&c.object_field, "object checkpoint")?;
    let background = ctx.field(&c.background_field, "background checkpoint")?;
    let t = &c.transform;
    let centroid = match t.centroid {
        Some(p) => p,
        None => object_centroid(&object)?,
    };
    let transform =
        SrtTransform::from_axis_angle(t.scale, t.axis, t.angle_deg, t.translation, centroid)?;
    let cfg = scene.sky_render_config();
    let cameras: Vec<Camera> = full.cameras();
    let renders = cameras
        .par_iter()
        .map(|cam| render_merged(&object, &background, Some(&transform), cam, &cfg))
        .collect::<radiant_core::Result<Vec<_>>>()?;
    for (i, r) in renders.iter().enumerate() {
        let name = view_name(i);
        write_rgb_png(
            &ctx.path(&format!("compose/rgb/{name}.png")),
            &r.rgb.map(|c| c.map(|v| v.clamp(0.0, 1.0))),
        )?;
        let depth = radiant_core::scene::DepthImage::from_pixels(
            r.depth.width(),
            r.depth.height(),
            r.depth
                .pixels()
                .iter()
                .zip(r.alpha.pixels())
                .map(|(&d, &a)| if a >= DEPTH_VALID_ALPHA { d } else { 0.0 })
                .collect(),
        )?;
        write_pfm(&ctx.path(&format!("compose/depth/{name}.pfm")), &depth)?;
    }
    ctx.say(format!(
        "rendered {} views to {}",
        renders.len(),
        ctx.path("compose").display()
    ));
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct EvalReport {
    pub psnr_per_view: Vec<f64>,
    pub mean_psnr: f64,
    pub leakage: f64,
    pub mask_iou: f64,
    pub temporal_consistency: f64,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn eval(ctx: &Ctx) -> CliResult {
    let e = &ctx.cfg.eval;
    let scene = ctx.scene()?;
    let reference_dir = ctx.cfg.resolve(&e.reference);
    if !reference_dir.join("cameras.json").is_file() {
        return Err(CliError::missing("reference dataset", &reference_dir));
    }
    let reference = load_dataset(&reference_dir)?;
    let renders_dir = ctx.cfg.resolve(&e.renders);
    if !renders_dir.is_dir() {
        return Err(CliError::missing("renders", &renders_dir));
    }
    let renders = (0..reference.views.len())
        .map(|i| {
            let path = renders_dir.join(format!("{}.png", view_name(i)));
            if !path.is_file() {
                return Err(CliError::missing("render", &path));
            }
            Ok(read_rgb_png(&path)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let field = ctx.field(&e.object_field, "object checkpoint")?;

    let psnr_per_view = renders
        .iter()
        .zip(&reference.views)
        .map(|(r, v)| psnr(r, &v.image.rgb()))
        .collect::<radiant_core::Result<Vec<_>>>()?;
    let temporal = renders
        .windows(2)
        .map(|w| psnr(&w[0], &w[1]))
        .collect::<radiant_core::Result<Vec<_>>>()?;

    let clear = scene
        .render_config()
        .with_background(Background::Transparent);
    let per_view = reference
        .views
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let mask = v.mask.as_ref().ok_or_else(|| {
                CliError::missing(
                    "reference mask",
                    &reference_dir.join("masks").join(view_name(i)),
                )
            })?;
            let alpha = render_view(&field, &v.camera, &clear)?.alpha;
            let leak = leakage(&alpha, mask)?;
            let iou = mask_iou(&mask_from_alpha(&alpha, DEPTH_VALID_ALPHA), mask)?;
            Ok((leak, iou))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let leaks: Vec<f64> = per_view.iter().map(|p| p.0).collect();
    let ious: Vec<f64> = per_view.iter().map(|p| p.1).collect();

    let report = EvalReport {
        mean_psnr: mean(&psnr_per_view),
        psnr_per_view,
        leakage: mean(&leaks),
        mask_iou: mean(&ious),
        temporal_consistency: mean(&temporal),
    };
    write_file(&ctx.path("eval/report.json"), &json_bytes(&report))?;
    ctx.say(format!(
        "mean_psnr {:.3}  leakage {:.5}  mask_iou {:.4}  temporal_consistency {:.3}",
        report.mean_psnr, report.leakage, report.mask_iou, report.temporal_consistency
    ));
    Ok(())
}

pub fn pipeline(ctx: &Ctx) -> CliResult {
    gen_data(ctx)?;
    train(ctx, Target::Object)?;
    train(ctx, Target::Background)?;
    edit(ctx)?;
    compose(ctx)?;
    eval(ctx)
}
