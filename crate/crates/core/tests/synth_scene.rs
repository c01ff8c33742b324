use radiant_core::render::{render_merged, render_view, Background};
use radiant_core::scene::{Aabb, VoxelField};
use radiant_core::synth::{
    generate_scene, load_dataset, oracle_inpaint, render_dataset, save_dataset, GroundTruth,
    SceneSpec,
};
use radiant_core::{Rgb, Vec3};

fn scene() -> (SceneSpec, GroundTruth) {
    let spec = SceneSpec::default();
    let gt = generate_scene(&spec).unwrap();
    (spec, gt)
}

#[test]
fn full_render_matches_merged_decomposition() {
    let (spec, gt) = scene();
    let cfg = spec.sky_render_config();
    let mut worst: f64 = 0.0;
    for cam in spec.cameras().unwrap() {
        let full = render_view(&gt.full, &cam, &cfg).unwrap();
        let merged = render_merged(&gt.object, &gt.background, None, &cam, &cfg).unwrap();
        for (a, b) in full.rgb.pixels().iter().zip(merged.rgb.pixels()) {
            worst = worst.max((a - b).abs().max());
        }
    }
    assert!(worst <= 2.0 / 255.0, "max deviation {worst}");
}

#[test]
fn object_depth_is_in_front_of_background() {
    let (spec, gt) = scene();
    let cams = spec.cameras().unwrap();
    let (lo, hi) = background_box(&spec);
    let obj = render_dataset(
        &gt.object,
        &gt.object,
        &cams,
        &spec.render_config(),
        spec.meta(),
    )
    .unwrap();
    let bkg = render_dataset(
        &gt.background,
        &gt.object,
        &cams,
        &spec.sky_render_config(),
        spec.meta(),
    )
    .unwrap();
    let mut checked = 0;
    for (o, b) in obj.views.iter().zip(&bkg.views) {
        let mask = o.mask.as_ref().unwrap();
        let (od, bd) = (o.depth.as_ref().unwrap(), b.depth.as_ref().unwrap());
        for i in 0..mask.len() {
            let (px, py) = ((i % 64) as u32, (i / 64) as u32);
            let ray = o.camera.ray(px, py, spec.near, spec.far).unwrap();
            if mask.pixels()[i]
                && bd.pixels()[i] > 0.0
                && !ray_hits_box(&ray.origin, &ray.direction, &lo, &hi)
            {
                assert!(od.pixels()[i] <= bd.pixels()[i], "pixel {i}");
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn rgba_alpha_matches_mask() {
    let (spec, gt) = scene();
    let cams = spec.cameras().unwrap();
    let ds = render_dataset(
        &gt.object,
        &gt.object,
        &cams[..4],
        &spec.render_config(),
        spec.meta(),
    )
    .unwrap();
    for v in &ds.views {
        let from_alpha = v.image.alpha().map(|&a| a > 0.5);
        assert_eq!(&from_alpha, v.mask.as_ref().unwrap());
    }
    let again = render_dataset(
        &gt.object,
        &gt.object,
        &cams[..4],
        &spec.render_config(),
        spec.meta(),
    )
    .unwrap();
    assert_eq!(ds, again);
}

#[test]
fn oracle_inpaint_agrees_outside_object() {
    let (spec, gt) = scene();
    let cfg = spec.sky_render_config();
    let cams = spec.cameras().unwrap();
    let full = render_dataset(&gt.full, &gt.object, &cams, &cfg, spec.meta()).unwrap();
    let mut checked = 0;
    for i in 0..full.views.len() {
        let inpainted = oracle_inpaint(i, &full, &gt.background, &cfg).unwrap();
        assert_eq!(
            inpainted,
            oracle_inpaint(i, &full, &gt.background, &cfg).unwrap()
        );
        let view = &full.views[i];
        // Background must be visible in both images, so soft-edge pixels
        // below the mask threshold are left out.
        let object_alpha = render_view(&gt.object, &view.camera, &spec.render_config())
            .unwrap()
            .alpha;
        for ((p, q), &a) in view
            .image
            .pixels()
            .iter()
            .zip(inpainted.pixels())
            .zip(object_alpha.pixels())
        {
            if a < 1.0 / 255.0 {
                checked += 1;
                assert!((p.rgb - q).abs().max() <= 2.0 / 255.0, "view {i}");
            }
        }
    }
    assert!(checked > 24 * 64 * 64 / 2);
}

#[test]
fn oracle_inpaint_without_object_is_the_original() {
    let (spec, gt) = scene();
    let cfg = spec.sky_render_config();
    // Camera looking away from the object, at the background box from behind it.
    let cam = radiant_core::scene::Camera::look_at(
        Vec3::new(0.7, 0.9, 1.5),
        Vec3::new(0.7, 0.7, -0.6),
        Vec3::x(),
        32,
        32,
        20.0,
    )
    .unwrap();
    let ds = render_dataset(&gt.full, &gt.object, &[cam], &cfg, spec.meta()).unwrap();
    assert_eq!(ds.views[0].mask.as_ref().unwrap().count(), 0);
    let out = oracle_inpaint(0, &ds, &gt.background, &cfg).unwrap();
    for (p, q) in ds.views[0].image.pixels().iter().zip(out.pixels()) {
        assert!((p.rgb - q).abs().max() <= 1e-6);
    }
}

/// Slightly padded bounds of the background box primitive.
fn background_box(spec: &SceneSpec) -> (Vec3, Vec3) {
    let b = &spec.primitives[2];
    match b.shape {
        radiant_core::synth::Shape::Box { half_extents } => {
            (b.center - half_extents * 1.1, b.center + half_extents * 1.1)
        }
        _ => unreachable!(),
    }
}

fn ray_hits_box(o: &Vec3, d: &Vec3, min: &Vec3, max: &Vec3) -> bool {
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for a in 0..3 {
        let inv = 1.0 / d[a];
        let (mut n, mut f) = ((min[a] - o[a]) * inv, (max[a] - o[a]) * inv);
        if n > f {
            std::mem::swap(&mut n, &mut f);
        }
        t0 = t0.max(n);
        t1 = t1.min(f);
    }
    t0 <= t1
}

#[test]
fn inpainted_object_pixels_show_ground_checker() {
    let (spec, gt) = scene();
    let ground = spec.ground.clone().unwrap();
    let cfg = spec.sky_render_config();
    let cams = spec.cameras().unwrap();
    let full = render_dataset(&gt.full, &gt.object, &cams, &cfg, spec.meta()).unwrap();
    let voxel = spec.bounds.extent().x / (spec.resolution[0] - 1) as f64;
    let (lo, hi) = background_box(&spec);
    let mut checked = 0;
    for (i, view) in full.views.iter().enumerate() {
        let inpainted = oracle_inpaint(i, &full, &gt.background, &cfg).unwrap();
        let mask = view.mask.as_ref().unwrap();
        for py in 0..view.camera.height {
            for px in 0..view.camera.width {
                if !*mask.get(px, py) {
                    continue;
                }
                let ray = view.camera.ray(px, py, spec.near, spec.far).unwrap();
                let t = (ground.top - ray.origin.z) / ray.direction.z;
                let hit = ray.at(t);
                // The slab is opaque within about two voxels of its top.
                let exit = ray.at((ground.top - 2.0 * voxel - ray.origin.z) / ray.direction.z);
                let s = ground.checker_size;
                let parity =
                    |p: &Vec3| ((p.x / s).floor() as i64 + (p.y / s).floor() as i64).rem_euclid(2);
                let edge = |v: f64| {
                    let f = (v / s).rem_euclid(1.0) * s;
                    f.min(s - f)
                };
                let inside =
                    |p: Vec3| p.x.abs() < 1.0 - 2.0 * voxel && p.y.abs() < 1.0 - 2.0 * voxel;
                let interior = inside(hit) && inside(exit);
                if t <= 0.0
                    || !interior
                    || [hit, exit]
                        .iter()
                        .any(|p| edge(p.x) < 1.5 * voxel || edge(p.y) < 1.5 * voxel)
                    || parity(&hit) != parity(&exit)
                    || ray_hits_box(&ray.origin, &ray.direction, &lo, &hi)
                {
                    continue;
                }
                let want = if parity(&hit) == 0 {
                    ground.color_a
                } else {
                    ground.color_b
                };
                let got = inpainted.get(px, py);
                assert!(
                    (got - want).abs().max() < 0.02,
                    "view {i} ({px},{py}): {got:?} vs {want:?}"
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 500, "only {checked} pixels checked");
}

#[test]
fn dataset_files_round_trip() {
    let (spec, gt) = scene();
    let cams = spec.cameras().unwrap();
    let ds = render_dataset(
        &gt.object,
        &gt.object,
        &cams[..3],
        &spec.render_config(),
        spec.meta(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    save_dataset(&ds, &a).unwrap();
    let back = load_dataset(&a).unwrap();
    save_dataset(&back, &b).unwrap();
    for f in [
        "cameras.json",
        "meta.json",
        "images/000.png",
        "masks/002.png",
        "depth/001.pfm",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(back.cameras(), ds.cameras());
    assert_eq!(back.meta, ds.meta);
    std::fs::remove_file(a.join("cameras.json")).unwrap();
    let err = load_dataset(&a).unwrap_err().to_string();
    assert!(err.contains("cameras.json"), "{err}");
}

#[test]
fn generation_is_deterministic_and_role_separated() {
    let (spec, gt) = scene();
    assert_eq!(gt, generate_scene(&spec).unwrap());
    let empty = VoxelField::empty(spec.resolution, Aabb::cube(1.0)).unwrap();
    assert_ne!(gt.object.density(), empty.density());
    for i in 0..gt.full.len() {
        let (f, o, b) = (
            gt.full.density()[i],
            gt.object.density()[i],
            gt.background.density()[i],
        );
        assert!(f >= o.max(b));
    }
    let red = render_view(
        &gt.object,
        &spec.cameras().unwrap()[0],
        &spec
            .render_config()
            .with_background(Background::Color(Rgb::zeros())),
    )
    .unwrap();
    assert!(red.alpha.pixels().iter().any(|&a| a > 0.99));
}
