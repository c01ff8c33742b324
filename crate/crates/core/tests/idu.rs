use std::sync::atomic::{AtomicUsize, Ordering};

use radiant_core::idu::{
    builtin_editor, idu_run, idu_run_with, AlphaThreshold, EditInstruction, Editor, IduDataset,
    IduSchedule, KnownMask, Params,
};
use radiant_core::optim::{initial_field, train_object_field, TrainConfig};
use radiant_core::scene::RgbImage;
use radiant_core::synth::{generate_scene, render_dataset, CameraRig, SceneSpec};
use radiant_core::{Error, Result, Rgb};
use serde_json::json;

fn setup() -> (SceneSpec, IduDataset, TrainConfig) {
    let spec = SceneSpec {
        resolution: [32; 3],
        image_width: 24,
        image_height: 24,
        samples_per_ray: 64,
        rig: CameraRig {
            count: 6,
            ..SceneSpec::default().rig
        },
        ..SceneSpec::default()
    };
    let gt = generate_scene(&spec).unwrap();
    let ds = render_dataset(
        &gt.object,
        &gt.object,
        &spec.cameras().unwrap(),
        &spec.render_config(),
        spec.meta(),
    )
    .unwrap();
    let cfg = TrainConfig {
        rays_per_batch: 256,
        resolution: spec.resolution,
        samples_per_ray: spec.samples_per_ray,
        rng_seed: 3,
        ..TrainConfig::default()
    };
    (spec, IduDataset::from_object_dataset(&ds).unwrap(), cfg)
}

fn instruction() -> EditInstruction {
    EditInstruction::new("turn it blue").unwrap()
}

fn identity() -> impl Editor {
    builtin_editor("identity", &Params::new()).unwrap()
}

#[test]
fn identity_edit_is_a_fixed_point_and_matches_plain_training() {
    let (spec, ds, cfg) = setup();
    let schedule = IduSchedule {
        outer_iterations: 3,
        d: 2,
        n: 4,
        rng_seed: 11,
    };
    let init = initial_field(spec.resolution, spec.bounds).unwrap();
    let out = idu_run(
        init,
        ds.clone(),
        &identity(),
        &KnownMask,
        &instruction(),
        &schedule,
        &cfg,
    )
    .unwrap();
    assert_eq!(out.dataset, ds);
    let plain = train_object_field(
        &ds.current_dataset(),
        &TrainConfig {
            iterations: 12,
            ..cfg
        },
    )
    .unwrap();
    assert_eq!(out.trace, plain.trace);
    assert_eq!(out.field, plain.field);
}

#[test]
fn no_field_updates_leaves_field_and_edits_each_view_once() {
    let (spec, ds, cfg) = setup();
    let editor = builtin_editor(
        "recolor",
        &serde_json::from_value(json!({"target": [0, 0, 1]})).unwrap(),
    )
    .unwrap();
    let schedule = IduSchedule {
        outer_iterations: 1,
        d: 1,
        n: 0,
        rng_seed: 0,
    };
    let init = initial_field(spec.resolution, spec.bounds).unwrap();
    let out = idu_run(
        init.clone(),
        ds.clone(),
        &editor,
        &KnownMask,
        &instruction(),
        &schedule,
        &cfg,
    )
    .unwrap();
    assert_eq!(out.field, init);
    assert_eq!(out.edit_counts, vec![1; ds.len()]);
    for (v, orig) in out.dataset.views.iter().zip(&ds.views) {
        assert_eq!(v.original, orig.original);
        for (p, m) in v.current.pixels().iter().zip(v.mask.pixels()) {
            if *m {
                assert_eq!(p.rgb, Rgb::new(0.0, 0.0, 1.0));
            }
        }
    }
}

/// Counts calls and checks they arrive with the right images.
struct Counting<'a> {
    calls: &'a AtomicUsize,
}

impl Editor for Counting<'_> {
    fn edit(
        &self,
        current: &RgbImage,
        original: &RgbImage,
        _: &EditInstruction,
    ) -> Result<RgbImage> {
        assert_eq!(current.dims(), original.dims());
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(current.map(|c| c * 0.9))
    }
}

#[test]
fn every_view_is_edited_d_times_per_iteration() {
    let (spec, ds, cfg) = setup();
    let calls = AtomicUsize::new(0);
    let schedule = IduSchedule {
        outer_iterations: 3,
        d: 2,
        n: 1,
        rng_seed: 5,
    };
    let mut orders = Vec::new();
    let out = idu_run_with(
        initial_field(spec.resolution, spec.bounds).unwrap(),
        ds.clone(),
        &Counting { calls: &calls },
        &AlphaThreshold::default(),
        &instruction(),
        &schedule,
        &cfg,
        |p| {
            let mut sorted = p.order.to_vec();
            sorted.sort();
            assert_eq!(sorted, (0..ds.len()).collect::<Vec<_>>());
            assert_eq!(p.steps.len(), 1);
            orders.push(p.order.to_vec());
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 3 * 2 * ds.len());
    assert_eq!(out.edit_counts, vec![6; ds.len()]);
    assert_eq!(orders.len(), 3);
    out.dataset.validate().unwrap();
}

#[test]
fn runs_are_deterministic() {
    let (spec, ds, cfg) = setup();
    let editor = builtin_editor(
        "hue_shift",
        &serde_json::from_value(json!({"degrees": 40.0})).unwrap(),
    )
    .unwrap();
    let schedule = IduSchedule {
        outer_iterations: 2,
        d: 1,
        n: 3,
        rng_seed: 9,
    };
    let run = || {
        idu_run(
            initial_field(spec.resolution, spec.bounds).unwrap(),
            ds.clone(),
            &editor,
            &AlphaThreshold::default(),
            &instruction(),
            &schedule,
            &cfg,
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.field, b.field);
    assert_eq!(a.dataset, b.dataset);
    assert_eq!(a.trace, b.trace);
}

struct FailOn(usize, usize);

impl Editor for FailOn {
    fn edit(&self, current: &RgbImage, _: &RgbImage, _: &EditInstruction) -> Result<RgbImage> {
        // Views are told apart by their masked pixel count.
        let count = current.pixels().iter().filter(|c| c.max() > 0.0).count();
        if count == self.0 {
            return Err(Error::Editor("model crashed".into()));
        }
        if count == self.1 {
            return Ok(RgbImage::filled(
                current.width() + 1,
                current.height(),
                Rgb::zeros(),
            ));
        }
        Ok(current.clone())
    }
}

#[test]
fn failures_name_the_view() {
    let (spec, ds, cfg) = setup();
    let schedule = IduSchedule {
        outer_iterations: 1,
        d: 1,
        n: 1,
        rng_seed: 0,
    };
    let counts: Vec<usize> = ds.views.iter().map(|v| v.mask.count()).collect();
    let target = (0..counts.len())
        .find(|&i| counts.iter().filter(|&&c| c == counts[i]).count() == 1)
        .unwrap();
    let init = initial_field(spec.resolution, spec.bounds).unwrap();
    let err = idu_run(
        init.clone(),
        ds.clone(),
        &FailOn(counts[target], usize::MAX),
        &KnownMask,
        &instruction(),
        &schedule,
        &cfg,
    )
    .unwrap_err();
    assert!(
        matches!(&err, Error::ViewFailed { view, source } if *view == target && matches!(**source, Error::Editor(_))),
        "{err}"
    );
    let err = idu_run(
        init,
        ds,
        &FailOn(usize::MAX, counts[target]),
        &KnownMask,
        &instruction(),
        &schedule,
        &cfg,
    )
    .unwrap_err();
    assert!(
        matches!(&err, Error::ViewFailed { view, source } if *view == target && matches!(**source, Error::DimensionMismatch { .. })),
        "{err}"
    );
}

#[test]
fn rejects_bad_schedules_and_mismatched_fields() {
    let (spec, ds, cfg) = setup();
    let init = initial_field(spec.resolution, spec.bounds).unwrap();
    let bad = IduSchedule {
        outer_iterations: 0,
        ..IduSchedule::default()
    };
    assert!(idu_run(
        init,
        ds.clone(),
        &identity(),
        &KnownMask,
        &instruction(),
        &bad,
        &cfg
    )
    .is_err());
    let other = initial_field(spec.resolution, radiant_core::scene::Aabb::cube(2.0)).unwrap();
    assert!(idu_run(
        other,
        ds,
        &identity(),
        &KnownMask,
        &instruction(),
        &IduSchedule::default(),
        &cfg
    )
    .is_err());
}
