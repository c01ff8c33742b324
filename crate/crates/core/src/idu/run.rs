use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    alpha_blend_black, apply_mask, EditInstruction, Editor, IduDataset, IduView, Segmenter,
};
use crate::optim::{StepStats, TrainConfig, Trainer};
use crate::scene::{RgbaImage, VoxelField};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IduSchedule {
    pub outer_iterations: usize,
    /// Edit rounds over every view per outer iteration.
    pub d: usize,
    /// Field updates per outer iteration. Zero leaves the field untouched.
    pub n: usize,
    pub rng_seed: u64,
}

impl Default for IduSchedule {
    fn default() -> Self {
        IduSchedule {
            outer_iterations: 5,
            d: 1,
            n: 200,
            rng_seed: 0,
        }
    }
}

impl IduSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.outer_iterations == 0 || self.d == 0 {
            return Err(Error::InvalidConfig(
                "outer_iterations and d must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// State after each outer iteration, passed to the progress callback.
#[derive(Debug)]
pub struct IduProgress<'a> {
    /// 1-based outer iteration.
    pub outer: usize,
    /// View indices in the order they were edited.
    pub order: &'a [usize],
    pub field: &'a VoxelField,
    pub dataset: &'a IduDataset,
    pub steps: &'a [StepStats],
}

#[derive(Clone, Debug)]
pub struct IduOutcome {
    pub field: VoxelField,
    pub dataset: IduDataset,
    /// Every field update, in order.
    pub trace: Vec<StepStats>,
    /// Number of edits applied to each view.
    pub edit_counts: Vec<usize>,
}

pub fn idu_run(
    field: VoxelField,
    dataset: IduDataset,
    editor: &dyn Editor,
    segmenter: &dyn Segmenter,
    instruction: &EditInstruction,
    schedule: &IduSchedule,
    train_cfg: &TrainConfig,
) -> Result<IduOutcome> {
    idu_run_with(
        field,
        dataset,
        editor,
        segmenter,
        instruction,
        schedule,
        train_cfg,
        |_| Ok(()),
    )
}

fn edit_view(
    view: &IduView,
    editor: &dyn Editor,
    segmenter: &dyn Segmenter,
    instruction: &EditInstruction,
) -> Result<(RgbaImage, crate::scene::MaskImage)> {
    let dims = view.current.dims();
    let current = alpha_blend_black(&view.current);
    let original = alpha_blend_black(&view.original);
    let edited = editor.edit(&current, &original, instruction)?;
    edited.ensure_dims(dims)?;
    if edited
        .pixels()
        .iter()
        .any(|c| c.iter().any(|v| !(0.0..=1.0).contains(v)))
    {
        return Err(Error::Editor(
            "edited image has channels outside [0, 1]".into(),
        ));
    }
    let mask = segmenter.segment(&edited, &view.mask)?;
    mask.ensure_dims(dims)?;
    Ok((apply_mask(&edited, &mask)?, mask))
}

/// Runs the edit/fit alternation.
///
/// Each outer iteration shuffles the views with the schedule RNG, edits every
/// view `d` times, then takes `n` steps on a single trainer that persists
/// across iterations. Rays are drawn uniformly over all current images.
/// `train_cfg.iterations` is ignored. Views within a round are edited in
/// parallel. A failing edit aborts the run with [`Error::ViewFailed`] naming
/// the first failing view in edit order. `on_iteration` runs after every
/// outer iteration and may abort the run by returning an error.
#[allow(clippy::too_many_arguments)]
pub fn idu_run_with(
    field: VoxelField,
    mut dataset: IduDataset,
    editor: &dyn Editor,
    segmenter: &dyn Segmenter,
    instruction: &EditInstruction,
    schedule: &IduSchedule,
    train_cfg: &TrainConfig,
    mut on_iteration: impl FnMut(&IduProgress<'_>) -> Result<()>,
) -> Result<IduOutcome> {
    schedule.validate()?;
    dataset.validate()?;
    if field.bounds() != &dataset.meta.bounds {
        return Err(Error::InvalidConfig(
            "field bounds differ from the dataset scene bounds".into(),
        ));
    }
    let mut trainer = Trainer::new(
        field,
        train_cfg.clone(),
        dataset.meta.near,
        dataset.meta.far,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.rng_seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut edit_counts = vec![0usize; dataset.len()];
    let mut trace = Vec::with_capacity(schedule.outer_iterations * schedule.n);
    for outer in 1..=schedule.outer_iterations {
        order.shuffle(&mut rng);
        for _ in 0..schedule.d {
            let results: Vec<Result<_>> = order
                .par_iter()
                .map(|&v| edit_view(&dataset.views[v], editor, segmenter, instruction))
                .collect();
            let mut updates = Vec::with_capacity(order.len());
            for (&v, r) in order.iter().zip(results) {
                match r {
                    Ok(u) => updates.push((v, u)),
                    Err(e) => {
                        return Err(Error::ViewFailed {
                            view: v,
                            source: Box::new(e),
                        })
                    }
                }
            }
            for (v, (image, mask)) in updates {
                dataset.views[v].current = image;
                dataset.views[v].mask = mask;
                edit_counts[v] += 1;
            }
        }
        let start = trace.len();
        {
            let views = dataset.train_views();
            for _ in 0..schedule.n {
                trace.push(trainer.step(&views)?);
            }
        }
        on_iteration(&IduProgress {
            outer,
            order: &order,
            field: trainer.field(),
            dataset: &dataset,
            steps: &trace[start..],
        })?;
    }
    Ok(IduOutcome {
        field: trainer.into_field(),
        dataset,
        trace,
        edit_counts,
    })
}
