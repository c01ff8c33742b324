//! Iterative dataset update: alternate between editing every training view in
//! 2D and fitting the object field to the mixed old/new image set.

mod dataset;
mod editor;
mod run;
mod segment;

pub use dataset::{alpha_blend_black, apply_mask, IduDataset, IduView};
pub use editor::{builtin_editor, EditInstruction, Editor, EditorKind, Params};
pub use run::{idu_run, idu_run_with, IduOutcome, IduProgress, IduSchedule};
pub use segment::{AlphaThreshold, KnownMask, Segmenter};
