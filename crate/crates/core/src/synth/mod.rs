//! Synthetic scenes with exact ground truth, the on-disk dataset format, the
//! oracle inpainter and evaluation metrics.

mod dataset;
pub mod io;
mod metrics;
mod scene;

pub use dataset::{
    oracle_inpaint, render_dataset, Channels, DatasetMeta, DatasetView, MultiViewDataset,
    DEPTH_VALID_ALPHA,
};
pub use io::{load_dataset, save_dataset};
pub use metrics::{edit_alignment, leakage, mask_from_alpha, mask_iou, psnr};
pub use scene::{
    generate_scene, CameraRig, GroundPlane, GroundTruth, Primitive, Role, SceneSpec, Shape,
    SIGMA_MAX,
};
