//! Losses, exact gradients of the compositor, Adam, and the field-fitting
//! loops for the object and background fields.

mod adam;
mod backprop;
mod loss;
mod train;

pub use adam::{adam_step, AdamState};
pub use backprop::{backprop_ray, CompositeGrad, SampleGrad};
pub use loss::{blended_photometric_loss, depth_loss};
pub use train::{
    batch_loss, batch_loss_and_grad, initial_field, train_background_field, train_object_field,
    train_object_field_from, Batch, BatchStats, RayTarget, StepStats, TrainBackground, TrainConfig,
    TrainOutcome, TrainView, Trainer,
};
