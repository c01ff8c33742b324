use crate::scene::Rgba;
use crate::Rgb;

/// Mean squared error over the three channels between a prediction
/// rendered over `bg` and the target composited over the same `bg`.
pub fn blended_photometric_loss(pred_rgb: &Rgb, target: &Rgba, bg: &Rgb) -> f64 {
    let diff = pred_rgb - target.over(bg);
    diff.norm_squared() / 3.0
}

pub fn depth_loss(pred_depth: f64, true_depth: f64, valid: bool) -> f64 {
    if valid {
        (pred_depth - true_depth).powi(2)
    } else {
        0.0
    }
}
