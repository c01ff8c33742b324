use super::{Background, RaySamples};
use crate::Rgb;

/// Accumulated opacity below which a pixel's depth is reported as `far`.
pub const EMPTY_ALPHA: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Composite {
    pub rgb: Rgb,
    /// Sum of compositing weights.
    pub alpha: f64,
    /// Alpha-normalised expected depth, or `far` for empty rays.
    pub depth: f64,
    /// Transmittance left after the last sample.
    pub transmittance: f64,
}

/// Front-to-back emission-absorption compositing.
///
/// With `a_i = 1 - exp(-density_i * delta_i)` and `T_i = prod_{j<i} (1 - a_j)`
/// each sample receives weight `w_i = T_i a_i`; the background fills the
/// remaining `1 - sum w_i`.
pub fn composite_ray(samples: &RaySamples, background: &Background) -> Composite {
    debug_assert!(samples.is_sorted(), "samples must be sorted by depth");
    debug_assert!(
        samples.samples.iter().all(|s| s.delta > 0.0),
        "deltas must be positive"
    );
    let mut transmittance = 1.0;
    let mut rgb = Rgb::zeros();
    let mut alpha = 0.0;
    let mut depth_sum = 0.0;
    for s in &samples.samples {
        let a = 1.0 - (-s.density * s.delta).exp();
        let w = transmittance * a;
        rgb += s.color * w;
        alpha += w;
        depth_sum += w * s.depth;
        transmittance *= 1.0 - a;
    }
    if let Background::Color(bg) = background {
        rgb += bg * (1.0 - alpha);
    }
    let depth = if alpha < EMPTY_ALPHA {
        samples.far
    } else {
        depth_sum / alpha.max(1e-6)
    };
    Composite {
        rgb,
        alpha,
        depth,
        transmittance,
    }
}
