use crate::render::{Background, RaySamples, EMPTY_ALPHA};
use crate::Rgb;

/// Gradient of the loss with respect to a composited ray's outputs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompositeGrad {
    pub rgb: Rgb,
    pub alpha: f64,
    pub depth: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SampleGrad {
    pub density: f64,
    pub color: Rgb,
}

/// Exact gradients of [`composite_ray`](crate::render::composite_ray) with
/// respect to every sample's density and color.
///
/// Writing the outputs as functions of the weights, `L` depends on `w_i`
/// through `s_i = g_rgb . (c_i - bg) + g_alpha + g_depth (t_i - D) / A`.
/// Since `dw_i/dsigma_k` is `delta_k T_{k+1}` for `i = k` and
/// `-delta_k w_i` for `i > k`, the density gradient is
/// `delta_k (T_{k+1} s_k - sum_{i>k} w_i s_i)`, evaluated with a suffix sum.
pub fn backprop_ray(
    samples: &RaySamples,
    background: &Background,
    upstream: &CompositeGrad,
) -> Vec<SampleGrad> {
    let mut out = Vec::new();
    backprop_ray_into(samples, background, upstream, &mut out);
    out
}

pub(crate) fn backprop_ray_into(
    samples: &RaySamples,
    background: &Background,
    upstream: &CompositeGrad,
    out: &mut Vec<SampleGrad>,
) {
    let n = samples.samples.len();
    out.clear();
    out.resize(n, SampleGrad::default());
    if upstream.rgb == Rgb::zeros() && upstream.alpha == 0.0 && upstream.depth == 0.0 {
        return;
    }

    // Forward quantities: weights and transmittance after each sample.
    let mut weights = Vec::with_capacity(n);
    let mut t_after = Vec::with_capacity(n);
    let mut transmittance = 1.0;
    let mut alpha = 0.0;
    let mut depth_sum = 0.0;
    for s in &samples.samples {
        let a = 1.0 - (-s.density * s.delta).exp();
        let w = transmittance * a;
        weights.push(w);
        alpha += w;
        depth_sum += w * s.depth;
        transmittance *= 1.0 - a;
        t_after.push(transmittance);
    }
    let depth_active = alpha >= EMPTY_ALPHA;
    let depth = if depth_active { depth_sum / alpha } else { 0.0 };
    let bg = background.color();

    let mut suffix = 0.0;
    for k in (0..n).rev() {
        let s = &samples.samples[k];
        let mut sk = upstream.rgb.dot(&(s.color - bg)) + upstream.alpha;
        if depth_active {
            sk += upstream.depth * (s.depth - depth) / alpha;
        }
        out[k] = SampleGrad {
            density: s.delta * (t_after[k] * sk - suffix),
            color: upstream.rgb * weights[k],
        };
        suffix += weights[k] * sk;
    }
}
