use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::RenderConfig;
use crate::scene::Ray;
use crate::Rgb;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    Object,
    Background,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub depth: f64,
    pub delta: f64,
    pub density: f64,
    pub color: Rgb,
    pub source: Source,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RaySamples {
    pub near: f64,
    pub far: f64,
    pub samples: Vec<Sample>,
}

impl RaySamples {
    pub fn is_sorted(&self) -> bool {
        self.samples.windows(2).all(|w| w[0].depth <= w[1].depth)
    }

    pub fn depths(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.depth).collect()
    }
}

/// Independent jitter stream for one ray of one render.
pub fn ray_rng(seed: u64, ray_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ray_id);
    rng
}

/// Stratified depths over `[near, far]`: stratum centers, or one uniform
/// draw per stratum when jitter is on. Densities and colors are left empty.
pub fn sample_along_ray(ray: &Ray, cfg: &RenderConfig, ray_id: u64) -> RaySamples {
    let n = cfg.samples_per_ray;
    let width = (ray.far - ray.near) / n as f64;
    let mut depths = Vec::with_capacity(n);
    if cfg.jitter {
        let mut rng = ray_rng(cfg.rng_seed, ray_id);
        for i in 0..n {
            let u: f64 = rng.random();
            depths.push(ray.near + (i as f64 + u) * width);
        }
    } else {
        for i in 0..n {
            depths.push(ray.near + (i as f64 + 0.5) * width);
        }
    }
    let samples = (0..n)
        .map(|i| Sample {
            depth: depths[i],
            delta: if i + 1 < n {
                depths[i + 1] - depths[i]
            } else {
                width
            },
            density: 0.0,
            color: Rgb::zeros(),
            source: Source::Background,
        })
        .collect();
    RaySamples {
        near: ray.near,
        far: ray.far,
        samples,
    }
}

/// Depth-ordered union of two sorted sample lists. Equal depths keep the
/// sample from `first` ahead of the one from `second`.
pub fn merge_sorted(first: &[Sample], second: &[Sample]) -> Vec<Sample> {
    let mut out = Vec::with_capacity(first.len() + second.len());
    let (mut i, mut j) = (0, 0);
    while i < first.len() && j < second.len() {
        if second[j].depth < first[i].depth {
            out.push(second[j]);
            j += 1;
        } else {
            out.push(first[i]);
            i += 1;
        }
    }
    out.extend_from_slice(&first[i..]);
    out.extend_from_slice(&second[j..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;

    fn ray(near: f64, far: f64) -> Ray {
        Ray {
            origin: Vec3::zeros(),
            direction: Vec3::z(),
            near,
            far,
        }
    }

    #[test]
    fn two_strata_centers() {
        let s = sample_along_ray(&ray(0.0, 1.0), &RenderConfig::new(2, 0.0, 1.0), 0);
        assert_eq!(s.depths(), vec![0.25, 0.75]);
        assert_eq!(
            s.samples.iter().map(|s| s.delta).collect::<Vec<_>>(),
            vec![0.5, 0.5]
        );
    }

    #[test]
    fn four_strata_centers() {
        let s = sample_along_ray(&ray(1.0, 3.0), &RenderConfig::new(4, 1.0, 3.0), 0);
        assert_eq!(s.depths(), vec![1.25, 1.75, 2.25, 2.75]);
    }

    #[test]
    fn jitter_is_seeded_and_stays_in_strata() {
        let cfg = RenderConfig::new(16, 1.0, 3.0).with_jitter(42);
        let a = sample_along_ray(&ray(1.0, 3.0), &cfg, 7);
        let b = sample_along_ray(&ray(1.0, 3.0), &cfg, 7);
        assert_eq!(a, b);
        let c = sample_along_ray(&ray(1.0, 3.0), &cfg, 8);
        assert_ne!(a.depths(), c.depths());
        for (i, s) in a.samples.iter().enumerate() {
            let lo = 1.0 + i as f64 * 0.125;
            assert!(s.depth >= lo && s.depth < lo + 0.125);
            assert!(s.delta > 0.0);
        }
        assert!(a.is_sorted());
    }

    #[test]
    fn merge_orders_by_depth_background_first_on_ties() {
        let mk = |depth, source| Sample {
            depth,
            delta: 0.5,
            density: 0.0,
            color: Rgb::zeros(),
            source,
        };
        let bkg = [mk(0.5, Source::Background), mk(1.5, Source::Background)];
        let obj = [mk(1.0, Source::Object)];
        let merged = merge_sorted(&bkg, &obj);
        let order: Vec<_> = merged.iter().map(|s| (s.depth, s.source)).collect();
        assert_eq!(
            order,
            vec![
                (0.5, Source::Background),
                (1.0, Source::Object),
                (1.5, Source::Background)
            ]
        );
        let tie = merge_sorted(&[mk(1.0, Source::Background)], &[mk(1.0, Source::Object)]);
        assert_eq!(tie[0].source, Source::Background);
    }
}
