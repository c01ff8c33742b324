use crate::scene::{GrayImage, MaskImage, RgbImage};
use crate::{Error, Result, Rgb};

/// Peak signal-to-noise ratio for unit-range images, capped at 99 dB.
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    b.ensure_dims(a.dims())?;
    if a.is_empty() {
        return Err(Error::InvalidConfig("psnr of empty images".into()));
    }
    let se: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y).norm_squared())
        .sum();
    let mse = se / (3 * a.len()) as f64;
    if mse < 1e-10 {
        return Ok(99.0);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(99.0))
}

/// Mean rendered opacity over pixels outside the ground-truth mask.
pub fn leakage(alpha: &GrayImage, gt_mask: &MaskImage) -> Result<f64> {
    gt_mask.ensure_dims(alpha.dims())?;
    let (sum, n) = alpha
        .pixels()
        .iter()
        .zip(gt_mask.pixels())
        .filter(|(_, &m)| !m)
        .fold((0.0, 0usize), |(s, n), (&a, _)| (s + a, n + 1));
    if n == 0 {
        return Err(Error::NoBackgroundPixels);
    }
    Ok(sum / n as f64)
}

pub fn mask_from_alpha(alpha: &GrayImage, threshold: f64) -> MaskImage {
    alpha.map(|&a| a > threshold)
}

/// Intersection over union; two empty masks count as a perfect match.
pub fn mask_iou(a: &MaskImage, b: &MaskImage) -> Result<f64> {
    b.ensure_dims(a.dims())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.pixels().iter().zip(b.pixels()) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// Largest per-channel gap between a mean object color and the color an edit
/// asked for; 0 means perfectly aligned.
pub fn edit_alignment(mean_color: &Rgb, target: &Rgb) -> f64 {
    (mean_color - target).abs().max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Image;
    use crate::Rgb;

    #[test]
    fn edit_alignment_is_max_channel_gap() {
        let e = edit_alignment(&Rgb::new(0.1, 0.0, 0.9), &Rgb::new(0.0, 0.0, 1.0));
        assert!((e - 0.1).abs() < 1e-12);
    }

    #[test]
    fn psnr_cases() {
        let a = RgbImage::filled(4, 3, Rgb::repeat(0.5));
        let b = RgbImage::filled(4, 3, Rgb::zeros());
        assert_eq!(psnr(&a, &a).unwrap(), 99.0);
        assert!((psnr(&a, &b).unwrap() - 6.0206).abs() < 1e-4);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        assert!(matches!(
            psnr(&a, &RgbImage::filled(3, 4, Rgb::zeros())),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn leakage_cases() {
        let half = MaskImage::from_fn(4, 4, |x, _| x < 2);
        assert_eq!(leakage(&GrayImage::filled(4, 4, 0.0), &half).unwrap(), 0.0);
        assert_eq!(leakage(&GrayImage::filled(4, 4, 1.0), &half).unwrap(), 1.0);
        // 0.5 on half of the eight outside pixels
        let alpha = GrayImage::from_fn(4, 4, |x, y| if x >= 2 && y < 2 { 0.5 } else { 0.0 });
        assert!((leakage(&alpha, &half).unwrap() - 0.25).abs() < 1e-15);
        let full = MaskImage::filled(4, 4, true);
        assert!(matches!(
            leakage(&alpha, &full),
            Err(Error::NoBackgroundPixels)
        ));
    }

    #[test]
    fn threshold_cases() {
        assert_eq!(
            mask_from_alpha(&GrayImage::filled(2, 2, 0.0), 0.5).count(),
            0
        );
        assert_eq!(
            mask_from_alpha(&GrayImage::filled(2, 2, 1.0), 0.5).count(),
            4
        );
        let a = Image::filled(1, 1, 0.6);
        assert!(*mask_from_alpha(&a, 0.5).get(0, 0));
        assert!(!*mask_from_alpha(&a, 0.7).get(0, 0));
    }

    #[test]
    fn iou_cases() {
        let a = MaskImage::from_fn(4, 1, |x, _| x < 2);
        let b = MaskImage::from_fn(4, 1, |x, _| (1..3).contains(&x));
        assert!((mask_iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
    }
}
