use crate::{Error, Result, Rgb};

/// Row-major raster of per-pixel values.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    width: u32,
    height: u32,
    pixels: Vec<T>,
}

/// Straight (non-premultiplied) color with coverage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rgba {
    pub rgb: Rgb,
    pub alpha: f64,
}

impl Rgba {
    pub fn new(rgb: Rgb, alpha: f64) -> Self {
        Rgba { rgb, alpha }
    }

    pub fn transparent() -> Self {
        Rgba {
            rgb: Rgb::zeros(),
            alpha: 0.0,
        }
    }

    /// Composites over an opaque `background`.
    pub fn over(&self, background: &Rgb) -> Rgb {
        self.rgb * self.alpha + background * (1.0 - self.alpha)
    }
}

pub type RgbImage = Image<Rgb>;
pub type RgbaImage = Image<Rgba>;
pub type GrayImage = Image<f64>;
/// Depth in world units; `0` marks pixels without a valid depth.
pub type DepthImage = Image<f64>;
pub type MaskImage = Image<bool>;

impl<T: Clone> Image<T> {
    pub fn filled(width: u32, height: u32, value: T) -> Self {
        Image {
            width,
            height,
            pixels: vec![value; width as usize * height as usize],
        }
    }
}

impl<T> Image<T> {
    pub fn from_pixels(width: u32, height: u32, pixels: Vec<T>) -> Result<Self> {
        if pixels.len() != width as usize * height as usize {
            return Err(Error::InvalidConfig(format!(
                "{} pixels do not fill a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> T) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Image {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [T] {
        &mut self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> &T {
        &self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: T) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = value;
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Image<U> {
        Image {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(f).collect(),
        }
    }

    pub fn ensure_dims(&self, expected: (u32, u32)) -> Result<()> {
        if self.dims() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

impl Image<Rgba> {
    pub fn rgb(&self) -> RgbImage {
        self.map(|p| p.rgb)
    }

    pub fn alpha(&self) -> GrayImage {
        self.map(|p| p.alpha)
    }

    pub fn is_valid(&self) -> bool {
        self.pixels.iter().all(|p| {
            (0.0..=1.0).contains(&p.alpha) && p.rgb.iter().all(|c| (0.0..=1.0).contains(c))
        })
    }
}

impl Image<bool> {
    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&m| m).count()
    }
}
