use serde::{Deserialize, Serialize};

use crate::{Error, Result, Rgb, Vec3};

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        if (0..3).any(|i| !(min[i] < max[i])) {
            return Err(Error::InvalidField(format!(
                "bounds min {:?} must be below max {:?}",
                min.as_slice(),
                max.as_slice()
            )));
        }
        Ok(Aabb { min, max })
    }

    pub fn cube(half: f64) -> Self {
        Aabb {
            min: Vec3::repeat(-half),
            max: Vec3::repeat(half),
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }
}

/// Location of a point inside the voxel lattice: index of the lower corner of
/// its interpolation cell and the fractional offsets along each axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub base: usize,
    pub frac: [f64; 3],
}

/// Dense grid of `(density, rgb)` values sampled at voxel centers.
///
/// Voxel `(x, y, z)` lives at flat index `x + nx * (y + ny * z)`. Colors are
/// stored interleaved, three entries per voxel.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelField {
    resolution: [usize; 3],
    bounds: Aabb,
    density: Vec<f64>,
    color: Vec<f64>,
}

impl VoxelField {
    pub fn filled(resolution: [usize; 3], bounds: Aabb, density: f64, color: Rgb) -> Result<Self> {
        if resolution.iter().any(|&n| n < 2) {
            return Err(Error::InvalidField(format!(
                "resolution {resolution:?} must be at least 2 per axis"
            )));
        }
        let bounds = Aabb::new(bounds.min, bounds.max)?;
        let n = resolution.iter().product::<usize>();
        let mut field = VoxelField {
            resolution,
            bounds,
            density: vec![density; n],
            color: color.as_slice().repeat(n),
        };
        field.clamp();
        Ok(field)
    }

    pub fn empty(resolution: [usize; 3], bounds: Aabb) -> Result<Self> {
        Self::filled(resolution, bounds, 0.0, Rgb::zeros())
    }

    /// Builds a field from raw arrays; values are clamped into range.
    pub fn from_parts(
        resolution: [usize; 3],
        bounds: Aabb,
        density: Vec<f64>,
        color: Vec<f64>,
    ) -> Result<Self> {
        let mut field = Self::empty(resolution, bounds)?;
        if density.len() != field.density.len() || color.len() != field.color.len() {
            return Err(Error::InvalidField(format!(
                "expected {} densities and {} color values, got {} and {}",
                field.density.len(),
                field.color.len(),
                density.len(),
                color.len()
            )));
        }
        if density.iter().chain(&color).any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("non-finite voxel value".into()));
        }
        field.density = density;
        field.color = color;
        field.clamp();
        Ok(field)
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn voxel_size(&self) -> Vec3 {
        let e = self.bounds.extent();
        Vec3::new(
            e.x / self.resolution[0] as f64,
            e.y / self.resolution[1] as f64,
            e.z / self.resolution[2] as f64,
        )
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.resolution[0] * (y + self.resolution[1] * z)
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.resolution;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    pub fn voxel_center(&self, index: usize) -> Vec3 {
        let c = self.coords(index);
        let size = self.voxel_size();
        Vec3::new(
            self.bounds.min.x + (c[0] as f64 + 0.5) * size.x,
            self.bounds.min.y + (c[1] as f64 + 0.5) * size.y,
            self.bounds.min.z + (c[2] as f64 + 0.5) * size.z,
        )
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn colors(&self) -> &[f64] {
        &self.color
    }

    pub fn density_mut(&mut self) -> &mut [f64] {
        &mut self.density
    }

    pub fn colors_mut(&mut self) -> &mut [f64] {
        &mut self.color
    }

    pub fn color_at(&self, index: usize) -> Rgb {
        Rgb::from_column_slice(&self.color[3 * index..3 * index + 3])
    }

    pub fn set_voxel(&mut self, index: usize, density: f64, color: Rgb) {
        self.density[index] = density.max(0.0);
        for c in 0..3 {
            self.color[3 * index + c] = color[c].clamp(0.0, 1.0);
        }
    }

    pub fn total_density(&self) -> f64 {
        self.density.iter().sum()
    }

    /// Restores the value invariants: densities non-negative, colors in `[0, 1]`.
    pub fn clamp(&mut self) {
        for d in &mut self.density {
            *d = d.max(0.0);
        }
        for c in &mut self.color {
            *c = c.clamp(0.0, 1.0);
        }
    }

    /// Interpolation cell for `p`, or `None` outside the bounds.
    ///
    /// Between the outermost voxel centers and the bounds the edge voxel
    /// value is held constant.
    #[inline]
    pub fn locate(&self, p: &Vec3) -> Option<Cell> {
        if !self.bounds.contains(p) {
            return None;
        }
        let mut idx = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let n = self.resolution[a];
            let u = (p[a] - self.bounds.min[a]) / (self.bounds.max[a] - self.bounds.min[a])
                * n as f64
                - 0.5;
            if u <= 0.0 {
                idx[a] = 0;
                frac[a] = 0.0;
            } else if u >= (n - 1) as f64 {
                idx[a] = n - 2;
                frac[a] = 1.0;
            } else {
                let i = (u.floor() as usize).min(n - 2);
                idx[a] = i;
                frac[a] = u - i as f64;
            }
        }
        Some(Cell {
            base: self.index(idx[0], idx[1], idx[2]),
            frac,
        })
    }

    /// Flat indices and trilinear weights of the eight corners of `cell`.
    #[inline]
    pub fn corners(&self, cell: &Cell) -> [(usize, f64); 8] {
        let [nx, ny, _] = self.resolution;
        let [fx, fy, fz] = cell.frac;
        let (sy, sz) = (nx, nx * ny);
        let b = cell.base;
        [
            (b, (1.0 - fx) * (1.0 - fy) * (1.0 - fz)),
            (b + 1, fx * (1.0 - fy) * (1.0 - fz)),
            (b + sy, (1.0 - fx) * fy * (1.0 - fz)),
            (b + sy + 1, fx * fy * (1.0 - fz)),
            (b + sz, (1.0 - fx) * (1.0 - fy) * fz),
            (b + sz + 1, fx * (1.0 - fy) * fz),
            (b + sz + sy, (1.0 - fx) * fy * fz),
            (b + sz + sy + 1, fx * fy * fz),
        ]
    }

    #[inline]
    pub fn evaluate(&self, cell: &Cell) -> (f64, Rgb) {
        let mut density = 0.0;
        let mut color = Rgb::zeros();
        for (i, w) in self.corners(cell) {
            density += w * self.density[i];
            color.x += w * self.color[3 * i];
            color.y += w * self.color[3 * i + 1];
            color.z += w * self.color[3 * i + 2];
        }
        (density, color)
    }

    /// Trilinear interpolation of density and color; `(0, black)` outside the bounds.
    #[inline]
    pub fn query(&self, p: &Vec3) -> (f64, Rgb) {
        match self.locate(p) {
            Some(cell) => self.evaluate(&cell),
            None => (0.0, Rgb::zeros()),
        }
    }
}

/// Gradient of a scalar loss with respect to every voxel parameter, laid out
/// like the field itself.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrad {
    pub density: Vec<f64>,
    pub color: Vec<f64>,
}

impl FieldGrad {
    pub fn zeros_like(field: &VoxelField) -> Self {
        FieldGrad {
            density: vec![0.0; field.len()],
            color: vec![0.0; 3 * field.len()],
        }
    }

    /// Distributes per-sample gradients to the eight corners of `cell`.
    #[inline]
    pub fn scatter(&mut self, field: &VoxelField, cell: &Cell, d_density: f64, d_color: &Rgb) {
        for (i, w) in field.corners(cell) {
            self.density[i] += w * d_density;
            self.color[3 * i] += w * d_color.x;
            self.color[3 * i + 1] += w * d_color.y;
            self.color[3 * i + 2] += w * d_color.z;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.density
            .iter()
            .chain(&self.color)
            .all(|v| v.is_finite())
    }
}
