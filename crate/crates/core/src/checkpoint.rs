//! Binary field checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! b"RCVF"        magic
//! u32            version (1)
//! u32 x 3        resolution nx, ny, nz
//! f32 x 6        bounds min xyz, max xyz
//! f32 x N        density, N = nx * ny * nz
//! f32 x 3N       color, interleaved rgb
//! ```
//!
//! Values are stored as `f32`. A field loaded from a checkpoint holds values
//! that are exactly representable in `f32`, so load followed by save
//! reproduces the file byte for byte.

use std::fs;
use std::path::Path;

use crate::scene::{Aabb, VoxelField};
use crate::{Error, Result, Vec3};

pub const MAGIC: &[u8; 4] = b"RCVF";
pub const VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 3 * 4 + 6 * 4;

pub fn encode_field(field: &VoxelField) -> Vec<u8> {
    let n = field.len();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for r in field.resolution() {
        out.extend_from_slice(&(r as u32).to_le_bytes());
    }
    let b = field.bounds();
    for v in b
        .min
        .iter()
        .chain(b.max.iter())
        .chain(field.density())
        .chain(field.colors())
    {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    name: &'a str,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::parse(self.name, what, "file truncated"));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let len = n
            .checked_mul(4)
            .ok_or_else(|| Error::parse(self.name, what, "size overflow"))?;
        Ok(self
            .take(len, what)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }
}

pub fn decode_field(bytes: &[u8], name: &str) -> Result<VoxelField> {
    let mut r = Reader {
        bytes,
        pos: 0,
        name,
    };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::parse(name, "magic", "not an RCVF checkpoint"));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::parse(
            name,
            "version",
            format!("unsupported version {version}"),
        ));
    }
    let mut res = [0usize; 3];
    for (i, axis) in ["resolution[0]", "resolution[1]", "resolution[2]"]
        .iter()
        .enumerate()
    {
        res[i] = r.u32(axis)? as usize;
    }
    let b = r.f32s(6, "bounds")?;
    let bounds = Aabb::new(Vec3::new(b[0], b[1], b[2]), Vec3::new(b[3], b[4], b[5]))
        .map_err(|e| Error::parse(name, "bounds", e.to_string()))?;
    let n = res
        .iter()
        .try_fold(1usize, |acc, &x| acc.checked_mul(x))
        .ok_or_else(|| Error::parse(name, "resolution", "size overflow"))?;
    let density = r.f32s(n, "density")?;
    let color = r.f32s(n.saturating_mul(3), "color")?;
    if r.pos != bytes.len() {
        return Err(Error::parse(
            name,
            "color",
            "trailing bytes after color array",
        ));
    }
    if density.iter().chain(&color).any(|v| !v.is_finite()) {
        return Err(Error::parse(name, "density", "non-finite voxel value"));
    }
    VoxelField::from_parts(res, bounds, density, color)
        .map_err(|e| Error::parse(name, "resolution", e.to_string()))
}

pub fn save_field(path: &Path, field: &VoxelField) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, encode_field(field)).map_err(|e| Error::io(path, e))
}

pub fn load_field(path: &Path) -> Result<VoxelField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_field(&bytes, &path.display().to_string())
}

/// Rounds every value through `f32`, giving the field a checkpoint would
/// reload as.
pub fn quantize(field: &VoxelField) -> VoxelField {
    let mut out = field.clone();
    for v in out.density_mut() {
        *v = *v as f32 as f64;
    }
    for v in out.colors_mut() {
        *v = *v as f32 as f64;
    }
    out
}
