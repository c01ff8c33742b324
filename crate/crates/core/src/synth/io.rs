//! Dataset directory format:
//!
//! ```text
//! images/NNN.png   8-bit RGBA (straight alpha) or RGB
//! masks/NNN.png    8-bit grayscale, 0 or 255
//! depth/NNN.pfm    32-bit float, little-endian, scale -1.0
//! cameras.json     [{fx, fy, cx, cy, width, height, cam_to_world: [16 row-major]}]
//! meta.json        {near, far, bounds: [[min], [max]]}
//! ```

use std::fs;
use std::path::Path;

use ::image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};
use nalgebra::Matrix4;
use serde_json::{json, Value};

use super::{Channels, DatasetMeta, DatasetView, MultiViewDataset};
use crate::scene::{Aabb, Camera, DepthImage, Image, MaskImage, RgbImage, Rgba, RgbaImage};
use crate::{Error, Result, Rgb, Vec3};

pub fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn from_u8(v: u8) -> f64 {
    v as f64 / 255.0
}

fn encode(
    path_hint: &Path,
    bytes: &[u8],
    w: u32,
    h: u32,
    color: ExtendedColorType,
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    ::image::codecs::png::PngEncoder::new(&mut out)
        .write_image(bytes, w, h, color)
        .map_err(|e| Error::Codec {
            path: path_hint.to_path_buf(),
            message: e.to_string(),
        })?;
    Ok(out)
}

pub fn encode_rgb_png(img: &RgbImage) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = img
        .pixels()
        .iter()
        .flat_map(|c| [to_u8(c.x), to_u8(c.y), to_u8(c.z)])
        .collect();
    encode(
        Path::new("<memory>"),
        &bytes,
        img.width(),
        img.height(),
        ExtendedColorType::Rgb8,
    )
}

pub fn encode_rgba_png(img: &RgbaImage) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = img
        .pixels()
        .iter()
        .flat_map(|p| {
            [
                to_u8(p.rgb.x),
                to_u8(p.rgb.y),
                to_u8(p.rgb.z),
                to_u8(p.alpha),
            ]
        })
        .collect();
    encode(
        Path::new("<memory>"),
        &bytes,
        img.width(),
        img.height(),
        ExtendedColorType::Rgba8,
    )
}

pub fn encode_mask_png(mask: &MaskImage) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = mask
        .pixels()
        .iter()
        .map(|&m| if m { 255 } else { 0 })
        .collect();
    encode(
        Path::new("<memory>"),
        &bytes,
        mask.width(),
        mask.height(),
        ExtendedColorType::L8,
    )
}

fn decode(bytes: &[u8], name: &Path) -> Result<DynamicImage> {
    ::image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| Error::Codec {
        path: name.to_path_buf(),
        message: e.to_string(),
    })
}

/// Decodes any PNG; color types without alpha decode as opaque.
pub fn decode_rgba_png(bytes: &[u8], name: &Path) -> Result<(RgbaImage, bool)> {
    let img = decode(bytes, name)?;
    let has_alpha = img.color().has_alpha();
    let rgba = img.to_rgba8();
    let pixels = rgba
        .pixels()
        .map(|p| {
            Rgba::new(
                Rgb::new(from_u8(p[0]), from_u8(p[1]), from_u8(p[2])),
                from_u8(p[3]),
            )
        })
        .collect();
    Ok((
        Image::from_pixels(rgba.width(), rgba.height(), pixels)?,
        has_alpha,
    ))
}

pub fn decode_rgb_png(bytes: &[u8], name: &Path) -> Result<RgbImage> {
    let rgb = decode(bytes, name)?.to_rgb8();
    let pixels = rgb
        .pixels()
        .map(|p| Rgb::new(from_u8(p[0]), from_u8(p[1]), from_u8(p[2])))
        .collect();
    Image::from_pixels(rgb.width(), rgb.height(), pixels)
}

/// Any nonzero gray value counts as inside the mask.
pub fn decode_mask_png(bytes: &[u8], name: &Path) -> Result<MaskImage> {
    let l = decode(bytes, name)?.to_luma8();
    Image::from_pixels(
        l.width(),
        l.height(),
        l.pixels().map(|p| p[0] > 127).collect(),
    )
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_rgb_png(path: &Path, img: &RgbImage) -> Result<()> {
    write(path, &encode_rgb_png(img)?)
}

pub fn read_rgb_png(path: &Path) -> Result<RgbImage> {
    decode_rgb_png(&read(path)?, path)
}

pub fn write_mask_png(path: &Path, mask: &MaskImage) -> Result<()> {
    write(path, &encode_mask_png(mask)?)
}

pub fn read_mask_png(path: &Path) -> Result<MaskImage> {
    decode_mask_png(&read(path)?, path)
}

/// Grayscale PFM, scanlines bottom to top.
pub fn encode_pfm(img: &DepthImage) -> Vec<u8> {
    let (w, h) = img.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    for y in (0..h).rev() {
        for x in 0..w {
            out.extend_from_slice(&(*img.get(x, y) as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8], name: &str) -> Result<DepthImage> {
    let bad = |field: &str, msg: &str| Error::parse(name, field, msg);
    let mut fields = Vec::new();
    let mut pos = 0;
    // Header: three whitespace-terminated tokens groups ("Pf", "w h", scale).
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("header", "truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1; // single whitespace byte before the raster
    if fields[0] != "Pf" {
        return Err(bad("header", "expected grayscale 'Pf' magic"));
    }
    let w: u32 = fields[1]
        .parse()
        .map_err(|_| bad("width", "not an integer"))?;
    let h: u32 = fields[2]
        .parse()
        .map_err(|_| bad("height", "not an integer"))?;
    let scale: f64 = fields[3]
        .parse()
        .map_err(|_| bad("scale", "not a number"))?;
    let little = scale < 0.0;
    let need = w as usize * h as usize * 4;
    let data = bytes
        .get(pos..pos + need)
        .ok_or_else(|| bad("raster", "truncated raster"))?;
    let mut img = DepthImage::filled(w, h, 0.0);
    for (i, chunk) in data.chunks_exact(4).enumerate() {
        let raw: [u8; 4] = chunk.try_into().expect("chunk of four");
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (x, row) = (i as u32 % w, i as u32 / w);
        img.set(x, h - 1 - row, v as f64);
    }
    Ok(img)
}

pub fn write_pfm(path: &Path, img: &DepthImage) -> Result<()> {
    write(path, &encode_pfm(img))
}

pub fn read_pfm(path: &Path) -> Result<DepthImage> {
    decode_pfm(&read(path)?, &path.display().to_string())
}

pub fn camera_to_json(c: &Camera) -> Value {
    let m = c.cam_to_world();
    let rows: Vec<f64> = (0..4)
        .flat_map(|r| (0..4).map(move |k| m[(r, k)]))
        .collect();
    json!({
        "fx": c.fx,
        "fy": c.fy,
        "cx": c.cx,
        "cy": c.cy,
        "width": c.width,
        "height": c.height,
        "cam_to_world": rows,
    })
}

fn num(v: &Value, file: &str, field: &str) -> Result<f64> {
    v.get(field)
        .ok_or_else(|| Error::parse(file, field, "missing"))?
        .as_f64()
        .ok_or_else(|| Error::parse(file, field, "not a number"))
}

fn vec3(v: &Value, file: &str, field: &str) -> Result<Vec3> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| Error::parse(file, field, "expected 3 numbers"))?;
    let mut out = Vec3::zeros();
    for (i, x) in arr.iter().enumerate() {
        out[i] = x
            .as_f64()
            .ok_or_else(|| Error::parse(file, field, "not a number"))?;
    }
    Ok(out)
}

pub fn camera_from_json(v: &Value, file: &str, index: usize) -> Result<Camera> {
    let field = |f: &str| format!("[{index}].{f}");
    let get = |f: &str| -> Result<f64> {
        num(v, file, f).map_err(|_| Error::parse(file, field(f), "missing or not a number"))
    };
    let int = |f: &str| -> Result<u32> {
        v.get(f)
            .and_then(Value::as_u64)
            .and_then(|x| u32::try_from(x).ok())
            .ok_or_else(|| Error::parse(file, field(f), "missing or not a non-negative integer"))
    };
    let rows = v
        .get("cam_to_world")
        .and_then(Value::as_array)
        .filter(|a| a.len() == 16)
        .ok_or_else(|| Error::parse(file, field("cam_to_world"), "expected 16 numbers"))?;
    let mut m = Matrix4::zeros();
    for (i, x) in rows.iter().enumerate() {
        m[(i / 4, i % 4)] = x
            .as_f64()
            .ok_or_else(|| Error::parse(file, field("cam_to_world"), "not a number"))?;
    }
    Camera::new(
        get("fx")?,
        get("fy")?,
        get("cx")?,
        get("cy")?,
        int("width")?,
        int("height")?,
        m,
    )
    .map_err(|e| Error::parse(file, field("cam_to_world"), e.to_string()))
}

pub fn meta_to_json(meta: &DatasetMeta) -> Value {
    json!({
        "near": meta.near,
        "far": meta.far,
        "bounds": [meta.bounds.min.as_slice(), meta.bounds.max.as_slice()],
    })
}

pub fn meta_from_json(v: &Value) -> Result<DatasetMeta> {
    let file = "meta.json";
    let bounds = v
        .get("bounds")
        .and_then(Value::as_array)
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::parse(file, "bounds", "expected [[min], [max]]"))?;
    let bounds = Aabb::new(
        vec3(&bounds[0], file, "bounds")?,
        vec3(&bounds[1], file, "bounds")?,
    )
    .map_err(|e| Error::parse(file, "bounds", e.to_string()))?;
    let meta = DatasetMeta {
        near: num(v, file, "near")?,
        far: num(v, file, "far")?,
        bounds,
    };
    if !(0.0 <= meta.near && meta.near < meta.far) {
        return Err(Error::parse(file, "near", "need 0 <= near < far"));
    }
    Ok(meta)
}

pub fn to_json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}

fn read_json(path: &Path, name: &str) -> Result<Value> {
    let bytes = fs::read(path).map_err(|e| {
        Error::parse(
            name,
            "<file>",
            format!("cannot read {}: {e}", path.display()),
        )
    })?;
    serde_json::from_slice(&bytes).map_err(|e| Error::parse(name, "<document>", e.to_string()))
}

pub fn view_name(index: usize) -> String {
    format!("{index:03}")
}

pub fn save_dataset(dataset: &MultiViewDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cameras: Vec<Value> = dataset
        .views
        .iter()
        .map(|v| camera_to_json(&v.camera))
        .collect();
    write(
        &dir.join("cameras.json"),
        &to_json_bytes(&Value::Array(cameras)),
    )?;
    write(
        &dir.join("meta.json"),
        &to_json_bytes(&meta_to_json(&dataset.meta)),
    )?;
    for (i, view) in dataset.views.iter().enumerate() {
        let name = view_name(i);
        let png = match dataset.channels {
            Channels::Rgba => encode_rgba_png(&view.image)?,
            Channels::Rgb => encode_rgb_png(&view.image.rgb())?,
        };
        write(&dir.join("images").join(format!("{name}.png")), &png)?;
        if let Some(mask) = &view.mask {
            write_mask_png(&dir.join("masks").join(format!("{name}.png")), mask)?;
        }
        if let Some(depth) = &view.depth {
            write_pfm(&dir.join("depth").join(format!("{name}.pfm")), depth)?;
        }
    }
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<MultiViewDataset> {
    let cameras = read_json(&dir.join("cameras.json"), "cameras.json")?;
    let cameras = cameras.as_array().ok_or_else(|| {
        Error::parse("cameras.json", "<document>", "expected an array of cameras")
    })?;
    let meta = meta_from_json(&read_json(&dir.join("meta.json"), "meta.json")?)?;
    let mut views = Vec::with_capacity(cameras.len());
    let mut channels = None;
    for (i, cam) in cameras.iter().enumerate() {
        let camera = camera_from_json(cam, "cameras.json", i)?;
        let name = view_name(i);
        let img_path = dir.join("images").join(format!("{name}.png"));
        let (image, has_alpha) = decode_rgba_png(&read(&img_path)?, &img_path)?;
        let this = if has_alpha {
            Channels::Rgba
        } else {
            Channels::Rgb
        };
        if *channels.get_or_insert(this) != this {
            return Err(Error::parse(
                format!("images/{name}.png"),
                "color type",
                "mixes rgb and rgba images",
            ));
        }
        let mask_path = dir.join("masks").join(format!("{name}.png"));
        let mask = if mask_path.exists() {
            Some(read_mask_png(&mask_path)?)
        } else {
            None
        };
        let depth_path = dir.join("depth").join(format!("{name}.pfm"));
        let depth = if depth_path.exists() {
            Some(read_pfm(&depth_path)?)
        } else {
            None
        };
        let view = DatasetView {
            image,
            camera,
            mask,
            depth,
        };
        let dims = (view.camera.width, view.camera.height);
        view.image
            .ensure_dims(dims)
            .map_err(|e| Error::parse(format!("images/{name}.png"), "dimensions", e.to_string()))?;
        if let Some(m) = &view.mask {
            m.ensure_dims(dims).map_err(|e| {
                Error::parse(format!("masks/{name}.png"), "dimensions", e.to_string())
            })?;
        }
        if let Some(d) = &view.depth {
            d.ensure_dims(dims).map_err(|e| {
                Error::parse(format!("depth/{name}.pfm"), "dimensions", e.to_string())
            })?;
        }
        views.push(view);
    }
    Ok(MultiViewDataset {
        channels: channels.unwrap_or(Channels::Rgb),
        views,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfm_round_trip_keeps_orientation() {
        let img = DepthImage::from_fn(3, 2, |x, y| (x + 10 * y) as f64 + 0.25);
        let back = decode_pfm(&encode_pfm(&img), "t.pfm").unwrap();
        assert_eq!(back, img);
        assert!(encode_pfm(&img).starts_with(b"Pf\n3 2\n-1.0\n"));
    }

    #[test]
    fn png_round_trip_is_bit_exact_for_8_bit_values() {
        let img = RgbImage::from_fn(5, 4, |x, y| {
            Rgb::new(from_u8((x * 40) as u8), from_u8((y * 60) as u8), from_u8(7))
        });
        let back = decode_rgb_png(&encode_rgb_png(&img).unwrap(), Path::new("x")).unwrap();
        assert_eq!(back, img);
        let mask = MaskImage::from_fn(5, 4, |x, y| (x + y) % 2 == 0);
        assert_eq!(
            decode_mask_png(&encode_mask_png(&mask).unwrap(), Path::new("m")).unwrap(),
            mask
        );
    }

    #[test]
    fn truncated_pfm_is_rejected() {
        let img = DepthImage::filled(4, 4, 1.0);
        let bytes = encode_pfm(&img);
        assert!(decode_pfm(&bytes[..bytes.len() - 3], "d.pfm").is_err());
        assert!(decode_pfm(b"PF\n1 1\n-1.0\n0000", "d.pfm").is_err());
    }
}
