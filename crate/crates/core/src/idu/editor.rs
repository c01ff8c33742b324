use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::scene::RgbImage;
use crate::{Error, Result, Rgb};

pub type Params = BTreeMap<String, Value>;

/// A text instruction plus optional key-value parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditInstruction {
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: Params,
}

impl EditInstruction {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::InvalidEditorParams(
                "instruction text must be nonempty".into(),
            ));
        }
        Ok(EditInstruction {
            text,
            params: Params::new(),
        })
    }
}

/// Image-conditioned 2D editor. Called concurrently for distinct views.
///
/// `current` and `original` are composited over black. The result must have
/// the same dimensions with every channel in `[0, 1]`.
pub trait Editor: Send + Sync {
    fn edit(
        &self,
        current: &RgbImage,
        original: &RgbImage,
        instruction: &EditInstruction,
    ) -> Result<RgbImage>;
}

impl<E: Editor + ?Sized> Editor for Box<E> {
    fn edit(
        &self,
        current: &RgbImage,
        original: &RgbImage,
        instruction: &EditInstruction,
    ) -> Result<RgbImage> {
        (**self).edit(current, original, instruction)
    }
}

/// Procedural editors. They ignore the instruction text and are
/// deterministic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EditorKind {
    Identity,
    /// Moves each pixel a fraction `lambda` of the way to `target`.
    Recolor {
        target: Rgb,
        #[serde(default = "one")]
        lambda: f64,
    },
    /// Rotates hue by `degrees`, keeping saturation and value.
    HueShift {
        degrees: f64,
    },
    /// Scales every channel by `factor`, clamping to 1.
    Brighten {
        factor: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl EditorKind {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidEditorParams(m.into()));
        match *self {
            EditorKind::Identity => Ok(()),
            EditorKind::Recolor { target, lambda } => {
                if !target.iter().all(|c| (0.0..=1.0).contains(c)) {
                    return bad("recolor target must lie in [0, 1]^3");
                }
                if !(0.0..=1.0).contains(&lambda) {
                    return bad("recolor lambda must lie in [0, 1]");
                }
                Ok(())
            }
            EditorKind::HueShift { degrees } if !degrees.is_finite() => {
                bad("hue_shift degrees must be finite")
            }
            EditorKind::Brighten { factor } if !(factor >= 0.0 && factor.is_finite()) => {
                bad("brighten factor must be finite and non-negative")
            }
            _ => Ok(()),
        }
    }

    fn apply(&self, c: &Rgb) -> Rgb {
        match *self {
            EditorKind::Identity => *c,
            EditorKind::Recolor { target, lambda } => c + (target - c) * lambda,
            EditorKind::HueShift { degrees } => {
                let (h, s, v) = rgb_to_hsv(c);
                hsv_to_rgb((h + degrees).rem_euclid(360.0), s, v)
            }
            EditorKind::Brighten { factor } => (c * factor).map(|x| x.clamp(0.0, 1.0)),
        }
    }
}

impl Editor for EditorKind {
    fn edit(
        &self,
        current: &RgbImage,
        _original: &RgbImage,
        _instruction: &EditInstruction,
    ) -> Result<RgbImage> {
        if *self == EditorKind::Identity {
            return Ok(current.clone());
        }
        Ok(current.map(|c| self.apply(c)))
    }
}

/// Builds a procedural editor from a kind name and its parameters.
pub fn builtin_editor(kind: &str, params: &Params) -> Result<EditorKind> {
    if !matches!(kind, "identity" | "recolor" | "hue_shift" | "brighten") {
        return Err(Error::UnknownEditor(kind.to_string()));
    }
    if kind == "identity" && !params.is_empty() {
        return Err(Error::InvalidEditorParams(
            "identity takes no parameters".into(),
        ));
    }
    let mut obj = serde_json::Map::new();
    obj.insert("kind".into(), Value::String(kind.into()));
    obj.extend(params.iter().map(|(k, v)| (k.clone(), v.clone())));
    let editor: EditorKind = serde_json::from_value(Value::Object(obj))
        .map_err(|e| Error::InvalidEditorParams(format!("{kind}: {e}")))?;
    editor.validate()?;
    Ok(editor)
}

fn rgb_to_hsv(c: &Rgb) -> (f64, f64, f64) {
    let (max, min) = (c.max(), c.min());
    let d = max - min;
    let h = if d <= 0.0 {
        0.0
    } else if max == c.x {
        60.0 * ((c.y - c.z) / d).rem_euclid(6.0)
    } else if max == c.y {
        60.0 * ((c.z - c.x) / d + 2.0)
    } else {
        60.0 * ((c.x - c.y) / d + 4.0)
    };
    let s = if max > 0.0 { d / max } else { 0.0 };
    (h, s, max)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> Rgb {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    Rgb::new(r + m, g + m, b + m).map(|t| t.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn params(v: Value) -> Params {
        serde_json::from_value(v).unwrap()
    }

    fn instr() -> EditInstruction {
        EditInstruction::new("make it blue").unwrap()
    }

    fn run(e: &EditorKind, c: Rgb) -> Rgb {
        let img = RgbImage::filled(1, 1, c);
        *e.edit(&img, &img, &instr()).unwrap().get(0, 0)
    }

    #[test]
    fn identity_is_bit_exact() {
        let img = RgbImage::from_fn(5, 3, |x, y| {
            Rgb::new(x as f64 / 7.0, y as f64 / 3.0, 0.123456789)
        });
        let e = builtin_editor("identity", &Params::new()).unwrap();
        assert_eq!(e.edit(&img, &img, &instr()).unwrap(), img);
    }

    #[test]
    fn recolor_cases() {
        let full = builtin_editor(
            "recolor",
            &params(json!({"target": [0.0, 0.0, 1.0], "lambda": 1.0})),
        )
        .unwrap();
        assert_eq!(run(&full, Rgb::new(0.3, 0.7, 0.1)), Rgb::new(0.0, 0.0, 1.0));
        let half = builtin_editor(
            "recolor",
            &params(json!({"target": [0.0, 0.0, 1.0], "lambda": 0.5})),
        )
        .unwrap();
        assert_eq!(run(&half, Rgb::new(1.0, 0.0, 0.0)), Rgb::new(0.5, 0.0, 0.5));
    }

    #[test]
    fn hue_shift_rotates_primaries() {
        let e = builtin_editor("hue_shift", &params(json!({"degrees": 120.0}))).unwrap();
        assert!((run(&e, Rgb::new(1.0, 0.0, 0.0)) - Rgb::new(0.0, 1.0, 0.0)).norm() < 1e-12);
        assert!((run(&e, Rgb::new(0.0, 0.0, 0.8)) - Rgb::new(0.8, 0.0, 0.0)).norm() < 1e-12);
        let grey = Rgb::repeat(0.4);
        assert_eq!(run(&e, grey), grey);
        let back = builtin_editor("hue_shift", &params(json!({"degrees": -120.0}))).unwrap();
        let c = Rgb::new(0.9, 0.25, 0.1);
        assert!((run(&back, run(&e, c)) - c).norm() < 1e-12);
    }

    #[test]
    fn brighten_clamps() {
        let e = builtin_editor("brighten", &params(json!({"factor": 2.0}))).unwrap();
        assert_eq!(run(&e, Rgb::new(0.2, 0.6, 0.0)), Rgb::new(0.4, 1.0, 0.0));
    }

    #[test]
    fn rejects_bad_kinds_and_params() {
        assert!(
            matches!(builtin_editor("sharpen", &Params::new()), Err(Error::UnknownEditor(k)) if k == "sharpen")
        );
        for p in [
            json!({}),
            json!({"target": [0.0, 0.0, 2.0]}),
            json!({"target": [0, 0, 1], "lambda": 1.5}),
        ] {
            assert!(matches!(
                builtin_editor("recolor", &params(p)),
                Err(Error::InvalidEditorParams(_))
            ));
        }
        assert!(builtin_editor("brighten", &params(json!({"factor": -1.0}))).is_err());
        assert!(builtin_editor("identity", &params(json!({"x": 1}))).is_err());
        assert!(EditInstruction::new("  ").is_err());
    }
}
