//! Pipeline configuration: one JSON document, defaults for every field, and
//! dot-path overrides from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use radiant_bridge::RemoteEndpoint;
use radiant_core::idu::{EditorKind, IduSchedule};
use radiant_core::optim::{TrainBackground, TrainConfig};
use radiant_core::synth::SceneSpec;
use radiant_core::{Rgb, Vec3};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Every stage seed is derived from this one.
    pub seed: u64,
    pub out: PathBuf,
    pub scene: SceneSpec,
    /// JSON scene file replacing `scene` when set.
    pub scene_file: Option<PathBuf>,
    pub inpaint: InpaintConfig,
    pub object_train: TrainConfig,
    /// The background is always fit against the scene's sky color, so the
    /// `background` field here is ignored.
    pub background_train: TrainConfig,
    pub idu: IduSchedule,
    pub instruction: String,
    pub editor: EditorConfig,
    pub segmenter: SegmenterConfig,
    pub compose: ComposeConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out: PathBuf::from("out"),
            scene: SceneSpec::default(),
            scene_file: None,
            inpaint: InpaintConfig::Oracle,
            object_train: TrainConfig::default(),
            background_train: TrainConfig {
                depth_loss_weight: 0.1,
                ..TrainConfig::default()
            },
            idu: IduSchedule::default(),
            instruction: "turn the object blue".into(),
            editor: EditorConfig::Builtin(EditorKind::Recolor {
                target: Rgb::new(0.0, 0.0, 1.0),
                lambda: 1.0,
            }),
            segmenter: SegmenterConfig::KnownMask,
            compose: ComposeConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InpaintConfig {
    /// Render the ground-truth background field.
    Oracle,
    Remote {
        endpoint: RemoteEndpoint,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemoteTag {
    Remote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EditorConfig {
    Remote {
        kind: RemoteTag,
        endpoint: RemoteEndpoint,
    },
    Builtin(EditorKind),
}

impl EditorConfig {
    pub fn name(&self) -> String {
        match self {
            EditorConfig::Remote { endpoint, .. } => format!("remote {}", endpoint.base_url),
            EditorConfig::Builtin(kind) => serde_json::to_string(kind).expect("editor serializes"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmenterConfig {
    KnownMask,
    AlphaThreshold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformConfig {
    pub scale: f64,
    pub axis: Vec3,
    pub angle_deg: f64,
    pub translation: Vec3,
    /// Pivot; the object's density-weighted centroid when unset.
    pub centroid: Option<Vec3>,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            scale: 1.0,
            axis: Vec3::z(),
            angle_deg: 0.0,
            translation: Vec3::zeros(),
            centroid: None,
        }
    }
}

/// Paths are relative to the output directory unless absolute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComposeConfig {
    pub object_field: PathBuf,
    pub background_field: PathBuf,
    pub transform: TransformConfig,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        ComposeConfig {
            object_field: PathBuf::from("fields/object_edited.rcvf"),
            background_field: PathBuf::from("fields/background.rcvf"),
            transform: TransformConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Directory of rendered PNGs to score.
    pub renders: PathBuf,
    /// Dataset directory holding the reference images, cameras and masks.
    pub reference: PathBuf,
    /// Field whose opacity is scored for leakage and mask overlap.
    pub object_field: PathBuf,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            renders: PathBuf::from("compose/rgb"),
            reference: PathBuf::from("data/full"),
            object_field: PathBuf::from("fields/object_edited.rcvf"),
        }
    }
}

impl PipelineConfig {
    pub fn object_train_config(&self) -> TrainConfig {
        TrainConfig {
            rng_seed: self.seed,
            ..self.object_train.clone()
        }
    }

    pub fn background_train_config(&self, sky: Rgb) -> TrainConfig {
        TrainConfig {
            rng_seed: self.seed.wrapping_add(1),
            background: TrainBackground::Color(sky),
            ..self.background_train.clone()
        }
    }

    pub fn idu_train_config(&self) -> TrainConfig {
        TrainConfig {
            rng_seed: self.seed.wrapping_add(2),
            ..self.object_train.clone()
        }
    }

    pub fn idu_schedule(&self) -> IduSchedule {
        IduSchedule {
            rng_seed: self.seed.wrapping_add(3),
            ..self.idu
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out.join(p)
        }
    }

    pub fn validate(&self) -> CliResult {
        let bad = |m: String| Err(CliError::Input(m));
        self.scene.validate()?;
        self.object_train.validate()?;
        self.background_train.validate()?;
        self.idu.validate()?;
        if self.instruction.trim().is_empty() {
            return bad("instruction must be nonempty".into());
        }
        if let EditorConfig::Builtin(kind) = &self.editor {
            kind.validate()?;
        }
        if let Some(p) = &self.scene_file {
            if !p.exists() {
                return Err(CliError::missing("scene file", p));
            }
        }
        Ok(())
    }
}

/// Parses a command-line value as JSON, falling back to a plain string.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Tagged objects whose `kind` changes are replaced, not merged, so fields of
/// the old variant do not leak into the new one.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p))
            if p.get("kind").is_none_or(|k| b.get("kind") == Some(k)) =>
        {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) -> CliResult {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Input(format!("malformed option --{path}")));
    }
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let obj = match node {
            Value::Object(m) => m,
            _ => {
                return Err(CliError::Input(format!(
                    "--{path}: {} is not an object",
                    keys[..i].join(".")
                )))
            }
        };
        if i + 1 == keys.len() {
            if *key == "kind" && obj.get("kind") != Some(&value) {
                obj.clear();
            }
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        if node.is_null() {
            *node = Value::Object(Map::new());
        }
    }
    unreachable!("path has at least one key")
}

/// Defaults, then the config file, then `overrides` in order.
pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> CliResult<PipelineConfig> {
    let mut value = serde_json::to_value(PipelineConfig::default()).expect("defaults serialize");
    if let Some(path) = file {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let patch: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if !patch.is_object() {
            return Err(CliError::Input(format!(
                "{}: expected a JSON object",
                path.display()
            )));
        }
        merge(&mut value, patch);
    }
    for (path, raw) in overrides {
        set_path(&mut value, path, parse_value(raw))?;
    }
    let mut cfg: PipelineConfig = serde_json::from_value(value)
        .map_err(|e| CliError::Input(format!("invalid configuration: {e}")))?;
    if let Some(p) = &cfg.scene_file {
        let text = fs::read_to_string(p).map_err(|_| CliError::missing("scene file", p))?;
        cfg.scene = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = load(None, &[]).unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn dot_path_overrides() {
        let cfg = load(
            None,
            &ov(&[
                ("idu.d", "2"),
                ("object_train.learning_rate", "0.1"),
                ("instruction", "make it gold"),
                ("compose.transform.translation", "[0.1, 0, 0]"),
                ("compose.transform.centroid", "[0, 0, 0]"),
                ("editor.kind", "hue_shift"),
                ("editor.degrees", "30"),
            ]),
        )
        .unwrap();
        assert_eq!(cfg.idu.d, 2);
        assert_eq!(cfg.object_train.learning_rate, 0.1);
        assert_eq!(cfg.instruction, "make it gold");
        assert_eq!(cfg.compose.transform.translation, Vec3::new(0.1, 0.0, 0.0));
        assert_eq!(cfg.compose.transform.centroid, Some(Vec3::zeros()));
        assert_eq!(
            cfg.editor,
            EditorConfig::Builtin(EditorKind::HueShift { degrees: 30.0 })
        );
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"idu": {"n": 7, "d": 3}, "editor": {"kind": "remote", "endpoint": {"base_url": "http://127.0.0.1:9"}}}"#).unwrap();
        let cfg = load(Some(&path), &ov(&[("idu.d", "4")])).unwrap();
        assert_eq!((cfg.idu.n, cfg.idu.d, cfg.idu.outer_iterations), (7, 4, 5));
        assert!(matches!(cfg.editor, EditorConfig::Remote { .. }));
    }

    #[test]
    fn changing_kind_replaces_the_variant() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"editor": {"kind": "brighten", "factor": 1.5}}"#).unwrap();
        let cfg = load(Some(&path), &[]).unwrap();
        assert_eq!(
            cfg.editor,
            EditorConfig::Builtin(EditorKind::Brighten { factor: 1.5 })
        );
        let cfg = load(None, &ov(&[("editor.lambda", "0.25")])).unwrap();
        assert!(
            matches!(cfg.editor, EditorConfig::Builtin(EditorKind::Recolor { lambda, .. }) if lambda == 0.25)
        );
    }

    #[test]
    fn typos_are_rejected() {
        assert!(load(None, &ov(&[("idu.dd", "2")])).is_err());
        assert!(load(None, &ov(&[("object_train.iterations", "many")])).is_err());
        assert!(load(None, &ov(&[("bogus", "1")])).is_err());
        assert!(load(None, &ov(&[("idu..d", "1")])).is_err());
        assert!(load(None, &ov(&[("seed.x", "1")])).is_err());
    }

    #[test]
    fn stage_seeds_follow_the_global_seed() {
        let cfg = PipelineConfig {
            seed: 10,
            ..PipelineConfig::default()
        };
        assert_eq!(cfg.object_train_config().rng_seed, 10);
        assert_eq!(cfg.background_train_config(Rgb::zeros()).rng_seed, 11);
        assert_eq!(cfg.idu_train_config().rng_seed, 12);
        assert_eq!(cfg.idu_schedule().rng_seed, 13);
    }
}
