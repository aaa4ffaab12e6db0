//! JSON scene documents: parsing, validation, key-path overrides and binding
//! of image files into a [`Scene`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::compositor::{CompositeError, Scene, ShadeParams, ShadowMode};
use crate::illum::{LightSpec, RampParams};
use crate::image::{load_image, Image, ImageError};
use crate::optics::{FresnelParams, OpticsParams, RefractionMode};
use crate::shadow::ShadowParams;
use crate::shape::{decode_normal_map, depth_to_shape_with, GradientSign, ShapeError, ShapeKind, DEFAULT_HEIGHT_SCALE};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{key}: {message}")]
    Range { key: String, message: String },
    #[error("bad override key {key:?}: {message}")]
    OverrideKey { key: String, message: String },
    #[error("{key}: {source}")]
    Image { key: &'static str, source: ImageError },
    #[error("{key}: {source}")]
    Shape { key: &'static str, source: ShapeError },
    #[error("missing image {key:?}")]
    MissingImage { key: &'static str },
    #[error(transparent)]
    Composite(#[from] CompositeError),
}

fn default_shape_kind() -> ShapeKind {
    ShapeKind::NormalMap
}

fn default_height_scale() -> f64 {
    DEFAULT_HEIGHT_SCALE
}

/// A scene document. Image fields hold paths relative to the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDoc {
    pub shape: String,
    #[serde(default = "default_shape_kind")]
    pub shape_kind: ShapeKind,
    /// Depth-map height multiplier, scene units.
    #[serde(default = "default_height_scale")]
    pub height_scale: f64,
    #[serde(default)]
    pub gradient_sign: GradientSign,
    pub i0: String,
    pub i1: String,
    pub env: String,
    pub bg: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_color: Option<String>,
    pub lights: Vec<LightSpec>,
    #[serde(default)]
    pub params: ParamsDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsDoc {
    pub diffuse_ramp: RampParams,
    pub spec_ramp: RampParams,
    pub global_ramp: RampParams,
    pub shadow: ShadowDoc,
    pub optics: OpticsDoc,
    pub fresnel: FresnelParams,
    pub env_blur: f64,
    pub bg_blur: f64,
    pub shadow_mode: ShadowMode,
}

impl Default for ParamsDoc {
    fn default() -> Self {
        let p = ShadeParams::default();
        Self {
            diffuse_ramp: p.diffuse_ramp,
            spec_ramp: p.spec_ramp,
            global_ramp: p.global_ramp,
            shadow: ShadowDoc::default(),
            optics: OpticsDoc::default(),
            fresnel: p.fresnel,
            env_blur: p.env_blur,
            bg_blur: p.bg_blur,
            shadow_mode: p.shadow_mode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShadowDoc {
    pub enabled: bool,
    pub d: f64,
    pub a: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

impl Default for ShadowDoc {
    fn default() -> Self {
        let s = ShadowParams::default();
        Self { enabled: false, d: s.d, a: s.a, k: s.max_steps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticsDoc {
    pub eta: f64,
    pub mu: f64,
    pub refraction_mode: RefractionMode,
    pub d_env: f64,
    pub d_bg: f64,
    /// Warp clamp in pixels; `None` means a quarter of the shape width.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_offset: Option<f64>,
}

impl Default for OpticsDoc {
    fn default() -> Self {
        let o = OpticsParams::default();
        Self { eta: o.eta, mu: o.mu, refraction_mode: o.refraction_mode, d_env: o.d_env, d_bg: o.d_bg, max_offset: None }
    }
}

/// Parses and validates a scene document.
pub fn parse_scene(text: &str) -> Result<SceneDoc, SceneError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: SceneDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = if path.is_empty() || path == "." { inner.to_string() } else { format!("{path}: {inner}") };
        SceneError::Parse { line: inner.line(), column: inner.column(), message }
    })?;
    validate(&doc)?;
    Ok(doc)
}

/// Parses a document already held as a JSON value.
pub fn scene_from_value(value: &Value) -> Result<SceneDoc, SceneError> {
    parse_scene(&value.to_string())
}

/// Serializes a document with every default spelled out.
pub fn to_json(doc: &SceneDoc) -> String {
    serde_json::to_string_pretty(doc).expect("scene documents serialize")
}

fn range(key: &str, message: impl Into<String>) -> SceneError {
    SceneError::Range { key: key.to_string(), message: message.into() }
}

fn check(ok: bool, key: &str, message: &str) -> Result<(), SceneError> {
    if ok {
        Ok(())
    } else {
        Err(range(key, message))
    }
}

fn check_ramp(r: &RampParams, key: &str) -> Result<(), SceneError> {
    check(r.t0.is_finite() && r.t1.is_finite(), key, "ramp bounds must be finite")?;
    check(r.t0 <= r.t1, key, "t0 must not exceed t1")
}

fn unit_interval(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

/// Checks every numeric range; errors name the offending key path.
pub fn validate(doc: &SceneDoc) -> Result<(), SceneError> {
    check(doc.height_scale.is_finite() && doc.height_scale >= 0.0, "height_scale", "must be >= 0")?;
    check(!doc.lights.is_empty(), "lights", "at least one light is required")?;
    for (i, light) in doc.lights.iter().enumerate() {
        match *light {
            LightSpec::Directional { direction, .. } => {
                let key = format!("lights.{i}.direction");
                check(direction.is_finite() && direction.length() > 1e-12, &key, "must be a nonzero vector")?;
            }
            LightSpec::Point { position, .. } => {
                check(position.is_finite(), &format!("lights.{i}.position"), "must be finite")?;
            }
        }
        check(light.color().iter().all(|&c| unit_interval(c)), &format!("lights.{i}.color"), "components must lie in [0, 1]")?;
    }
    let p = &doc.params;
    check_ramp(&p.diffuse_ramp, "params.diffuse_ramp")?;
    check_ramp(&p.spec_ramp, "params.spec_ramp")?;
    check_ramp(&p.global_ramp, "params.global_ramp")?;
    check(p.shadow.d.is_finite() && p.shadow.d > 0.0, "params.shadow.d", "must be > 0")?;
    check(p.shadow.a.is_finite() && p.shadow.a > 0.0, "params.shadow.a", "must be > 0")?;
    check(p.shadow.k >= 1, "params.shadow.K", "must be >= 1")?;
    let o = &p.optics;
    check(o.eta.is_finite() && o.eta > 0.0, "params.optics.eta", "must be > 0")?;
    check((-1.0..=1.0).contains(&o.mu), "params.optics.mu", "must lie in [-1, 1]")?;
    check(o.d_env.is_finite() && o.d_env > 0.0, "params.optics.d_env", "must be > 0")?;
    check(o.d_bg.is_finite() && o.d_bg > 0.0, "params.optics.d_bg", "must be > 0")?;
    if let Some(m) = o.max_offset {
        check(m.is_finite() && m >= 0.0, "params.optics.max_offset", "must be >= 0")?;
    }
    let f = &p.fresnel;
    check(unit_interval(f.fixed_f), "params.fresnel.fixed_f", "must lie in [0, 1]")?;
    check(unit_interval(f.sp_weight), "params.fresnel.sp_weight", "must lie in [0, 1]")?;
    check((0.0..1.0).contains(&f.x0), "params.fresnel.x0", "must lie in [0, 1)")?;
    check(f.x1 > f.x0 && f.x1 <= 1.0, "params.fresnel.x1", "must satisfy x0 < x1 <= 1")?;
    check((-1.0..=1.0).contains(&f.blend), "params.fresnel.blend", "must lie in [-1, 1]")?;
    check(p.env_blur.is_finite() && p.env_blur >= 0.0, "params.env_blur", "must be >= 0")?;
    check(p.bg_blur.is_finite() && p.bg_blur >= 0.0, "params.bg_blur", "must be >= 0")?;
    Ok(())
}

impl ParamsDoc {
    /// Resolves document parameters for a shape `shape_width` pixels wide.
    pub fn to_shade_params(&self, shape_width: usize) -> ShadeParams {
        ShadeParams {
            diffuse_ramp: self.diffuse_ramp,
            spec_ramp: self.spec_ramp,
            global_ramp: self.global_ramp,
            shadow: ShadowParams { d: self.shadow.d, a: self.shadow.a, max_steps: self.shadow.k, ramp: self.diffuse_ramp },
            shadow_enabled: self.shadow.enabled,
            shadow_mode: self.shadow_mode,
            optics: OpticsParams {
                eta: self.optics.eta,
                mu: self.optics.mu,
                refraction_mode: self.optics.refraction_mode,
                d_env: self.optics.d_env,
                d_bg: self.optics.d_bg,
                max_offset: self.optics.max_offset.unwrap_or(shape_width as f64 / 4.0),
            },
            fresnel: self.fresnel,
            env_blur: self.env_blur,
            bg_blur: self.bg_blur,
        }
    }
}

/// A loaded, render-ready scene.
#[derive(Debug, Clone)]
pub struct LoadedScene {
    pub scene: Scene,
    pub lights: Vec<LightSpec>,
    pub params: ShadeParams,
}

/// Binds a document to images looked up by key (`"shape"`, `"i0"`, ...) and path.
pub fn load_scene_with<F>(doc: &SceneDoc, mut fetch: F) -> Result<LoadedScene, SceneError>
where
    F: FnMut(&'static str, &str) -> Result<Option<Image>, ImageError>,
{
    let mut get = |key: &'static str, path: &str| -> Result<Image, SceneError> {
        fetch(key, path).map_err(|source| SceneError::Image { key, source })?.ok_or(SceneError::MissingImage { key })
    };
    let shape_img = get("shape", &doc.shape)?;
    let shape = match doc.shape_kind {
        ShapeKind::NormalMap => decode_normal_map(&shape_img),
        ShapeKind::DepthMap => depth_to_shape_with(&shape_img, doc.height_scale, doc.gradient_sign),
    }
    .map_err(|source| SceneError::Shape { key: "shape", source })?;
    let i0 = get("i0", &doc.i0)?;
    let i1 = get("i1", &doc.i1)?;
    let env = get("env", &doc.env)?;
    let bg = get("bg", &doc.bg)?;
    let ks = match &doc.ks {
        Some(p) => Some(to_gray(&get("ks", p)?)),
        None => None,
    };
    let spec_color = match &doc.spec_color {
        Some(p) => Some(get("spec_color", p)?),
        None => None,
    };
    let width = shape.width();
    let scene = Scene::new(shape, i0, i1, env, bg, ks, spec_color)?;
    let lights = doc
        .lights
        .iter()
        .map(|l| match *l {
            LightSpec::Directional { direction, color } => {
                LightSpec::directional(direction, color).expect("validated direction")
            }
            other => other,
        })
        .collect();
    Ok(LoadedScene { scene, lights, params: doc.params.to_shade_params(width) })
}

/// Loads the images named by `doc` from paths relative to `base_dir`.
pub fn load_scene(doc: &SceneDoc, base_dir: &Path) -> Result<LoadedScene, SceneError> {
    load_scene_with(doc, |_, path| load_image(base_dir.join(path)).map(Some))
}

/// Reads, parses and loads a scene file.
pub fn load_scene_file(path: &Path) -> Result<(SceneDoc, LoadedScene), SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::Parse {
        line: 0,
        column: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    let doc = parse_scene(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let loaded = load_scene(&doc, base)?;
    Ok((doc, loaded))
}

fn to_gray(img: &Image) -> Image {
    if img.channels() == 1 {
        return img.clone();
    }
    Image::from_fn(img.width(), img.height(), 1, |x, y| {
        let p = img.pixel(x, y);
        [(p[0] + p[1] + p[2]) / 3.0; 3]
    })
}

/// Reads an override value: JSON when it parses, otherwise a bare string.
pub fn parse_override_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Splits `key=value`.
pub fn split_override(spec: &str) -> Result<(&str, &str), SceneError> {
    spec.split_once('=').ok_or_else(|| SceneError::OverrideKey {
        key: spec.to_string(),
        message: "expected key=value".into(),
    })
}

/// Sets the value at a dotted key path (`params.optics.mu`, `lights.0.direction`)
/// in the fully defaulted form of `doc`, then re-parses and validates.
pub fn apply_overrides(doc: &SceneDoc, overrides: &[(String, Value)]) -> Result<SceneDoc, SceneError> {
    let mut value = serde_json::to_value(doc).expect("scene documents serialize");
    for (key, v) in overrides {
        set_path(&mut value, key, v.clone())?;
    }
    serde_json::from_value::<SceneDoc>(value.clone()).map_err(|e| {
        let message = e.to_string();
        let key = overrides.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>().join(", ");
        if message.contains("unknown field") || message.contains("unknown variant") || message.contains("invalid type") {
            SceneError::OverrideKey { key, message }
        } else {
            SceneError::Parse { line: 0, column: 0, message: format!("{key}: {message}") }
        }
    })?;
    scene_from_value(&value)
}

/// Convenience form of [`apply_overrides`] for `key=value` strings.
pub fn apply_override_strings<S: AsRef<str>>(doc: &SceneDoc, specs: &[S]) -> Result<SceneDoc, SceneError> {
    let pairs = specs
        .iter()
        .map(|s| split_override(s.as_ref()).map(|(k, v)| (k.to_string(), parse_override_value(v))))
        .collect::<Result<Vec<_>, _>>()?;
    apply_overrides(doc, &pairs)
}

const OPTIONAL_KEYS: &[&str] = &["ks", "spec_color", "max_offset"];

fn set_path(root: &mut Value, key: &str, v: Value) -> Result<(), SceneError> {
    let bad = |message: &str| SceneError::OverrideKey { key: key.to_string(), message: message.to_string() };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad("empty path segment"));
    }
    let mut cur = root;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if !map.contains_key(*part) {
                    if last && OPTIONAL_KEYS.contains(part) {
                        map.insert(part.to_string(), Value::Null);
                    } else {
                        return Err(bad(&format!("no such key {part:?}")));
                    }
                }
                map.get_mut(*part).expect("present")
            }
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| bad(&format!("{part:?} is not an index")))?;
                let len = items.len();
                items.get_mut(idx).ok_or_else(|| bad(&format!("index {idx} out of range ({len} items)")))?
            }
            _ => return Err(bad(&format!("{part:?} addresses into a scalar"))),
        };
    }
    *cur = v;
    Ok(())
}

/// Documented default parameters, as JSON.
pub fn default_params_json() -> Value {
    serde_json::to_value(ParamsDoc::default()).expect("params serialize")
}
