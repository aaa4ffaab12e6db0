//! HTTP render service.
//!
//! `POST /scenes` takes a multipart bundle: a `scene` part holding the JSON
//! scene document plus one part per image, named after its document key
//! (`shape`, `i0`, `i1`, `env`, `bg`, `ks`, `spec_color`) or carrying the
//! document's file name. `GET /scenes/{id}/render` renders with per-request
//! overrides given as query parameters; `GET /scenes/{id}/meta` reports the
//! stored dimensions and parameters.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Instant;

use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dynpaint::compositor::render;
use dynpaint::image::{Image, ImageError};
use dynpaint::scene_io::{apply_overrides, load_scene_with, parse_override_value, parse_scene, LoadedScene, SceneDoc};
use dynpaint::LightSpec;
use serde_json::{json, Value};
use thiserror::Error;
use tower_http::cors::CorsLayer;

pub const IMAGE_KEYS: [&str; 7] = ["shape", "i0", "i1", "env", "bg", "ks", "spec_color"];

const MAX_UPLOAD: usize = 256 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown scene {0:?}")]
    NotFound(String),
    #[error("{0}")]
    Internal(String),
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

fn bad(msg: impl ToString) -> ServiceError {
    ServiceError::BadRequest(msg.to_string())
}

/// An uploaded scene: its document, decoded images and the loaded default scene.
pub struct StoredScene {
    pub doc: SceneDoc,
    pub images: HashMap<&'static str, Image>,
    pub loaded: LoadedScene,
}

#[derive(Default)]
pub struct AppState {
    scenes: RwLock<HashMap<String, Arc<StoredScene>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn insert(&self, scene: StoredScene) -> String {
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1);
        self.scenes.write().expect("scene store").insert(id.clone(), Arc::new(scene));
        id
    }

    pub fn get(&self, id: &str) -> Option<Arc<StoredScene>> {
        self.scenes.read().expect("scene store").get(id).cloned()
    }
}

pub fn app() -> Router {
    app_with_state(Arc::new(AppState::default()))
}

pub fn app_with_state(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/scenes", post(upload))
        .route("/scenes/{id}/render", get(render_scene))
        .route("/scenes/{id}/meta", get(meta))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves on `addr` until the process ends.
pub async fn serve(addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app()).await
}

/// Binds a document to uploaded images.
pub fn build_scene(doc: SceneDoc, images: HashMap<&'static str, Image>) -> Result<StoredScene, ServiceError> {
    let loaded = load_with_images(&doc, &images)?;
    Ok(StoredScene { doc, images, loaded })
}

fn load_with_images(doc: &SceneDoc, images: &HashMap<&'static str, Image>) -> Result<LoadedScene, ServiceError> {
    load_scene_with(doc, |key, _| Ok(images.get(key).cloned())).map_err(bad)
}

async fn upload(State(state): State<Arc<AppState>>, mut multipart: Multipart) -> Result<Response, ServiceError> {
    let mut doc_text = None;
    let mut parts: Vec<(String, Option<String>, Vec<u8>)> = Vec::new();
    while let Some(field) = multipart.next_field().await.map_err(bad)? {
        let name = field.name().unwrap_or_default().to_string();
        let file_name = field.file_name().map(str::to_string);
        let bytes = field.bytes().await.map_err(bad)?;
        if name == "scene" {
            doc_text = Some(String::from_utf8(bytes.to_vec()).map_err(|_| bad("scene: document is not UTF-8"))?);
        } else {
            parts.push((name, file_name, bytes.to_vec()));
        }
    }
    let doc = parse_scene(&doc_text.ok_or_else(|| bad("missing \"scene\" part"))?).map_err(bad)?;

    let mut images = HashMap::new();
    for key in IMAGE_KEYS {
        let Some(path) = doc_path(&doc, key) else { continue };
        let base = std::path::Path::new(path).file_name().and_then(|n| n.to_str()).unwrap_or(path);
        let part = parts.iter().find(|(name, _, _)| name == key).or_else(|| {
            parts.iter().find(|(_, file, _)| file.as_deref().is_some_and(|f| f == path || f == base))
        });
        let Some((_, _, bytes)) = part else {
            return Err(bad(format!("missing image part {key:?}")));
        };
        let img = Image::decode(bytes, key).map_err(|e: ImageError| bad(format!("{key}: {e}")))?;
        images.insert(key, img);
    }
    let stored = tokio::task::spawn_blocking(move || build_scene(doc, images))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    let (width, height) = stored.loaded.scene.dims();
    let id = state.insert(stored);
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "width": width, "height": height }))).into_response())
}

fn doc_path<'a>(doc: &'a SceneDoc, key: &str) -> Option<&'a str> {
    match key {
        "shape" => Some(&doc.shape),
        "i0" => Some(&doc.i0),
        "i1" => Some(&doc.i1),
        "env" => Some(&doc.env),
        "bg" => Some(&doc.bg),
        "ks" => doc.ks.as_deref(),
        "spec_color" => doc.spec_color.as_deref(),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Png,
    Ppm,
}

impl OutputFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            OutputFormat::Png => "image/png",
            OutputFormat::Ppm => "image/x-portable-pixmap",
        }
    }

    pub fn encode(self, img: &Image) -> Vec<u8> {
        match self {
            OutputFormat::Png => img.encode_png(),
            OutputFormat::Ppm => img.encode_pnm(),
        }
    }
}

/// Document key path for a flattened query name.
pub fn query_key_path(name: &str) -> Option<&'static str> {
    Some(match name {
        "mu" => "params.optics.mu",
        "eta" => "params.optics.eta",
        "refraction_mode" => "params.optics.refraction_mode",
        "d_env" => "params.optics.d_env",
        "d_bg" => "params.optics.d_bg",
        "max_offset" => "params.optics.max_offset",
        "blend" => "params.fresnel.blend",
        "x0" => "params.fresnel.x0",
        "x1" => "params.fresnel.x1",
        "fresnel_mode" => "params.fresnel.mode",
        "fixed_f" => "params.fresnel.fixed_f",
        "sp_weight" => "params.fresnel.sp_weight",
        "shadow" => "params.shadow.enabled",
        "d" => "params.shadow.d",
        "a" => "params.shadow.a",
        "K" => "params.shadow.K",
        "shadow_mode" => "params.shadow_mode",
        "t0" => "params.diffuse_ramp.t0",
        "t1" => "params.diffuse_ramp.t1",
        "step" => "params.diffuse_ramp.step",
        "spec_t0" => "params.spec_ramp.t0",
        "spec_t1" => "params.spec_ramp.t1",
        "spec_step" => "params.spec_ramp.step",
        "global_t0" => "params.global_ramp.t0",
        "global_t1" => "params.global_ramp.t1",
        "global_step" => "params.global_ramp.step",
        "env_blur" => "params.env_blur",
        "bg_blur" => "params.bg_blur",
        _ => return None,
    })
}

const NUMERIC: &[&str] = &[
    "mu", "eta", "d_env", "d_bg", "max_offset", "blend", "x0", "x1", "fixed_f", "sp_weight", "d", "a", "K", "t0",
    "t1", "spec_t0", "spec_t1", "global_t0", "global_t1", "env_blur", "bg_blur",
];

fn decimal(name: &str, raw: &str) -> Result<f64, ServiceError> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad(format!("{name}: expected a decimal number, got {raw:?}")))
}

/// A parsed render request: document overrides plus the output format.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderRequest {
    pub overrides: Vec<(String, Value)>,
    pub format: OutputFormat,
}

/// Translates query parameters into document overrides.
///
/// `lx, ly, lz` set the first light to a directional light and `px, py, pz`
/// to a point light; missing components come from the stored light when it
/// has the same kind. `kind` switches the first light's kind. Any dotted
/// document key path is accepted as well.
pub fn parse_query(doc: &SceneDoc, query: &[(String, String)]) -> Result<RenderRequest, ServiceError> {
    let mut overrides = Vec::new();
    let mut format = OutputFormat::Png;
    let mut dir: [Option<f64>; 3] = [None; 3];
    let mut pos: [Option<f64>; 3] = [None; 3];
    let mut kind: Option<String> = None;
    for (name, raw) in query {
        match name.as_str() {
            "format" => {
                format = match raw.as_str() {
                    "png" => OutputFormat::Png,
                    "ppm" => OutputFormat::Ppm,
                    _ => return Err(bad(format!("format: expected png or ppm, got {raw:?}"))),
                }
            }
            "lx" | "ly" | "lz" => dir["xyz".find(&name[1..]).unwrap()] = Some(decimal(name, raw)?),
            "px" | "py" | "pz" => pos["xyz".find(&name[1..]).unwrap()] = Some(decimal(name, raw)?),
            "kind" => match raw.as_str() {
                "directional" | "point" => kind = Some(raw.clone()),
                _ => return Err(bad(format!("kind: expected directional or point, got {raw:?}"))),
            },
            "shadow" => {
                let on = match raw.as_str() {
                    "1" | "true" | "on" => true,
                    "0" | "false" | "off" => false,
                    _ => return Err(bad(format!("shadow: expected a boolean, got {raw:?}"))),
                };
                overrides.push(("params.shadow.enabled".to_string(), Value::Bool(on)));
            }
            short if query_key_path(short).is_some() => {
                let path = query_key_path(short).unwrap();
                let value = if NUMERIC.contains(&short) {
                    let v = decimal(short, raw)?;
                    if short == "K" {
                        if v < 1.0 || v.fract() != 0.0 {
                            return Err(bad(format!("K: expected a positive integer, got {raw:?}")));
                        }
                        json!(v as u64)
                    } else {
                        json!(v)
                    }
                } else {
                    Value::String(raw.clone())
                };
                overrides.push((path.to_string(), value));
            }
            path if path.contains('.') => overrides.push((path.to_string(), parse_override_value(raw))),
            other => return Err(bad(format!("unknown parameter {other:?}"))),
        }
    }

    let has_dir = dir.iter().any(Option::is_some);
    let has_pos = pos.iter().any(Option::is_some);
    if has_dir && has_pos {
        return Err(bad("lx/ly/lz and px/py/pz cannot be combined"));
    }
    let kind = kind.or_else(|| {
        if has_dir {
            Some("directional".into())
        } else if has_pos {
            Some("point".into())
        } else {
            None
        }
    });
    if let Some(kind) = kind {
        let current = doc.lights.first().copied();
        let color = current.map(|l| l.color()).unwrap_or([1.0; 3]);
        let light = if kind == "directional" {
            let base = match current {
                Some(LightSpec::Directional { direction, .. }) => [direction.x, direction.y, direction.z],
                _ => [0.0, 0.0, 1.0],
            };
            let d = [0, 1, 2].map(|i| dir[i].unwrap_or(base[i]));
            if d[2] <= 0.0 {
                return Err(bad(format!("lz: directional light must have lz > 0 (got {}); it is behind the canvas", d[2])));
            }
            json!({ "kind": "directional", "direction": d, "color": color })
        } else {
            let base = match current {
                Some(LightSpec::Point { position, .. }) => [position.x, position.y, position.z],
                _ => [0.5, 0.5, 1.0],
            };
            let p = [0, 1, 2].map(|i| pos[i].unwrap_or(base[i]));
            json!({ "kind": "point", "position": p, "color": color })
        };
        overrides.push(("lights.0".to_string(), light));
    }
    Ok(RenderRequest { overrides, format })
}

/// Renders a stored scene with overrides. The stored scene is never modified.
pub fn render_stored(stored: &StoredScene, overrides: &[(String, Value)]) -> Result<Image, ServiceError> {
    let doc = apply_overrides(&stored.doc, overrides).map_err(bad)?;
    let same_images = doc.shape == stored.doc.shape
        && doc.shape_kind == stored.doc.shape_kind
        && doc.height_scale == stored.doc.height_scale
        && doc.gradient_sign == stored.doc.gradient_sign
        && doc.i0 == stored.doc.i0
        && doc.i1 == stored.doc.i1
        && doc.env == stored.doc.env
        && doc.bg == stored.doc.bg
        && doc.ks == stored.doc.ks
        && doc.spec_color == stored.doc.spec_color;
    let fresh;
    let scene = if same_images {
        &stored.loaded.scene
    } else {
        fresh = load_with_images(&doc, &stored.images)?;
        &fresh.scene
    };
    let lights: Vec<LightSpec> = doc
        .lights
        .iter()
        .map(|l| match *l {
            LightSpec::Directional { direction, color } => LightSpec::directional(direction, color).map_err(bad),
            other => Ok(other),
        })
        .collect::<Result<_, _>>()?;
    let params = doc.params.to_shade_params(scene.dims().0);
    render(scene, &lights, &params).map_err(bad)
}

async fn render_scene(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<Vec<(String, String)>>,
) -> Result<Response, ServiceError> {
    let stored = state.get(&id).ok_or(ServiceError::NotFound(id))?;
    let request = parse_query(&stored.doc, &query)?;
    let (bytes, ms) = tokio::task::spawn_blocking(move || {
        let start = Instant::now();
        let img = render_stored(&stored, &request.overrides)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        Ok::<_, ServiceError>((request.format.encode(&img), ms))
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))??;
    let mut response = bytes.into_response();
    let headers = response.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static(request.format.content_type()));
    headers.insert("x-render-time-ms", HeaderValue::from_str(&format!("{ms:.3}")).expect("ascii"));
    Ok(response)
}

async fn meta(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ServiceError> {
    let stored = state.get(&id).ok_or_else(|| ServiceError::NotFound(id.clone()))?;
    let (width, height) = stored.loaded.scene.dims();
    Ok(Json(json!({
        "id": id,
        "width": width,
        "height": height,
        "shape_kind": stored.doc.shape_kind,
        "lights": stored.doc.lights,
        "params": stored.doc.params,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> SceneDoc {
        parse_scene(
            r#"{"shape":"s.png","i0":"a.png","i1":"b.png","env":"e.png","bg":"g.png",
                "lights":[{"kind":"directional","direction":[0.2,0.1,0.9],"color":[1,0.5,1]}]}"#,
        )
        .unwrap()
    }

    fn q(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn flattened_names_map_to_key_paths() {
        let r = parse_query(&doc(), &q(&[("mu", "0.5"), ("fresnel_mode", "artistic"), ("K", "12"), ("format", "ppm")])).unwrap();
        assert_eq!(r.format, OutputFormat::Ppm);
        assert_eq!(
            r.overrides,
            vec![
                ("params.optics.mu".into(), json!(0.5)),
                ("params.fresnel.mode".into(), json!("artistic")),
                ("params.shadow.K".into(), json!(12)),
            ]
        );
    }

    #[test]
    fn light_components_merge_with_the_stored_light() {
        let r = parse_query(&doc(), &q(&[("lx", "-0.5")])).unwrap();
        assert_eq!(
            r.overrides,
            vec![("lights.0".into(), json!({"kind": "directional", "direction": [-0.5, 0.1, 0.9], "color": [1.0, 0.5, 1.0]}))]
        );
        let r = parse_query(&doc(), &q(&[("pz", "2")])).unwrap();
        assert_eq!(r.overrides[0].1["position"], json!([0.5, 0.5, 2.0]));
    }

    #[test]
    fn bad_parameters_are_named() {
        for (pairs, needle) in [
            (q(&[("lz", "-1")]), "lz"),
            (q(&[("mu", "abc")]), "mu"),
            (q(&[("shininess", "3")]), "shininess"),
            (q(&[("format", "gif")]), "format"),
            (q(&[("K", "2.5")]), "K"),
        ] {
            let err = parse_query(&doc(), &pairs).unwrap_err().to_string();
            assert!(err.contains(needle), "{err}");
        }
    }
}
