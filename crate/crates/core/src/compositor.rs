//! Barycentric compositing of the painted control images.
//!
//! Diffuse: `C = C0 (1 - t) + C1 t`.
//! Specular (opaque scenes): `C <- C (1 - ks s) + C2 ks s`.
//! Global (scenes with any `ks > 0`):
//! `C2' = clamp_and_step(CM F + CT (1 - F) + s C2)` per channel, then
//! `C <- C (1 - ks s) + C2' ks`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::illum::{clamp_and_step, diffuse_term, light_direction, specular_term, LightSpec, RampParams, StepType};
use crate::image::{gaussian_blur, Color, Image};
use crate::optics::{fresnel_for_normal, mirror_sample, refraction_sample, FresnelParams, OpticsParams};
use crate::shadow::{shadow_term, ShadowParams};
use crate::shape::ShapeField;
use crate::vec3::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum CompositeError {
    #[error("at least one light is required")]
    NoLights,
    #[error("{what} is {got:?} but the shape is {expected:?}")]
    DimensionMismatch { what: &'static str, expected: (usize, usize), got: (usize, usize) },
    #[error("ks must be a single-channel image")]
    KsChannels,
}

/// The images that define a painting.
#[derive(Debug, Clone)]
pub struct Scene {
    pub shape: ShapeField,
    /// Dark diffuse control image.
    pub i0: Image,
    /// Bright diffuse control image.
    pub i1: Image,
    /// Environment (foreground) image, reflected.
    pub env: Image,
    /// Background image, refracted.
    pub bg: Image,
    /// Transparency / reflectivity mask.
    pub ks: Image,
    /// Specular color.
    pub spec_color: Image,
}

impl Scene {
    pub fn new(
        shape: ShapeField,
        i0: Image,
        i1: Image,
        env: Image,
        bg: Image,
        ks: Option<Image>,
        spec_color: Option<Image>,
    ) -> Result<Self, CompositeError> {
        let dims = shape.dims();
        let ks = ks.unwrap_or_else(|| Image::filled(dims.0, dims.1, 1, 0.0));
        let spec_color = spec_color.unwrap_or_else(|| Image::filled(dims.0, dims.1, 3, 1.0));
        for (what, img) in [("i0", &i0), ("i1", &i1), ("ks", &ks), ("spec_color", &spec_color)] {
            if img.dims() != dims {
                return Err(CompositeError::DimensionMismatch { what, expected: dims, got: img.dims() });
            }
        }
        if ks.channels() != 1 {
            return Err(CompositeError::KsChannels);
        }
        Ok(Self { shape, i0, i1, env, bg, ks: ks.clamped(), spec_color })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.shape.dims()
    }

    /// True when any pixel reflects or refracts.
    pub fn is_transparent(&self) -> bool {
        self.ks.data().iter().any(|&v| v > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ShadowMode {
    #[serde(rename = "classic")]
    Classic,
    #[default]
    #[serde(rename = "cos-theta")]
    CosTheta,
}

/// Every artistic control of a render.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadeParams {
    pub diffuse_ramp: RampParams,
    pub spec_ramp: RampParams,
    pub global_ramp: RampParams,
    pub shadow: ShadowParams,
    pub shadow_enabled: bool,
    pub shadow_mode: ShadowMode,
    pub optics: OpticsParams,
    pub fresnel: FresnelParams,
    pub env_blur: f64,
    pub bg_blur: f64,
}

impl Default for ShadeParams {
    fn default() -> Self {
        Self {
            diffuse_ramp: RampParams::identity(),
            spec_ramp: RampParams::new(0.8, 1.0, StepType::SmoothStep),
            global_ramp: RampParams::identity(),
            shadow: ShadowParams::default(),
            shadow_enabled: false,
            shadow_mode: ShadowMode::CosTheta,
            optics: OpticsParams::default(),
            fresnel: FresnelParams::default(),
            env_blur: 0.0,
            bg_blur: 0.0,
        }
    }
}

impl ShadeParams {
    /// Whether the diffuse term comes from the shadow march.
    pub fn uses_shadow_march(&self) -> bool {
        self.shadow_enabled && self.shadow_mode == ShadowMode::CosTheta
    }
}

/// Per-channel diffuse weight `W1`; `W0 = 1 - W1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    pub width: usize,
    pub height: usize,
    pub omega1: Vec<[f32; 3]>,
}

impl WeightField {
    pub fn omega0(&self) -> Vec<[f32; 3]> {
        self.omega1.iter().map(|w| w.map(|v| 1.0 - v)).collect()
    }
}

/// Fields consumed by the global compositing step, aligned with the shape.
#[derive(Debug, Clone)]
pub struct GlobalFields {
    pub specular: Vec<f32>,
    pub mirror: Image,
    pub refraction: Image,
    pub fresnel: Vec<f32>,
    pub tir: Vec<bool>,
}

#[inline]
fn shading_point(shape: &ShapeField, x: usize, y: usize) -> Vec3 {
    let (sx, sy) = shape.pixel_position(x, y);
    Vec3::new(sx, sy, shape.height_at_pixel(x, y))
}

/// Summed, clamped diffuse weight and specular term of all lights at a pixel.
/// Lights behind the canvas (`L.z <= 0`) contribute nothing.
#[inline]
fn light_terms(shape: &ShapeField, lights: &[LightSpec], params: &ShadeParams, x: usize, y: usize) -> ([f32; 3], f32) {
    let n = shape.normal(x, y);
    let p = shading_point(shape, x, y);
    let mut acc = [0.0f64; 3];
    let mut spec = 0.0f64;
    for light in lights {
        let l = match light_direction(light, p) {
            Ok(l) if l.z > 0.0 => l,
            _ => continue,
        };
        let t = if params.uses_shadow_march() {
            shadow_term(shape, light, x, y, &params.shadow)
        } else {
            diffuse_term(n, l, &params.diffuse_ramp)
        };
        let color = light.color();
        for c in 0..3 {
            acc[c] += t * color[c];
        }
        spec += specular_term(n, l, &params.spec_ramp);
    }
    (acc.map(|v| v.clamp(0.0, 1.0) as f32), spec.clamp(0.0, 1.0) as f32)
}

#[inline]
fn diffuse_pixel(c0: Color, c1: Color, w: [f32; 3]) -> Color {
    [0, 1, 2].map(|c| c0[c] * (1.0 - w[c]) + c1[c] * w[c])
}

#[inline]
fn specular_pixel(base: Color, c2: Color, ks: f32, s: f32) -> Color {
    let k = ks * s;
    [0, 1, 2].map(|c| base[c] * (1.0 - k) + c2[c] * k)
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn global_pixel(base: Color, c2: Color, ks: f32, s: f32, cm: Color, ct: Color, f: f32, ramp: &RampParams) -> Color {
    [0, 1, 2].map(|c| {
        let mixed = cm[c] * f + ct[c] * (1.0 - f) + s * c2[c];
        let c2p = clamp_and_step(mixed as f64, ramp) as f32;
        base[c] * (1.0 - ks * s) + c2p * ks
    })
}

fn check_dims(what: &'static str, expected: (usize, usize), got: (usize, usize)) -> Result<(), CompositeError> {
    if expected == got {
        Ok(())
    } else {
        Err(CompositeError::DimensionMismatch { what, expected, got })
    }
}

fn per_pixel<T: Send>(dims: (usize, usize), f: impl Fn(usize, usize) -> T + Sync) -> Vec<T> {
    let (w, h) = dims;
    (0..w * h).into_par_iter().map(|i| f(i % w, i / w)).collect()
}

fn image_from_colors(dims: (usize, usize), colors: Vec<Color>) -> Image {
    let data = colors.into_iter().flatten().collect();
    Image::new(dims.0, dims.1, 3, data).expect("color field layout")
}

/// Diffuse weight `W1` per pixel and channel.
pub fn diffuse_field(scene: &Scene, lights: &[LightSpec], params: &ShadeParams) -> Result<WeightField, CompositeError> {
    if lights.is_empty() {
        return Err(CompositeError::NoLights);
    }
    let dims = scene.dims();
    let omega1 = per_pixel(dims, |x, y| light_terms(&scene.shape, lights, params, x, y).0);
    Ok(WeightField { width: dims.0, height: dims.1, omega1 })
}

/// Specular term `s` per pixel.
pub fn specular_field(scene: &Scene, lights: &[LightSpec], params: &ShadeParams) -> Result<Vec<f32>, CompositeError> {
    if lights.is_empty() {
        return Err(CompositeError::NoLights);
    }
    Ok(per_pixel(scene.dims(), |x, y| light_terms(&scene.shape, lights, params, x, y).1))
}

pub fn shade_diffuse(scene: &Scene, omega1: &WeightField) -> Result<Image, CompositeError> {
    let dims = scene.dims();
    check_dims("diffuse weights", dims, (omega1.width, omega1.height))?;
    let w = dims.0;
    let colors = per_pixel(dims, |x, y| diffuse_pixel(scene.i0.pixel(x, y), scene.i1.pixel(x, y), omega1.omega1[y * w + x]));
    Ok(image_from_colors(dims, colors))
}

pub fn shade_specular(base: &Image, scene: &Scene, specular: &[f32]) -> Result<Image, CompositeError> {
    let dims = scene.dims();
    check_dims("base image", dims, base.dims())?;
    let w = dims.0;
    let colors = per_pixel(dims, |x, y| {
        specular_pixel(base.pixel(x, y), scene.spec_color.pixel(x, y), scene.ks.get(x, y, 0), specular[y * w + x])
    });
    Ok(image_from_colors(dims, colors))
}

/// Reflection, refraction and Fresnel fields for a scene.
pub fn global_fields(scene: &Scene, lights: &[LightSpec], params: &ShadeParams) -> Result<GlobalFields, CompositeError> {
    let specular = specular_field(scene, lights, params)?;
    let dims = scene.dims();
    let env = gaussian_blur(&scene.env, params.env_blur);
    let bg = gaussian_blur(&scene.bg, params.bg_blur);
    let mirror = image_from_colors(dims, per_pixel(dims, |x, y| mirror_sample(&scene.shape, &env, &params.optics, x, y)));
    let refr = per_pixel(dims, |x, y| refraction_sample(&scene.shape, &bg, &params.optics, x, y));
    let tir: Vec<bool> = refr.iter().map(|r| r.1).collect();
    let refraction = image_from_colors(dims, refr.into_iter().map(|r| r.0).collect());
    let fresnel = per_pixel(dims, |x, y| fresnel_for_normal(scene.shape.normal(x, y), &params.fresnel, &params.optics) as f32);
    Ok(GlobalFields { specular, mirror, refraction, fresnel, tir })
}

pub fn shade_global(base: &Image, scene: &Scene, fields: &GlobalFields, global_ramp: &RampParams) -> Result<Image, CompositeError> {
    let dims = scene.dims();
    check_dims("base image", dims, base.dims())?;
    check_dims("mirror term", dims, fields.mirror.dims())?;
    check_dims("refraction term", dims, fields.refraction.dims())?;
    let w = dims.0;
    let colors = per_pixel(dims, |x, y| {
        let i = y * w + x;
        let f = if fields.tir[i] { 1.0 } else { fields.fresnel[i] };
        global_pixel(
            base.pixel(x, y),
            scene.spec_color.pixel(x, y),
            scene.ks.get(x, y, 0),
            fields.specular[i],
            fields.mirror.pixel(x, y),
            fields.refraction.pixel(x, y),
            f,
            global_ramp,
        )
    });
    Ok(image_from_colors(dims, colors))
}

/// Full pipeline: diffuse, then global compositing when any pixel has
/// `ks > 0`, otherwise the specular cascade. Output clamped to `[0, 1]`.
///
/// Each pixel is computed independently, so the result does not depend on the
/// number of worker threads.
pub fn render(scene: &Scene, lights: &[LightSpec], params: &ShadeParams) -> Result<Image, CompositeError> {
    if lights.is_empty() {
        return Err(CompositeError::NoLights);
    }
    let dims = scene.dims();
    let (w, h) = dims;
    let transparent = scene.is_transparent();
    let (env, bg) = if transparent {
        (gaussian_blur(&scene.env, params.env_blur), gaussian_blur(&scene.bg, params.bg_blur))
    } else {
        (scene.env.clone(), scene.bg.clone())
    };

    let mut data = vec![0.0f32; w * h * 3];
    data.par_chunks_mut(w * 3).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            let (omega1, s) = light_terms(&scene.shape, lights, params, x, y);
            let base = diffuse_pixel(scene.i0.pixel(x, y), scene.i1.pixel(x, y), omega1);
            let c2 = scene.spec_color.pixel(x, y);
            let ks = scene.ks.get(x, y, 0);
            let out = if transparent {
                let cm = mirror_sample(&scene.shape, &env, &params.optics, x, y);
                let (ct, tir) = refraction_sample(&scene.shape, &bg, &params.optics, x, y);
                let f = if tir {
                    1.0
                } else {
                    fresnel_for_normal(scene.shape.normal(x, y), &params.fresnel, &params.optics) as f32
                };
                global_pixel(base, c2, ks, s, cm, ct, f, &params.global_ramp)
            } else {
                specular_pixel(base, c2, ks, s)
            };
            for c in 0..3 {
                row[x * 3 + c] = out[c].clamp(0.0, 1.0);
            }
        }
    });
    Ok(Image::new(w, h, 3, data).expect("render layout"))
}

/// `render` on a dedicated pool of `threads` workers.
pub fn render_with_threads(
    scene: &Scene,
    lights: &[LightSpec],
    params: &ShadeParams,
    threads: usize,
) -> Result<Image, CompositeError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| render(scene, lights, params))
}
