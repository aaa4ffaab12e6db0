//! Mirror reflection and refraction as image warps, plus physical and
//! art-directed Fresnel weights.
//!
//! The eye looks down the fixed direction `I = (0, 0, 1)`. The environment
//! image hangs `d_env` in front of the canvas and the background `d_bg` behind
//! it; a warp samples them at the pixel shifted by where the bent eye ray meets
//! that plane.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::image::{gaussian_blur, Image};
use crate::shape::ShapeField;
use crate::vec3::Vec3;

/// Rays with `|D.z|` below this saturate the warp offset.
pub const GRAZING_DZ: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefractionMode {
    #[default]
    Physical,
    Artistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticsParams {
    /// Index-of-refraction ratio `eta2 / eta1`.
    pub eta: f64,
    /// Art-directed refraction strength in `[-1, 1]`, nominally `log2(eta)`.
    pub mu: f64,
    pub refraction_mode: RefractionMode,
    pub d_env: f64,
    pub d_bg: f64,
    /// Warp clamp in pixels of the sampled image.
    pub max_offset: f64,
}

impl Default for OpticsParams {
    fn default() -> Self {
        Self {
            eta: 4.0 / 3.0,
            mu: 0.4,
            refraction_mode: RefractionMode::Physical,
            d_env: 0.1,
            d_bg: 0.1,
            max_offset: 64.0,
        }
    }
}

impl OpticsParams {
    /// The index ratio implied by the active refraction mode.
    pub fn effective_eta(&self) -> f64 {
        match self.refraction_mode {
            RefractionMode::Physical => self.eta,
            RefractionMode::Artistic => self.mu.exp2(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FresnelMode {
    #[default]
    Physical,
    Artistic,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FresnelParams {
    pub mode: FresnelMode,
    pub fixed_f: f64,
    /// Weight of the s-polarized term; `1 - sp_weight` goes to p-polarized.
    pub sp_weight: f64,
    /// `sin(theta)` where the curve leaves total refraction.
    pub x0: f64,
    /// `sin(theta)` of the equal reflection/refraction mix.
    pub x1: f64,
    /// `-1` forces total refraction, `+1` total reflection.
    pub blend: f64,
}

impl Default for FresnelParams {
    fn default() -> Self {
        Self { mode: FresnelMode::Physical, fixed_f: 0.5, sp_weight: 0.5, x0: 0.2, x1: 0.8, blend: 0.0 }
    }
}

/// Total internal reflection: the physical transmission direction does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TotalInternalReflection;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegenerateDirection;

/// Mirror of the eye about `N`: `R = -I + 2 (I . N) N`.
#[inline]
pub fn reflect_eye(n: Vec3) -> Vec3 {
    Vec3::new(2.0 * n.z * n.x, 2.0 * n.z * n.y, 2.0 * n.z * n.z - 1.0)
}

/// Physical transmission of the eye ray,
/// `T = -I / eta + (c / eta - sqrt((c^2 - 1) / eta^2 + 1)) N` with `c = N.z`.
#[inline]
pub fn refract_eye(n: Vec3, eta: f64) -> Result<Vec3, TotalInternalReflection> {
    let c = n.z;
    let radicand = (c * c - 1.0) / (eta * eta) + 1.0;
    if radicand < 0.0 {
        return Err(TotalInternalReflection);
    }
    let k = c / eta - radicand.sqrt();
    Ok(Vec3::new(k * n.x, k * n.y, -1.0 / eta + k * n.z))
}

/// Art-directed transmission, linear in `mu`.
///
/// `mu > 0` bends `v` toward `-n`: `normalize(v (1 - mu) - n mu)`.
/// `mu <= 0` bends it along its tangential part:
/// `normalize((v - (v . n) n) mu + v (1 + mu))`.
pub fn refract_eye_artistic(v: Vec3, n: Vec3, mu: f64) -> Result<Vec3, DegenerateDirection> {
    let raw = if mu > 0.0 {
        v * (1.0 - mu) - n * mu
    } else {
        let tangent = v - n * v.dot(n);
        tangent * mu + v * (1.0 + mu)
    };
    raw.try_normalize(1e-12).ok_or(DegenerateDirection)
}

/// The undeflected continuation of the eye ray through the canvas.
pub const STRAIGHT_THROUGH: Vec3 = Vec3::new(0.0, 0.0, -1.0);

/// Offset in pixels where a ray with direction `dir` meets a plane at
/// `plane_distance` scene units, for a sampled image of `dims` pixels.
///
/// The plane lies on whichever side the ray travels, so `|dir.z|` is used.
/// Grazing rays saturate at `max_offset`.
pub fn warp_offset(dir: Vec3, plane_distance: f64, dims: (usize, usize), max_offset: f64) -> (f64, f64) {
    let dz = dir.z.abs();
    if dz < GRAZING_DZ {
        let saturate = |c: f64| if c == 0.0 { 0.0 } else { max_offset.copysign(c) };
        return (saturate(dir.x), saturate(dir.y));
    }
    let scale = plane_distance / dz;
    let dx = (scale * dir.x * dims.0 as f64).clamp(-max_offset, max_offset);
    let dy = (scale * dir.y * dims.1 as f64).clamp(-max_offset, max_offset);
    (dx, dy)
}

/// Weighted s/p dielectric reflectance with radicand `eta^2 - sin^2(theta)`.
///
/// Grazing incidence and total internal reflection return 1.
pub fn fresnel_physical(cos_theta: f64, eta: f64, sp_weight: f64) -> f64 {
    let cos = cos_theta.clamp(0.0, 1.0);
    if cos == 0.0 {
        return 1.0;
    }
    let sin2 = 1.0 - cos * cos;
    let radicand = eta * eta - sin2;
    if radicand < 0.0 {
        return 1.0;
    }
    let root = radicand.sqrt();
    let fs = ((cos - root) / (cos + root)).powi(2);
    let e2c = eta * eta * cos;
    let fp = ((root - e2c) / (root + e2c)).powi(2);
    (sp_weight * fs + (1.0 - sp_weight) * fp).clamp(0.0, 1.0)
}

/// Piecewise-linear Fresnel in `sin(theta)` with two control points and a
/// refraction-to-reflection blend.
pub fn fresnel_artistic(sin_theta: f64, p: &FresnelParams) -> f64 {
    let x = sin_theta.clamp(0.0, 1.0);
    let base = if x <= p.x0 {
        0.0
    } else if x <= p.x1 {
        0.5 * (x - p.x0) / (p.x1 - p.x0)
    } else if p.x1 < 1.0 {
        0.5 + 0.5 * (x - p.x1) / (1.0 - p.x1)
    } else {
        1.0
    };
    let f = if p.blend >= 0.0 {
        base * (1.0 - p.blend) + p.blend
    } else {
        base * (1.0 + p.blend)
    };
    f.clamp(0.0, 1.0)
}

/// Per-pixel Fresnel weight from the eye incidence angle (`cos = N.z`).
pub fn fresnel_for_normal(n: Vec3, fresnel: &FresnelParams, optics: &OpticsParams) -> f64 {
    let cos = n.z.clamp(0.0, 1.0);
    match fresnel.mode {
        FresnelMode::Fixed => fresnel.fixed_f,
        FresnelMode::Physical => fresnel_physical(cos, optics.effective_eta(), fresnel.sp_weight),
        FresnelMode::Artistic => fresnel_artistic((1.0 - cos * cos).sqrt(), fresnel),
    }
}

/// Position in `src` pixels of the canvas pixel `(x, y)` of a `shape_dims` shape.
#[inline]
fn source_position(x: usize, y: usize, shape_dims: (usize, usize), src_dims: (usize, usize)) -> (f64, f64) {
    (
        (x as f64 + 0.5) / shape_dims.0 as f64 * src_dims.0 as f64,
        (y as f64 + 0.5) / shape_dims.1 as f64 * src_dims.1 as f64,
    )
}

/// Reflected environment color at one pixel (`env` already blurred).
#[inline]
pub fn mirror_sample(shape: &ShapeField, env: &Image, optics: &OpticsParams, x: usize, y: usize) -> [f32; 3] {
    let r = reflect_eye(shape.normal(x, y));
    let (dx, dy) = warp_offset(r, optics.d_env, env.dims(), optics.max_offset);
    let (sx, sy) = source_position(x, y, shape.dims(), env.dims());
    env.sample_wrapped(sx + dx, sy + dy)
}

/// Transmission direction for a normal under the active refraction mode.
pub fn transmission(n: Vec3, optics: &OpticsParams) -> Result<Vec3, TotalInternalReflection> {
    match optics.refraction_mode {
        RefractionMode::Physical => refract_eye(n, optics.eta),
        RefractionMode::Artistic => {
            let n = if n.z < 0.0 { -n } else { n };
            Ok(refract_eye_artistic(STRAIGHT_THROUGH, n, optics.mu).unwrap_or(STRAIGHT_THROUGH))
        }
    }
}

/// Refracted background color at one pixel (`bg` already blurred) and whether
/// the pixel is totally internally reflected. TIR pixels sample unwarped.
#[inline]
pub fn refraction_sample(
    shape: &ShapeField,
    bg: &Image,
    optics: &OpticsParams,
    x: usize,
    y: usize,
) -> ([f32; 3], bool) {
    let (sx, sy) = source_position(x, y, shape.dims(), bg.dims());
    match transmission(shape.normal(x, y), optics) {
        Ok(t) => {
            let (dx, dy) = warp_offset(t, optics.d_bg, bg.dims(), optics.max_offset);
            (bg.sample_wrapped(sx + dx, sy + dy), false)
        }
        Err(TotalInternalReflection) => (bg.sample_wrapped(sx, sy), true),
    }
}

fn warp_rows(
    shape: &ShapeField,
    f: impl Fn(usize, usize) -> ([f32; 3], bool) + Sync,
) -> (Image, Vec<bool>) {
    let (w, h) = shape.dims();
    let mut data = vec![0.0f32; w * h * 3];
    let mut mask = vec![false; w * h];
    data.par_chunks_mut(w * 3)
        .zip(mask.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (row, mrow))| {
            for x in 0..w {
                let (c, tir) = f(x, y);
                row[x * 3..x * 3 + 3].copy_from_slice(&c);
                mrow[x] = tir;
            }
        });
    (Image::new(w, h, 3, data).expect("warp layout"), mask)
}

/// Mirror reflection term: the blurred environment warped by the reflected eye ray.
pub fn warp_environment(shape: &ShapeField, env: &Image, optics: &OpticsParams, blur_sigma: f64) -> Image {
    let env = gaussian_blur(env, blur_sigma);
    warp_rows(shape, |x, y| (mirror_sample(shape, &env, optics, x, y), false)).0
}

/// Refraction term plus a per-pixel total-internal-reflection mask.
pub fn warp_background(
    shape: &ShapeField,
    bg: &Image,
    optics: &OpticsParams,
    blur_sigma: f64,
) -> (Image, Vec<bool>) {
    let bg = gaussian_blur(bg, blur_sigma);
    warp_rows(shape, |x, y| refraction_sample(shape, &bg, optics, x, y))
}
