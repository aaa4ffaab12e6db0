//! Integrated diffuse + shadow term `t = d / r` by marching toward the light.
//!
//! The march starts below the shading point at `P0 = P_S - d N_S`. The first
//! `d` of travel along `L` is counted as inside matter (`r = d`), then samples
//! are taken at midpoints `P0 + d L + (k + 1/2) a L` and every sample that lies
//! under the surface adds `a` to `r`. On a plane this gives `r = d / cos(theta)`.

use serde::{Deserialize, Serialize};

use crate::illum::{clamp_and_step, light_direction, LightSpec, RampParams};
use crate::shape::{ShapeField, ShapeKind};
use crate::vec3::Vec3;

/// Lower bound on `N.z` when turning a normal into a height slope.
pub const MIN_SLOPE_NZ: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowParams {
    /// Offset below the surface, scene units.
    pub d: f64,
    /// Step length, scene units; must be smaller than `d`.
    pub a: f64,
    /// Step count for directional lights.
    pub max_steps: usize,
    pub ramp: RampParams,
}

impl Default for ShadowParams {
    fn default() -> Self {
        Self { d: 0.02, a: 0.02 / 8.0, max_steps: 256, ramp: RampParams::identity() }
    }
}

struct March {
    start: Vec3,
    dir: Vec3,
    steps: usize,
}

impl March {
    #[inline]
    fn sample(&self, k: usize, a: f64) -> Vec3 {
        self.start + self.dir * ((k as f64 + 0.5) * a)
    }
}

/// Sets up the ray for one pixel, or `None` when the light is behind the canvas
/// or coincides with the shading point.
fn setup(
    shading: Vec3,
    normal: Vec3,
    light: &LightSpec,
    params: &ShadowParams,
) -> Option<March> {
    let l = light_direction(light, shading).ok()?;
    if l.z <= 0.0 {
        return None;
    }
    let p0 = shading - normal * params.d;
    let start = p0 + l * params.d;
    let steps = match *light {
        LightSpec::Directional { .. } => params.max_steps,
        LightSpec::Point { position, .. } => {
            (((position - p0).length() - params.d) / params.a).ceil().max(0.0) as usize
        }
    };
    Some(March { start, dir: l, steps })
}

/// True once a sample outside the canvas is moving further out.
#[inline]
fn leaving(p: Vec3, dir: Vec3) -> bool {
    (p.x < 0.0 && dir.x <= 0.0)
        || (p.x >= 1.0 && dir.x >= 0.0)
        || (p.y < 0.0 && dir.y <= 0.0)
        || (p.y >= 1.0 && dir.y >= 0.0)
}

/// `d / r` over a depth map before the ramp; zero when the light is unusable.
pub fn shadow_ratio_depth(
    shape: &ShapeField,
    light: &LightSpec,
    px: usize,
    py: usize,
    params: &ShadowParams,
) -> f64 {
    debug_assert_eq!(shape.kind(), ShapeKind::DepthMap);
    let (sx, sy) = shape.pixel_position(px, py);
    let shading = Vec3::new(sx, sy, shape.height_at_pixel(px, py));
    let Some(march) = setup(shading, shape.normal(px, py), light, params) else {
        return 0.0;
    };
    let top = shape.max_height();
    let mut r = params.d;
    for k in 0..march.steps {
        let p = march.sample(k, params.a);
        // z only grows along the ray, so nothing above the tallest cell can block.
        if p.z > top {
            break;
        }
        match shape.height_at(p.x, p.y) {
            Some(h) if h > p.z => r += params.a,
            Some(_) => {}
            None if leaving(p, march.dir) => break,
            None => {}
        }
    }
    params.d / r
}

/// `d / r` over a normal map, reconstructing heights along the ray from the
/// slopes of the traversed normals; the shading point sits at `z = 0`.
pub fn shadow_ratio_normalmap(
    shape: &ShapeField,
    light: &LightSpec,
    px: usize,
    py: usize,
    params: &ShadowParams,
) -> f64 {
    let (sx, sy) = shape.pixel_position(px, py);
    let shading = Vec3::new(sx, sy, 0.0);
    let Some(march) = setup(shading, shape.normal(px, py), light, params) else {
        return 0.0;
    };
    let mut r = params.d;
    let mut height = 0.0;
    let (mut prev_x, mut prev_y) = (sx, sy);
    for k in 0..march.steps {
        let p = march.sample(k, params.a);
        let Some(n) = shape.normal_at(p.x, p.y) else {
            if leaving(p, march.dir) {
                break;
            }
            continue;
        };
        height -= (n.x * (p.x - prev_x) + n.y * (p.y - prev_y)) / n.z.max(MIN_SLOPE_NZ);
        prev_x = p.x;
        prev_y = p.y;
        if height > p.z {
            r += params.a;
        }
    }
    params.d / r
}

/// `d / r` for either shape kind.
pub fn shadow_ratio(
    shape: &ShapeField,
    light: &LightSpec,
    px: usize,
    py: usize,
    params: &ShadowParams,
) -> f64 {
    match shape.kind() {
        ShapeKind::DepthMap => shadow_ratio_depth(shape, light, px, py, params),
        ShapeKind::NormalMap => shadow_ratio_normalmap(shape, light, px, py, params),
    }
}

fn ramped(ratio: f64, ramp: &RampParams) -> f64 {
    // A ratio of exactly zero means the light never reaches the point.
    if ratio == 0.0 {
        0.0
    } else {
        clamp_and_step(ratio, ramp)
    }
}

pub fn shadow_term_depth(
    shape: &ShapeField,
    light: &LightSpec,
    px: usize,
    py: usize,
    params: &ShadowParams,
) -> f64 {
    ramped(shadow_ratio_depth(shape, light, px, py, params), &params.ramp)
}

pub fn shadow_term_normalmap(
    shape: &ShapeField,
    light: &LightSpec,
    px: usize,
    py: usize,
    params: &ShadowParams,
) -> f64 {
    ramped(shadow_ratio_normalmap(shape, light, px, py, params), &params.ramp)
}

pub fn shadow_term(
    shape: &ShapeField,
    light: &LightSpec,
    px: usize,
    py: usize,
    params: &ShadowParams,
) -> f64 {
    ramped(shadow_ratio(shape, light, px, py, params), &params.ramp)
}
