//! Scalar per-pixel illumination terms: ramped diffuse `t` and specular `s`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec3::Vec3;

/// Fixed eye direction; there is no camera model.
pub const EYE: Vec3 = Vec3::Z;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepType {
    #[default]
    Linear,
    SmoothStep,
    SmootherStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RampParams {
    pub t0: f64,
    pub t1: f64,
    pub step: StepType,
}

impl RampParams {
    pub const fn new(t0: f64, t1: f64, step: StepType) -> Self {
        Self { t0, t1, step }
    }

    /// `t0 = 0, t1 = 1`, linear: the identity on `[0, 1]`.
    pub const fn identity() -> Self {
        Self::new(0.0, 1.0, StepType::Linear)
    }
}

impl Default for RampParams {
    fn default() -> Self {
        Self::identity()
    }
}

/// Rescales `t` from `[t0, t1]` to `[0, 1]`, clamps, then applies the step shape.
///
/// `t0 == t1` is a hard threshold: `t >= t0` maps to 1, anything below to 0.
pub fn clamp_and_step(t: f64, p: &RampParams) -> f64 {
    let x = if p.t1 == p.t0 {
        if t >= p.t0 {
            1.0
        } else {
            0.0
        }
    } else {
        ((t - p.t0) / (p.t1 - p.t0)).clamp(0.0, 1.0)
    };
    match p.step {
        StepType::Linear => x,
        StepType::SmoothStep => x * x * (3.0 - 2.0 * x),
        StepType::SmootherStep => x * x * x * (x * (6.0 * x - 15.0) + 10.0),
    }
}

fn white() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}

/// A light source. Directions point from the surface toward the light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LightSpec {
    Directional {
        direction: Vec3,
        #[serde(default = "white")]
        color: [f64; 3],
    },
    Point {
        position: Vec3,
        #[serde(default = "white")]
        color: [f64; 3],
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum LightError {
    #[error("point light coincides with the shading point")]
    Coincident,
    #[error("light direction has zero length")]
    ZeroDirection,
}

impl LightSpec {
    /// Directional light with its direction normalized.
    pub fn directional(direction: Vec3, color: [f64; 3]) -> Result<Self, LightError> {
        let direction = direction.try_normalize(1e-12).ok_or(LightError::ZeroDirection)?;
        Ok(LightSpec::Directional { direction, color })
    }

    pub fn point(position: Vec3, color: [f64; 3]) -> Self {
        LightSpec::Point { position, color }
    }

    pub fn color(&self) -> [f64; 3] {
        match *self {
            LightSpec::Directional { color, .. } | LightSpec::Point { color, .. } => color,
        }
    }
}

/// Unit vector from the shading point `p` toward the light.
pub fn light_direction(light: &LightSpec, p: Vec3) -> Result<Vec3, LightError> {
    match *light {
        LightSpec::Directional { direction, .. } => Ok(direction),
        LightSpec::Point { position, .. } => {
            (position - p).try_normalize(1e-9).ok_or(LightError::Coincident)
        }
    }
}

/// Ramped `N . L`.
pub fn diffuse_term(n: Vec3, l: Vec3, p: &RampParams) -> f64 {
    clamp_and_step(n.dot(l), p)
}

/// `R_L . I` for the reflected light vector `R_L = -L + 2 (L . N) N` and the
/// fixed eye `I = (0, 0, 1)`.
#[inline]
pub fn specular_raw(n: Vec3, l: Vec3) -> f64 {
    2.0 * l.dot(n) * n.z - l.z
}

pub fn specular_term(n: Vec3, l: Vec3, p: &RampParams) -> f64 {
    clamp_and_step(specular_raw(n, l), p)
}
