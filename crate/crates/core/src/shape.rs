//! Shape images: normal maps and depth maps decoded into per-pixel unit normals.
//!
//! The canvas is the unit square: pixel `(i, j)` of a `w x h` shape sits at scene
//! position `((i + 0.5) / w, (j + 0.5) / h)`. Depth-map heights are in scene units.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{Color, Image};
use crate::vec3::Vec3;

/// Vectors shorter than this are rejected when decoding a normal map.
pub const DEGENERATE_NORMAL: f64 = 1e-6;

pub const DEFAULT_HEIGHT_SCALE: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum ShapeError {
    #[error("normal map needs 3 channels, got {0}")]
    NotRgb(usize),
    #[error("degenerate normal at pixel ({x}, {y})")]
    DegenerateNormal { x: usize, y: usize },
    #[error("depth map must be single-channel or gray (R=G=B); pixel ({x}, {y}) differs")]
    NotGray { x: usize, y: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapeKind {
    #[serde(rename = "normalmap")]
    NormalMap,
    #[serde(rename = "depthmap")]
    DepthMap,
}

/// Sign of the gradient used to turn a depth map into normals.
///
/// `Inward` uses `(+dH/dx, +dH/dy, 1)`; `Outward` uses the geometric outward
/// normal of `z = H(x, y)`, `(-dH/dx, -dH/dy, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientSign {
    #[default]
    #[serde(alias = "paper")]
    Inward,
    Outward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeField {
    width: usize,
    height: usize,
    kind: ShapeKind,
    normals: Vec<Vec3>,
    heights: Option<Vec<f64>>,
    max_height: f64,
}

impl ShapeField {
    /// Normal-map field from already-unit normals. Panics on a length mismatch.
    pub fn from_normals(width: usize, height: usize, normals: Vec<Vec3>) -> Self {
        assert_eq!(normals.len(), width * height);
        Self {
            width,
            height,
            kind: ShapeKind::NormalMap,
            normals,
            heights: None,
            max_height: 0.0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn heights(&self) -> Option<&[f64]> {
        self.heights.as_deref()
    }

    #[inline]
    pub fn normal(&self, x: usize, y: usize) -> Vec3 {
        self.normals[y * self.width + x]
    }

    /// Stored height at a pixel; zero for normal maps.
    #[inline]
    pub fn height_at_pixel(&self, x: usize, y: usize) -> f64 {
        match &self.heights {
            Some(h) => h[y * self.width + x],
            None => 0.0,
        }
    }

    /// Largest stored height (zero for normal maps).
    pub fn max_height(&self) -> f64 {
        self.max_height
    }

    /// Scene-space position of a pixel center on the canvas plane.
    #[inline]
    pub fn pixel_position(&self, x: usize, y: usize) -> (f64, f64) {
        (
            (x as f64 + 0.5) / self.width as f64,
            (y as f64 + 0.5) / self.height as f64,
        )
    }

    #[inline]
    pub fn contains(&self, sx: f64, sy: f64) -> bool {
        (0.0..1.0).contains(&sx) && (0.0..1.0).contains(&sy)
    }

    /// Bilinear height at a scene position inside the canvas (clamped to edge
    /// pixel centers). Returns `None` outside the canvas or for normal maps.
    #[inline]
    pub fn height_at(&self, sx: f64, sy: f64) -> Option<f64> {
        let heights = self.heights.as_deref()?;
        if !self.contains(sx, sy) {
            return None;
        }
        let (w, h) = (self.width, self.height);
        let px = (sx * w as f64 - 0.5).clamp(0.0, (w - 1) as f64);
        let py = (sy * h as f64 - 0.5).clamp(0.0, (h - 1) as f64);
        // Both are non-negative, so truncation is floor.
        let x0 = px as usize;
        let y0 = py as usize;
        let x1 = (x0 + 1).min(w - 1);
        let y1 = (y0 + 1).min(h - 1);
        let tx = px - x0 as f64;
        let ty = py - y0 as f64;
        let top = heights[y0 * w + x0] * (1.0 - tx) + heights[y0 * w + x1] * tx;
        let bottom = heights[y1 * w + x0] * (1.0 - tx) + heights[y1 * w + x1] * tx;
        Some(top * (1.0 - ty) + bottom * ty)
    }

    /// Normal of the pixel containing a scene position, `None` outside the canvas.
    #[inline]
    pub fn normal_at(&self, sx: f64, sy: f64) -> Option<Vec3> {
        if !self.contains(sx, sy) {
            return None;
        }
        let x = ((sx * self.width as f64) as usize).min(self.width - 1);
        let y = ((sy * self.height as f64) as usize).min(self.height - 1);
        Some(self.normal(x, y))
    }
}

/// Encodes a unit normal as a color, `c = (N + 1) / 2`.
pub fn encode_normal(n: Vec3) -> Color {
    [
        ((n.x + 1.0) * 0.5) as f32,
        ((n.y + 1.0) * 0.5) as f32,
        ((n.z + 1.0) * 0.5) as f32,
    ]
}

/// Decodes an RGB normal map, `N = normalize(2c - 1)`.
pub fn decode_normal_map(img: &Image) -> Result<ShapeField, ShapeError> {
    if img.channels() != 3 {
        return Err(ShapeError::NotRgb(img.channels()));
    }
    let (w, h) = img.dims();
    let mut normals = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let c = img.pixel(x, y);
            let raw = Vec3::new(
                2.0 * c[0] as f64 - 1.0,
                2.0 * c[1] as f64 - 1.0,
                2.0 * c[2] as f64 - 1.0,
            );
            let n = raw
                .try_normalize(DEGENERATE_NORMAL)
                .ok_or(ShapeError::DegenerateNormal { x, y })?;
            normals.push(n);
        }
    }
    Ok(ShapeField::from_normals(w, h, normals))
}

/// Depth map to shape with the default (`Inward`) gradient sign.
pub fn depth_to_shape(img: &Image, height_scale: f64) -> Result<ShapeField, ShapeError> {
    depth_to_shape_with(img, height_scale, GradientSign::Inward)
}

/// Depth map to shape: heights are `height_scale * sample`; normals come from
/// central differences of the heights in pixel units (one-sided at borders).
pub fn depth_to_shape_with(
    img: &Image,
    height_scale: f64,
    sign: GradientSign,
) -> Result<ShapeField, ShapeError> {
    let (w, h) = img.dims();
    let mut heights = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let c = img.pixel(x, y);
            if img.channels() == 3 && (c[0] != c[1] || c[1] != c[2]) {
                return Err(ShapeError::NotGray { x, y });
            }
            heights.push(height_scale * c[0] as f64);
        }
    }

    let at = |x: usize, y: usize| heights[y * w + x];
    let derivative = |lo: f64, hi: f64, span: usize| if span == 0 { 0.0 } else { (hi - lo) / span as f64 };
    let flip = match sign {
        GradientSign::Inward => 1.0,
        GradientSign::Outward => -1.0,
    };

    let mut normals = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let (yl, yr) = (y.saturating_sub(1), (y + 1).min(h - 1));
            let gx = derivative(at(xl, y), at(xr, y), xr - xl);
            let gy = derivative(at(x, yl), at(x, yr), yr - yl);
            let n = Vec3::new(flip * gx, flip * gy, 1.0);
            // z = 1 keeps the length >= 1, so normalization cannot fail.
            normals.push(n * (1.0 / n.length()));
        }
    }
    let max_height = heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ShapeField {
        width: w,
        height: h,
        kind: ShapeKind::DepthMap,
        normals,
        heights: Some(heights),
        max_height,
    })
}

/// Normal-map image of a hemisphere centered in a `size x size` canvas.
///
/// `radius` is a fraction of the half-size. Pixels outside the disc get the
/// flat normal color `(0.5, 0.5, 1)`.
pub fn procedural_hemisphere(size: usize, radius: f64) -> Image {
    assert!(size >= 2 && radius > 0.0 && radius <= 1.0);
    let center = size as f64 / 2.0;
    let r = radius * center;
    Image::from_fn(size, size, 3, |x, y| {
        let dx = (x as f64 + 0.5 - center) / r;
        let dy = (y as f64 + 0.5 - center) / r;
        let rr = dx * dx + dy * dy;
        if rr < 1.0 {
            encode_normal(Vec3::new(dx, dy, (1.0 - rr).sqrt()))
        } else {
            [0.5, 0.5, 1.0]
        }
    })
}
