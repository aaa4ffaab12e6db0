//! Procedural demo scenes, written as ordinary scene bundles.

use std::path::{Path, PathBuf};

use crate::illum::LightSpec;
use crate::image::{save_image, Image, ImageError};
use crate::scene_io::{to_json, ParamsDoc, SceneDoc};
use crate::shape::{procedural_hemisphere, GradientSign, ShapeKind};
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoKind {
    /// Glassy hemisphere over a striped background.
    Sphere,
    /// Depth-map relief of soft bumps with shadows on.
    Relief,
}

impl DemoKind {
    pub fn name(self) -> &'static str {
        match self {
            DemoKind::Sphere => "sphere",
            DemoKind::Relief => "relief",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sphere" => Some(DemoKind::Sphere),
            "relief" => Some(DemoKind::Relief),
            _ => None,
        }
    }
}

/// Checkerboard with `cells` squares per side.
pub fn checker(size: usize, cells: usize, a: [f32; 3], b: [f32; 3]) -> Image {
    let cell = (size / cells.max(1)).max(1);
    Image::from_fn(size, size, 3, |x, y| if (x / cell + y / cell).is_multiple_of(2) { a } else { b })
}

/// Diagonal color stripes.
pub fn stripes(size: usize, period: usize) -> Image {
    let period = period.max(2);
    Image::from_fn(size, size, 3, |x, y| {
        let t = ((x + y) % period) as f32 / period as f32;
        if t < 0.5 {
            [0.95, 0.85, 0.3]
        } else {
            [0.15, 0.3, 0.6]
        }
    })
}

/// Vertical two-color gradient.
pub fn gradient(size: usize, top: [f32; 3], bottom: [f32; 3]) -> Image {
    Image::from_fn(size, size, 3, |_, y| {
        let t = (y as f32 + 0.5) / size as f32;
        [0, 1, 2].map(|c| top[c] * (1.0 - t) + bottom[c] * t)
    })
}

/// Gray depth map of a few smooth bumps; values in `[0, 1]`.
pub fn relief_depth(size: usize) -> Image {
    let bumps = [(0.3, 0.35, 0.12, 1.0), (0.68, 0.3, 0.09, 0.7), (0.55, 0.7, 0.15, 0.85), (0.2, 0.78, 0.07, 0.5)];
    Image::from_fn(size, size, 1, |x, y| {
        let (u, v) = ((x as f64 + 0.5) / size as f64, (y as f64 + 0.5) / size as f64);
        let h: f64 = bumps
            .iter()
            .map(|&(cx, cy, s, amp)| amp * (-((u - cx).powi(2) + (v - cy).powi(2)) / (2.0 * s * s)).exp())
            .sum();
        [h.min(1.0) as f32; 3]
    })
}

fn disc_mask(size: usize, radius: f64, value: f32) -> Image {
    let c = size as f64 / 2.0;
    let r = radius * c;
    Image::from_fn(size, size, 1, |x, y| {
        let (dx, dy) = (x as f64 + 0.5 - c, y as f64 + 0.5 - c);
        [if dx * dx + dy * dy < r * r { value } else { 0.0 }; 3]
    })
}

/// Images of a demo scene, keyed by scene-document field.
pub fn demo_images(kind: DemoKind, size: usize) -> Vec<(&'static str, Image)> {
    match kind {
        DemoKind::Sphere => vec![
            ("shape", procedural_hemisphere(size, 0.7)),
            ("i0", gradient(size, [0.08, 0.06, 0.2], [0.2, 0.05, 0.1])),
            ("i1", gradient(size, [1.0, 0.9, 0.7], [0.9, 0.7, 0.5])),
            ("env", checker(size, 8, [1.0, 1.0, 1.0], [0.1, 0.1, 0.15])),
            ("bg", stripes(size, (size / 8).max(2))),
            ("ks", disc_mask(size, 0.7, 0.9)),
        ],
        DemoKind::Relief => vec![
            ("shape", relief_depth(size)),
            ("i0", Image::filled(size, size, 3, 0.05)),
            ("i1", gradient(size, [0.95, 0.92, 0.85], [0.85, 0.8, 0.75])),
            ("env", Image::filled(size, size, 3, 1.0)),
            ("bg", Image::filled(size, size, 3, 0.0)),
        ],
    }
}

/// Scene document referencing the images written by [`write_demo`].
pub fn demo_doc(kind: DemoKind) -> SceneDoc {
    let file = |k: &str| format!("{k}.png");
    let mut params = ParamsDoc::default();
    let (shape_kind, ks, lights) = match kind {
        DemoKind::Sphere => {
            params.env_blur = 1.0;
            let light = LightSpec::directional(Vec3::new(-0.4, -0.5, 0.77), [1.0, 1.0, 1.0]).expect("nonzero");
            (ShapeKind::NormalMap, Some(file("ks")), vec![light])
        }
        DemoKind::Relief => {
            params.shadow.enabled = true;
            let light = LightSpec::directional(Vec3::new(0.5, 0.3, 0.81), [1.0, 1.0, 1.0]).expect("nonzero");
            (ShapeKind::DepthMap, None, vec![light])
        }
    };
    SceneDoc {
        shape: file("shape"),
        shape_kind,
        height_scale: 0.1,
        gradient_sign: GradientSign::Outward,
        i0: file("i0"),
        i1: file("i1"),
        env: file("env"),
        bg: file("bg"),
        ks,
        spec_color: None,
        lights,
        params,
    }
}

/// Writes a demo bundle (PNG images plus `scene.json`) into `dir` and returns
/// the path of the scene file.
pub fn write_demo(kind: DemoKind, dir: &Path, size: usize) -> Result<PathBuf, ImageError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| ImageError::Unwritable { path: dir.display().to_string(), reason: e.to_string() })?;
    for (key, img) in demo_images(kind, size) {
        save_image(&img, dir.join(format!("{key}.png")))?;
    }
    let path = dir.join("scene.json");
    std::fs::write(&path, to_json(&demo_doc(kind)))
        .map_err(|e| ImageError::Unwritable { path: path.display().to_string(), reason: e.to_string() })?;
    Ok(path)
}
