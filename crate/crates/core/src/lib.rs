//! Relighting of dynamic paintings from a shape map and painted control images.

pub mod compositor;
pub mod demo;
pub mod illum;
pub mod image;
pub mod optics;
pub mod scene_io;
pub mod shadow;
pub mod shape;
pub mod vec3;

pub use compositor::{render, render_with_threads, CompositeError, Scene, ShadeParams, ShadowMode, WeightField};
pub use illum::{clamp_and_step, LightSpec, RampParams, StepType};
pub use image::{load_image, save_image, Color, Image, ImageError};
pub use optics::{FresnelMode, FresnelParams, OpticsParams, RefractionMode};
pub use shadow::ShadowParams;
pub use shape::{GradientSign, ShapeField, ShapeKind};
pub use vec3::Vec3;
pub use scene_io::{parse_scene, LoadedScene, SceneDoc, SceneError};
