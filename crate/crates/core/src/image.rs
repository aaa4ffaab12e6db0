//! Float images, file IO, wrapped bilinear sampling and separable Gaussian blur.
//!
//! Samples are stored row-major as `f32`, normalized so that 8-bit value `v`
//! maps to `v / 255`. Pixel `(i, j)` has its center at continuous coordinate
//! `(i + 0.5, j + 0.5)`.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};
use rayon::prelude::*;
use thiserror::Error;

/// An RGB color with components nominally in `[0, 1]`.
pub type Color = [f32; 3];

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("unreadable image {path}: {reason}")]
    Unreadable { path: String, reason: String },
    #[error("unsupported image format {path}: {reason}")]
    Unsupported { path: String, reason: String },
    #[error("image {path} has zero width or height")]
    ZeroDimension { path: String },
    #[error("cannot write image {path}: {reason}")]
    Unwritable { path: String, reason: String },
    #[error("invalid image layout: {0}")]
    Layout(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Layout(format!("{width}x{height} has a zero dimension")));
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::Layout(format!("{channels} channels; expected 1 or 3")));
        }
        if data.len() != width * height * channels {
            return Err(ImageError::Layout(format!(
                "data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    /// Image filled with a single value in every sample.
    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        assert!(width > 0 && height > 0 && (channels == 1 || channels == 3));
        Self { width, height, channels, data: vec![value; width * height * channels] }
    }

    /// Builds an image by evaluating `f` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        f: impl Fn(usize, usize) -> Color,
    ) -> Self {
        assert!(width > 0 && height > 0 && (channels == 1 || channels == 3));
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                let c = f(x, y);
                data.extend_from_slice(&c[..channels]);
            }
        }
        Self { width, height, channels, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Pixel color; single-channel images broadcast to gray.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> Color {
        let i = (y * self.width + x) * self.channels;
        if self.channels == 1 {
            let v = self.data[i];
            [v, v, v]
        } else {
            [self.data[i], self.data[i + 1], self.data[i + 2]]
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Same image with every sample clamped to `[0, 1]`.
    pub fn clamped(mut self) -> Self {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }

    /// Bilinear sample at continuous pixel coordinates with periodic wrap.
    ///
    /// Coordinates are reduced modulo the image size; the four neighbours wrap too.
    pub fn sample_wrapped(&self, x: f64, y: f64) -> Color {
        let w = self.width as f64;
        let h = self.height as f64;
        let xs = wrap_coord(x, w) - 0.5;
        let ys = wrap_coord(y, h) - 0.5;
        let ix = floor_half(xs);
        let iy = floor_half(ys);
        let tx = (xs - ix as f64) as f32;
        let ty = (ys - iy as f64) as f32;
        let x0 = wrap_index(ix, self.width);
        let y0 = wrap_index(iy, self.height);
        let x1 = wrap_index(ix + 1, self.width);
        let y1 = wrap_index(iy + 1, self.height);

        let c00 = self.pixel(x0, y0);
        let c10 = self.pixel(x1, y0);
        let c01 = self.pixel(x0, y1);
        let c11 = self.pixel(x1, y1);
        let mut out = [0.0f32; 3];
        for c in 0..3 {
            let top = c00[c] * (1.0 - tx) + c10[c] * tx;
            let bottom = c01[c] * (1.0 - tx) + c11[c] * tx;
            out[c] = top * (1.0 - ty) + bottom * ty;
        }
        out
    }

    /// Decodes PNG or binary PNM bytes.
    pub fn decode(bytes: &[u8], name: &str) -> Result<Self, ImageError> {
        let reader = image::ImageReader::new(Cursor::new(bytes))
            .with_guessed_format()
            .map_err(|e| ImageError::Unreadable { path: name.to_string(), reason: e.to_string() })?;
        if reader.format().is_none() {
            return Err(ImageError::Unsupported {
                path: name.to_string(),
                reason: "unrecognized file signature".into(),
            });
        }
        let decoded = reader.decode().map_err(|e| classify(name, e))?;
        from_dynamic(decoded, name)
    }

    /// Encodes as PNG (8-bit gray or RGB).
    pub fn encode_png(&self) -> Vec<u8> {
        self.encode(ImageFormat::Png).expect("in-memory PNG encoding")
    }

    /// Encodes as binary PNM: P5 for one channel, P6 for three.
    pub fn encode_pnm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().map(|&v| quantize(v)));
        out
    }

    fn encode(&self, format: ImageFormat) -> Result<Vec<u8>, image::ImageError> {
        let mut out = Cursor::new(Vec::new());
        self.to_dynamic().write_to(&mut out, format)?;
        Ok(out.into_inner())
    }


    fn to_dynamic(&self) -> DynamicImage {
        let bytes: Vec<u8> = self.data.iter().map(|&v| quantize(v)).collect();
        let (w, h) = (self.width as u32, self.height as u32);
        if self.channels == 1 {
            DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, bytes).unwrap())
        } else {
            DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, bytes).unwrap())
        }
    }
}

/// Maps a normalized sample to a byte, rounding half up.
#[inline]
pub fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

#[inline]
fn wrap_index(i: i64, n: usize) -> usize {
    if (0..n as i64).contains(&i) {
        i as usize
    } else {
        i.rem_euclid(n as i64) as usize
    }
}

/// Floor of a value in `[-0.5, n)`.
#[inline]
fn floor_half(v: f64) -> i64 {
    if v < 0.0 {
        -1
    } else {
        v as i64
    }
}

#[inline]
fn wrap_coord(v: f64, n: f64) -> f64 {
    if (0.0..n).contains(&v) {
        v
    } else {
        v.rem_euclid(n)
    }
}

fn classify(path: &str, e: image::ImageError) -> ImageError {
    match e {
        image::ImageError::Unsupported(u) => {
            ImageError::Unsupported { path: path.to_string(), reason: u.to_string() }
        }
        other => ImageError::Unreadable { path: path.to_string(), reason: other.to_string() },
    }
}

fn from_dynamic(img: DynamicImage, name: &str) -> Result<Image, ImageError> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(ImageError::ZeroDimension { path: name.to_string() });
    }
    let gray = !img.color().has_color();
    let sixteen = img.color().bytes_per_pixel() / img.color().channel_count() > 1;
    let data: Vec<f32> = match (gray, sixteen) {
        (true, false) => img.into_luma8().into_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        (true, true) => img.into_luma16().into_raw().iter().map(|&v| v as f32 / 65535.0).collect(),
        (false, false) => img.into_rgb8().into_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        (false, true) => img.into_rgb16().into_raw().iter().map(|&v| v as f32 / 65535.0).collect(),
    };
    Image::new(w, h, if gray { 1 } else { 3 }, data)
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image, ImageError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let bytes = std::fs::read(path)
        .map_err(|e| ImageError::Unreadable { path: name.clone(), reason: e.to_string() })?;
    Image::decode(&bytes, &name)
}

/// Writes PNG, PPM (P6), PGM (P5) or PNM chosen by file extension.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let unwritable = |reason: String| ImageError::Unwritable { path: name.clone(), reason };
    let bytes = match ext.as_str() {
        "png" => img.encode_png(),
        "pnm" => img.encode_pnm(),
        "ppm" if img.channels == 3 => img.encode_pnm(),
        "ppm" => to_rgb(img).encode_pnm(),
        "pgm" if img.channels == 1 => img.encode_pnm(),
        "pgm" => {
            return Err(ImageError::Unsupported {
                path: name,
                reason: "PGM output needs a single-channel image".into(),
            })
        }
        other => {
            return Err(ImageError::Unsupported {
                path: name,
                reason: format!("unknown extension {other:?}"),
            })
        }
    };
    std::fs::write(path, bytes).map_err(|e| unwritable(e.to_string()))
}

fn to_rgb(img: &Image) -> Image {
    Image::from_fn(img.width, img.height, 3, |x, y| img.pixel(x, y))
}

/// Normalized 1D Gaussian kernel with radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil() as i64;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = weights.iter().sum();
    weights.iter().map(|w| (w / sum) as f32).collect()
}

/// Separable Gaussian blur with wrapped boundaries. `sigma == 0` returns a copy.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Image {
    if sigma <= 0.0 {
        return img.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let (w, h, ch) = (img.width, img.height, img.channels);

    // Wrapped source column for every (x, tap).
    let columns: Vec<usize> = (0..w as i64)
        .flat_map(|x| (0..kernel.len() as i64).map(move |k| wrap_index(x + k - radius, w)))
        .collect();
    let mut horizontal = vec![0.0f32; img.data.len()];
    horizontal.par_chunks_mut(w * ch).enumerate().for_each(|(y, row)| {
        let src = &img.data[y * w * ch..(y + 1) * w * ch];
        for x in 0..w {
            let taps = &columns[x * kernel.len()..(x + 1) * kernel.len()];
            for c in 0..ch {
                let mut acc = 0.0f32;
                for (&wk, &sx) in kernel.iter().zip(taps) {
                    acc += wk * src[sx * ch + c];
                }
                row[x * ch + c] = acc;
            }
        }
    });

    let stride = w * ch;
    let mut out = vec![0.0f32; img.data.len()];
    out.par_chunks_mut(stride).enumerate().for_each(|(y, row)| {
        for (k, &wk) in kernel.iter().enumerate() {
            let sy = wrap_index(y as i64 + k as i64 - radius, h);
            let src = &horizontal[sy * stride..(sy + 1) * stride];
            for (o, &v) in row.iter_mut().zip(src) {
                *o += wk * v;
            }
        }
    });
    Image { width: w, height: h, channels: ch, data: out }
}
