//! Grayscale raster loading, resizing and dataset organization.
//!
//! Every image in the pipeline is a [`GrayImage`] with real pixel values in
//! `[0, 1]`. PGM (`P2`/`P5`, maxval up to 255) is decoded natively; PNG goes
//! through the `image` crate and is accepted as 8-bit gray or 8-bit RGB.

mod manifest;
mod pgm;

use std::path::Path;

use crate::error::{Error, Result};

pub use manifest::{first_k_split, DatasetManifest, ManifestEntry, Role};
pub use pgm::{decode_pgm, encode_pgm_p5};

/// ITU-R BT.601 luma weights applied to RGB input.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Real-valued grayscale raster, row-major, `height` rows of `width` pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::dims(width * height, pixels.len(), "pixel buffer"));
        }
        if let Some(bad) = pixels.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "pixel value {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(row, col));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Quantize to 8 bits for storage.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|p| (p * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Load a PGM or PNG file as a normalized grayscale image.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        return decode_pgm(&bytes).map_err(|reason| Error::decode(path, reason));
    }
    if bytes.starts_with(b"\x89PNG") {
        return decode_png(path, &bytes);
    }
    Err(Error::decode(
        path,
        "unsupported format (expected PGM P2/P5 or PNG)",
    ))
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<GrayImage> {
    use image::DynamicImage;

    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::decode(path, e.to_string()))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let pixels: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        DynamicImage::ImageRgb8(buf) => buf
            .into_raw()
            .chunks_exact(3)
            .map(|rgb| {
                let luma = LUMA_WEIGHTS[0] * rgb[0] as f64
                    + LUMA_WEIGHTS[1] * rgb[1] as f64
                    + LUMA_WEIGHTS[2] * rgb[2] as f64;
                (luma / 255.0).clamp(0.0, 1.0)
            })
            .collect(),
        other => {
            return Err(Error::decode(
                path,
                format!(
                    "unsupported PNG color type {:?} (expected 8-bit gray or RGB)",
                    other.color()
                ),
            ))
        }
    };
    GrayImage::new(width, height, pixels)
}

/// Bilinear resize to `height` x `width`, sampling with corner alignment.
///
/// Equal dimensions return a copy of the input unchanged.
pub fn resize(img: &GrayImage, height: usize, width: usize) -> Result<GrayImage> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter(format!(
            "resize target must be positive, got {height}x{width}"
        )));
    }
    if height == img.height && width == img.width {
        return Ok(img.clone());
    }
    let row_scale = scale(img.height, height);
    let col_scale = scale(img.width, width);
    let mut out = Vec::with_capacity(width * height);
    for r in 0..height {
        let (r0, r1, fr) = source_span(r as f64 * row_scale, img.height);
        for c in 0..width {
            let (c0, c1, fc) = source_span(c as f64 * col_scale, img.width);
            let top = img.get(r0, c0) * (1.0 - fc) + img.get(r0, c1) * fc;
            let bottom = img.get(r1, c0) * (1.0 - fc) + img.get(r1, c1) * fc;
            out.push((top * (1.0 - fr) + bottom * fr).clamp(0.0, 1.0));
        }
    }
    GrayImage::new(width, height, out)
}

fn scale(src: usize, dst: usize) -> f64 {
    if dst > 1 {
        (src - 1) as f64 / (dst - 1) as f64
    } else {
        0.0
    }
}

fn source_span(pos: f64, len: usize) -> (usize, usize, f64) {
    let lo = (pos.floor() as usize).min(len - 1);
    let hi = (lo + 1).min(len - 1);
    (lo, hi, pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, bytes).unwrap();
        path
    }

    fn png_rgb(rgb: [u8; 3]) -> Vec<u8> {
        let buf = image::RgbImage::from_pixel(1, 1, image::Rgb(rgb));
        let mut out = std::io::Cursor::new(Vec::new());
        buf.write_to(&mut out, image::ImageFormat::Png).unwrap();
        out.into_inner()
    }

    #[test]
    fn ascii_pgm_at_maxval_is_white() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "w.pgm", b"P2\n2 2\n255\n255 255\n255 255\n");
        let img = load_image(&path).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert!(img.pixels().iter().all(|&p| p == 1.0));
    }

    #[test]
    fn rgb_png_uses_luma() {
        let dir = tempfile::tempdir().unwrap();
        let white = load_image(write(&dir, "w.png", &png_rgb([255, 255, 255]))).unwrap();
        assert!((white.pixels()[0] - 1.0).abs() < 1e-12);
        let red = load_image(write(&dir, "r.png", &png_rgb([255, 0, 0]))).unwrap();
        assert!((red.pixels()[0] - 0.299).abs() < 1e-12);
    }

    #[test]
    fn sixteen_bit_png_is_rejected_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let buf: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
            image::ImageBuffer::from_pixel(1, 1, image::Luma([1000u16]));
        let mut bytes = std::io::Cursor::new(Vec::new());
        buf.write_to(&mut bytes, image::ImageFormat::Png).unwrap();
        let path = write(&dir, "deep.png", bytes.get_ref());
        let err = load_image(&path).unwrap_err().to_string();
        assert!(err.contains("deep.png"), "{err}");
        assert!(err.contains("unsupported"), "{err}");
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_image("/nonexistent/face.pgm").unwrap_err();
        assert_eq!(err.category(), "io");
        assert!(err.to_string().contains("/nonexistent/face.pgm"));
    }

    #[test]
    fn resize_same_dims_is_identity() {
        let img = GrayImage::from_fn(112, 92, |r, c| ((r * 7 + c * 3) % 17) as f64 / 16.0).unwrap();
        assert_eq!(resize(&img, 92, 112).unwrap(), img);
    }

    #[test]
    fn resize_preserves_constants() {
        let img = GrayImage::filled(13, 9, 0.37).unwrap();
        let out = resize(&img, 40, 31).unwrap();
        assert_eq!((out.height(), out.width()), (40, 31));
        assert!(out.pixels().iter().all(|&p| (p - 0.37).abs() < 1e-15));
    }

    #[test]
    fn resize_interpolates_midpoint() {
        let img = GrayImage::new(2, 1, vec![0.0, 1.0]).unwrap();
        let out = resize(&img, 1, 3).unwrap();
        assert_eq!(out.pixels(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(GrayImage::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
        assert!(GrayImage::new(2, 1, vec![0.0]).is_err());
    }
}
