//! Deterministic face-like test images.
//!
//! Each class gets its own head shape, eye and mouth geometry and a few
//! texture blobs. Images within a class differ by a small shift, a gain
//! change and pixel noise.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image_io::{encode_pgm_p5, first_k_split, DatasetManifest, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticFaces {
    pub classes: usize,
    pub per_class: usize,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
}

impl Default for SyntheticFaces {
    /// The set bundled under `data/synthetic_faces`.
    fn default() -> Self {
        Self {
            classes: 8,
            per_class: 5,
            height: 92,
            width: 112,
            seed: 2009,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Blob {
    row: f64,
    col: f64,
    sigma_r: f64,
    sigma_c: f64,
    amplitude: f64,
}

impl Blob {
    fn at(&self, r: f64, c: f64) -> f64 {
        let dr = (r - self.row) / self.sigma_r;
        let dc = (c - self.col) / self.sigma_c;
        self.amplitude * (-0.5 * (dr * dr + dc * dc)).exp()
    }
}

#[derive(Debug, Clone)]
struct Identity {
    skin: f64,
    head_rows: f64,
    head_cols: f64,
    features: Vec<Blob>,
}

impl Identity {
    fn sample(rng: &mut ChaCha8Rng, height: f64, width: f64) -> Self {
        let (cr, cc) = (height / 2.0, width / 2.0);
        let eye_row = cr - height * rng.gen_range(0.08..0.16);
        let eye_gap = width * rng.gen_range(0.10..0.16);
        let eye_size = rng.gen_range(2.0..4.0);
        let mouth_row = cr + height * rng.gen_range(0.18..0.26);
        let mut features = vec![
            Blob { row: eye_row, col: cc - eye_gap, sigma_r: eye_size, sigma_c: eye_size * 1.6, amplitude: -0.35 },
            Blob { row: eye_row, col: cc + eye_gap, sigma_r: eye_size, sigma_c: eye_size * 1.6, amplitude: -0.35 },
            Blob {
                row: eye_row - rng.gen_range(5.0..8.0),
                col: cc,
                sigma_r: 1.5,
                sigma_c: eye_gap * 1.6,
                amplitude: -rng.gen_range(0.1..0.25),
            },
            Blob { row: cr + 2.0, col: cc, sigma_r: rng.gen_range(5.0..9.0), sigma_c: 2.5, amplitude: 0.12 },
            Blob {
                row: mouth_row,
                col: cc,
                sigma_r: rng.gen_range(1.5..3.0),
                sigma_c: width * rng.gen_range(0.06..0.12),
                amplitude: -0.3,
            },
        ];
        for _ in 0..4 {
            features.push(Blob {
                row: cr + rng.gen_range(-0.3..0.3) * height,
                col: cc + rng.gen_range(-0.25..0.25) * width,
                sigma_r: rng.gen_range(3.0..8.0),
                sigma_c: rng.gen_range(3.0..8.0),
                amplitude: rng.gen_range(-0.15..0.15),
            });
        }
        Self {
            skin: rng.gen_range(0.5..0.7),
            head_rows: height * rng.gen_range(0.36..0.46),
            head_cols: width * rng.gen_range(0.26..0.34),
            features,
        }
    }

    fn render(&self, rng: &mut ChaCha8Rng, height: usize, width: usize) -> Result<GrayImage> {
        let (dr, dc) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let gain = rng.gen_range(0.92..1.08);
        let noise = Normal::new(0.0, 0.015).expect("valid noise sigma");
        let (cr, cc) = (height as f64 / 2.0 + dr, width as f64 / 2.0 + dc);
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                let (y, x) = (r as f64 - dr, c as f64 - dc);
                let q = ((r as f64 - cr) / self.head_rows).powi(2)
                    + ((c as f64 - cc) / self.head_cols).powi(2);
                // soft head edge
                let head = 0.5 * (1.0 - ((q - 1.0) * PI * 2.0).tanh());
                let mut v = 0.12 + 0.05 * (r as f64 / height as f64) + head * self.skin;
                v += head * self.features.iter().map(|b| b.at(y, x)).sum::<f64>();
                v = v * gain + noise.sample(rng);
                pixels.push((v.clamp(0.0, 1.0) * 255.0).round() / 255.0);
            }
        }
        GrayImage::new(width, height, pixels)
    }
}

impl SyntheticFaces {
    /// Images grouped by class, in generation order.
    pub fn generate(&self) -> Result<Vec<Vec<GrayImage>>> {
        if self.classes < 2 || self.per_class < 1 || self.height < 16 || self.width < 16 {
            return Err(Error::InvalidParameter(format!(
                "synthetic set needs at least 2 classes, 1 image each and 16x16 pixels, got {self:?}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (h, w) = (self.height as f64, self.width as f64);
        let identities: Vec<Identity> = (0..self.classes)
            .map(|_| Identity::sample(&mut rng, h, w))
            .collect();
        identities
            .iter()
            .map(|id| {
                (0..self.per_class)
                    .map(|_| id.render(&mut rng, self.height, self.width))
                    .collect()
            })
            .collect()
    }

    /// Write `s01/01.pgm` style files under `root` and return their paths.
    pub fn write(&self, root: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let root = root.as_ref();
        let mut paths = Vec::new();
        for (class, images) in self.generate()?.iter().enumerate() {
            let dir = root.join(format!("s{:02}", class + 1));
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (i, img) in images.iter().enumerate() {
                let path = dir.join(format!("{:02}.pgm", i + 1));
                let bytes = encode_pgm_p5(img.width(), img.height(), &img.to_u8());
                std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
                paths.push(path);
            }
        }
        Ok(paths)
    }

    /// Write the images and a first-`k` manifest named `manifest.csv`.
    pub fn write_with_manifest(&self, root: impl AsRef<Path>, k: usize) -> Result<DatasetManifest> {
        let root = root.as_ref();
        self.write(root)?;
        let manifest = first_k_split(root, k)?;
        manifest.save(root.join("manifest.csv"))?;
        Ok(manifest)
    }
}

/// Directory of the bundled 8-class set.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_faces")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticFaces { classes: 2, per_class: 2, height: 32, width: 40, seed: 5 };
        assert_eq!(spec.generate().unwrap(), spec.generate().unwrap());
        let other = SyntheticFaces { seed: 6, ..spec };
        assert_ne!(spec.generate().unwrap(), other.generate().unwrap());
    }

    #[test]
    fn images_are_quantized_to_8_bits() {
        let spec = SyntheticFaces { classes: 2, per_class: 1, height: 20, width: 20, seed: 1 };
        for img in spec.generate().unwrap().iter().flatten() {
            assert!(img.pixels().iter().all(|&p| (p * 255.0 - (p * 255.0).round()).abs() < 1e-9));
        }
    }

    #[test]
    fn classes_differ_more_than_samples() {
        let sets = SyntheticFaces::default().generate().unwrap();
        let dist = |a: &GrayImage, b: &GrayImage| -> f64 {
            a.pixels().iter().zip(b.pixels()).map(|(x, y)| (x - y).powi(2)).sum()
        };
        let within = dist(&sets[0][0], &sets[0][1]);
        let between = dist(&sets[0][0], &sets[1][0]);
        assert!(between > within, "between {between} within {within}");
    }
}
