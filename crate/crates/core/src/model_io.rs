//! Versioned binary model files.
//!
//! Layout: magic `KDCV1\0`, `u16` version, then length-prefixed sections
//! (`u64` byte count followed by the payload) in this order:
//!
//! 1. kernel: `u8` tag (0 cosine, 1 rbf, 2 polynomial), `u8` normalize flag,
//!    two `f64` parameters (cosine: scale, 0; rbf: sigma, 0; polynomial:
//!    degree, offset)
//! 2. dimensions: `u32` M, d, r, p, C, then `f64` rank tolerance
//! 3. training features, M x d
//! 4. labels, M x `u32`
//! 5. eigenvalues, r
//! 6. projection coefficients A, M x p
//! 7. common vectors, C x p
//! 8. kernel PCA eigenvectors U, M x r
//! 9. null-space basis V, r x p
//!
//! Matrices are row-major little-endian `f64`.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kdcv::{CommonVectors, KdcvModel};
use crate::kernel::{KernelKind, KernelSpec};

pub const MODEL_MAGIC: &[u8; 6] = b"KDCV1\0";
pub const MODEL_VERSION: u16 = 1;

struct Writer {
    out: Vec<u8>,
    section: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.section.push(v);
    }

    fn u32(&mut self, v: usize) {
        self.section.extend_from_slice(&(v as u32).to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.section.extend_from_slice(&v.to_le_bytes());
    }

    fn matrix(&mut self, m: &DMatrix<f64>) {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self.f64(m[(r, c)]);
            }
        }
    }

    fn finish_section(&mut self) {
        self.out
            .extend_from_slice(&(self.section.len() as u64).to_le_bytes());
        self.out.append(&mut self.section);
    }
}

pub fn model_to_bytes(model: &KdcvModel) -> Vec<u8> {
    let mut w = Writer {
        out: Vec::new(),
        section: Vec::new(),
    };
    w.out.extend_from_slice(MODEL_MAGIC);
    w.out.extend_from_slice(&MODEL_VERSION.to_le_bytes());

    let kernel = model.kernel();
    let (tag, a, b) = match kernel.kind {
        KernelKind::Cosine { scale } => (0, scale.unwrap_or(f64::NAN), 0.0),
        KernelKind::Rbf { sigma } => (1, sigma, 0.0),
        KernelKind::Polynomial { degree, offset } => (2, degree as f64, offset),
    };
    w.u8(tag);
    w.u8(kernel.normalize as u8);
    w.f64(a);
    w.f64(b);
    w.finish_section();

    for v in [
        model.num_samples(),
        model.feature_dim(),
        model.rank(),
        model.dim(),
        model.num_classes(),
    ] {
        w.u32(v);
    }
    w.f64(model.rank_tol());
    w.finish_section();

    for v in model.train_features().iter().flatten() {
        w.f64(*v);
    }
    w.finish_section();
    for &l in model.labels() {
        w.u32(l);
    }
    w.finish_section();
    for &v in model.eig_values() {
        w.f64(v);
    }
    w.finish_section();
    w.matrix(model.coeff());
    w.finish_section();
    for v in model.common_vectors().rows().iter().flatten() {
        w.f64(*v);
    }
    w.finish_section();
    w.matrix(model.eig_vectors());
    w.finish_section();
    w.matrix(model.null_basis());
    w.finish_section();
    w.out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("unexpected end of model file".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn section(&mut self, expected: usize, name: &str) -> Result<Section<'a>> {
        let len = u64::from_le_bytes(self.take(8)?.try_into().unwrap()) as usize;
        if len != expected {
            return Err(Error::Format(format!(
                "section `{name}` holds {len} bytes, expected {expected}"
            )));
        }
        Ok(Section {
            data: self.take(len)?,
            pos: 0,
        })
    }
}

struct Section<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Section<'_> {
    fn next<const N: usize>(&mut self) -> [u8; N] {
        let out = self.data[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }

    fn u8(&mut self) -> u8 {
        self.next::<1>()[0]
    }

    fn u32(&mut self) -> usize {
        u32::from_le_bytes(self.next()) as usize
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.next())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        let values: Vec<f64> = (0..rows * cols).map(|_| self.f64()).collect();
        DMatrix::from_row_slice(rows, cols, &values)
    }

    fn rows(&mut self, rows: usize, cols: usize) -> Vec<Vec<f64>> {
        (0..rows).map(|_| (0..cols).map(|_| self.f64()).collect()).collect()
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<KdcvModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(6)? != MODEL_MAGIC {
        return Err(Error::Format("missing KDCV1 magic".into()));
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {version} (this build reads {MODEL_VERSION})"
        )));
    }

    let mut s = r.section(18, "kernel")?;
    let (tag, normalize, a, b) = (s.u8(), s.u8(), s.f64(), s.f64());
    let kind = match tag {
        0 => KernelKind::Cosine { scale: Some(a) },
        1 => KernelKind::Rbf { sigma: a },
        2 if a.fract() == 0.0 && a >= 1.0 && a <= u32::MAX as f64 => KernelKind::Polynomial {
            degree: a as u32,
            offset: b,
        },
        _ => return Err(Error::Format(format!("unknown kernel tag {tag} / parameter {a}"))),
    };
    let kernel = KernelSpec {
        kind,
        normalize: normalize != 0,
    };

    let mut s = r.section(28, "dimensions")?;
    let (m, d, rank, p, c) = (s.u32(), s.u32(), s.u32(), s.u32(), s.u32());
    let rank_tol = s.f64();

    let features = r.section(m * d * 8, "features")?.rows(m, d);
    let mut s = r.section(m * 4, "labels")?;
    let labels: Vec<usize> = (0..m).map(|_| s.u32()).collect();
    let mut s = r.section(rank * 8, "eigenvalues")?;
    let eig_values: Vec<f64> = (0..rank).map(|_| s.f64()).collect();
    let coeff = r.section(m * p * 8, "coefficients")?.matrix(m, p);
    let common = r.section(c * p * 8, "common vectors")?.rows(c, p);
    let eig_vectors = r.section(m * rank * 8, "eigenvectors")?.matrix(m, rank);
    let null_basis = r.section(rank * p * 8, "null basis")?.matrix(rank, p);
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last section",
            bytes.len() - r.pos
        )));
    }
    KdcvModel::from_parts(
        features,
        labels,
        kernel,
        eig_values,
        eig_vectors,
        null_basis,
        coeff,
        CommonVectors::new(common)?,
        rank_tol,
    )
}

pub fn save_model(model: &KdcvModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<KdcvModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes).map_err(|e| match e {
        Error::Format(reason) => Error::decode(path, reason),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kdcv::{fit, DEFAULT_RANK_TOL};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_model(kernel: KernelSpec) -> KdcvModel {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut xs = Vec::new();
        let mut labels = Vec::new();
        for c in 0..3 {
            for _ in 0..3 {
                xs.push((0..8).map(|k| if k == c { 5.0 } else { 0.0 } + rng.gen_range(-0.5..0.5)).collect());
                labels.push(c);
            }
        }
        fit(&xs, &labels, kernel, DEFAULT_RANK_TOL).unwrap()
    }

    #[test]
    fn header_and_roundtrip_for_each_kernel() {
        for kernel in [KernelSpec::cosine(), KernelSpec::rbf(3.0), KernelSpec::polynomial(2, 1.0).normalized(true)] {
            let model = toy_model(kernel);
            let bytes = model_to_bytes(&model);
            assert_eq!(&bytes[..6], b"KDCV1\0");
            assert_eq!(&bytes[6..8], &1u16.to_le_bytes());
            let back = model_from_bytes(&bytes).unwrap();
            assert_eq!(model_to_bytes(&back), bytes);
            let probe: Vec<f64> = (0..8).map(|k| k as f64 * 0.3).collect();
            let (a, b) = (model.project(&probe).unwrap(), back.project(&probe).unwrap());
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = model_to_bytes(&toy_model(KernelSpec::linear()));
        assert!(model_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong_version = bytes.clone();
        wrong_version[6] = 9;
        assert!(model_from_bytes(&wrong_version).unwrap_err().to_string().contains("version"));
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(model_from_bytes(&trailing).is_err());
        assert!(model_from_bytes(b"KDCV2\0\x01\x00").is_err());
    }
}
