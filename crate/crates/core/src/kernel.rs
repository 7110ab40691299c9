//! Kernel functions, Gram matrices and feature-space centering.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Value of `scale * |x - y|` reached by the farthest training pair when the
/// cosine kernel scale is fitted.
pub const COSINE_SCALE_BOUND: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// `(pi/4) cos(pi * scale * |x - y| / 2)` inside its support
    /// `scale * |x - y| <= 1`, zero outside.
    ///
    /// `scale: None` means the scale is chosen from the training set at fit
    /// time so that the largest pairwise training distance maps to 0.9.
    /// The kernel is not positive definite in general.
    Cosine { scale: Option<f64> },
    /// `exp(-|x - y|^2 / sigma^2)`.
    Rbf { sigma: f64 },
    /// `(<x, y> + offset)^degree`.
    Polynomial { degree: u32, offset: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Divide by `sqrt(k(x, x) k(y, y))`.
    pub normalize: bool,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::cosine()
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            KernelKind::Cosine { scale: Some(s) } => write!(f, "cosine(scale={s:e})")?,
            KernelKind::Cosine { scale: None } => write!(f, "cosine(scale=auto)")?,
            KernelKind::Rbf { sigma } => write!(f, "rbf(sigma={sigma})")?,
            KernelKind::Polynomial { degree, offset } => {
                write!(f, "polynomial(degree={degree}, offset={offset})")?
            }
        }
        if self.normalize {
            write!(f, " normalized")?;
        }
        Ok(())
    }
}

impl KernelSpec {
    /// Normalized cosine kernel with the scale fitted from training data.
    pub fn cosine() -> Self {
        Self {
            kind: KernelKind::Cosine { scale: None },
            normalize: true,
        }
    }

    pub fn rbf(sigma: f64) -> Self {
        Self {
            kind: KernelKind::Rbf { sigma },
            normalize: false,
        }
    }

    pub fn polynomial(degree: u32, offset: f64) -> Self {
        Self {
            kind: KernelKind::Polynomial { degree, offset },
            normalize: false,
        }
    }

    /// Plain inner product.
    pub fn linear() -> Self {
        Self::polynomial(1, 0.0)
    }

    pub fn normalized(self, normalize: bool) -> Self {
        Self { normalize, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            KernelKind::Cosine { scale } => scale.is_none_or(|s| s > 0.0 && s.is_finite()),
            KernelKind::Rbf { sigma } => sigma > 0.0 && sigma.is_finite(),
            KernelKind::Polynomial { degree, offset } => {
                degree >= 1 && offset >= 0.0 && offset.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid kernel {self}")))
        }
    }

    /// Fix any data-dependent parameter from the training set.
    pub fn resolve(&self, train: &[Vec<f64>]) -> Result<Self> {
        self.validate()?;
        match self.kind {
            KernelKind::Cosine { scale: None } => {
                let mut max_dist: f64 = 0.0;
                for (i, x) in train.iter().enumerate() {
                    for y in &train[i + 1..] {
                        max_dist = max_dist.max(distance(x, y));
                    }
                }
                if max_dist <= 0.0 || !max_dist.is_finite() {
                    return Err(Error::Fit(
                        "cosine kernel scale is undefined when all training samples coincide".into(),
                    ));
                }
                Ok(Self {
                    kind: KernelKind::Cosine {
                        scale: Some(COSINE_SCALE_BOUND / max_dist),
                    },
                    ..*self
                })
            }
            _ => Ok(*self),
        }
    }

    fn raw(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(match self.kind {
            KernelKind::Cosine { scale } => {
                let s = scale.ok_or_else(|| {
                    Error::InvalidParameter("cosine kernel scale has not been fitted".into())
                })?;
                let u = s * distance(x, y);
                if u <= 1.0 {
                    FRAC_PI_4 * (FRAC_PI_2 * u).cos()
                } else {
                    0.0
                }
            }
            KernelKind::Rbf { sigma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (sigma * sigma)).exp()
            }
            KernelKind::Polynomial { degree, offset } => (dot(x, y) + offset).powi(degree as i32),
        })
    }

    fn self_similarity(&self, x: &[f64]) -> Result<f64> {
        let v = self.raw(x, x)?;
        if self.normalize && v <= 0.0 {
            return Err(Error::Undefined(format!(
                "k(x, x) = {v:e} is not positive for {self}; normalization is undefined"
            )));
        }
        Ok(v)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::dims(x.len(), y.len(), "kernel arguments"));
        }
        let value = self.raw(x, y)?;
        if self.normalize {
            let (kx, ky) = (self.self_similarity(x)?, self.self_similarity(y)?);
            return Ok(value / (kx * ky).sqrt());
        }
        Ok(value)
    }
}

pub fn eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.eval(x, y)
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Symmetric matrix of pairwise kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    centered: bool,
}

impl GramMatrix {
    pub fn from_matrix(entries: DMatrix<f64>, centered: bool) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidParameter("Gram matrix must be square".into()));
        }
        Ok(Self { entries, centered })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }
}

fn check_lengths(xs: &[Vec<f64>]) -> Result<usize> {
    let d = xs.first().map_or(0, Vec::len);
    if let Some(bad) = xs.iter().find(|x| x.len() != d) {
        return Err(Error::dims(d, bad.len(), "feature vectors"));
    }
    Ok(d)
}

pub fn gram(spec: &KernelSpec, xs: &[Vec<f64>]) -> Result<GramMatrix> {
    let m = xs.len();
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "a Gram matrix needs at least 2 samples, got {m}"
        )));
    }
    check_lengths(xs)?;
    let diag: Vec<f64> = xs
        .iter()
        .map(|x| spec.self_similarity(x))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (i..m)
                .map(|j| {
                    let v = spec.raw(&xs[i], &xs[j])?;
                    Ok(if spec.normalize {
                        v / (diag[i] * diag[j]).sqrt()
                    } else {
                        v
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut k = DMatrix::zeros(m, m);
    for (i, row) in rows.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            k[(i, i + offset)] = v;
            k[(i + offset, i)] = v;
        }
    }
    Ok(GramMatrix {
        entries: k,
        centered: false,
    })
}

/// Column means and grand mean of an uncentered Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteringStats {
    pub col_means: Vec<f64>,
    pub grand_mean: f64,
}

impl CenteringStats {
    pub fn from_gram(g: &GramMatrix) -> Result<Self> {
        if g.centered {
            return Err(Error::InvalidParameter(
                "centering statistics need the uncentered Gram matrix".into(),
            ));
        }
        let m = g.size() as f64;
        let col_means: Vec<f64> = g.entries.column_iter().map(|c| c.sum() / m).collect();
        let grand_mean = col_means.iter().sum::<f64>() / m;
        Ok(Self {
            col_means,
            grand_mean,
        })
    }

    /// Center raw kernel values `k(x_i, x)` against the training set.
    pub fn center_vector(&self, raw: &[f64]) -> Vec<f64> {
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        raw.iter()
            .zip(&self.col_means)
            .map(|(k, c)| k - mean - c + self.grand_mean)
            .collect()
    }
}

/// Double centering `(I - 1/M) K (I - 1/M)`.
pub fn center(g: &GramMatrix) -> Result<GramMatrix> {
    if g.centered {
        return Err(Error::InvalidParameter("Gram matrix is already centered".into()));
    }
    let stats = CenteringStats::from_gram(g)?;
    let m = g.size();
    let mut k = g.entries.clone();
    for j in 0..m {
        for i in 0..m {
            k[(i, j)] += stats.grand_mean - stats.col_means[i] - stats.col_means[j];
        }
    }
    // restore exact symmetry lost to rounding order
    for j in 0..m {
        for i in j + 1..m {
            let v = 0.5 * (k[(i, j)] + k[(j, i)]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(GramMatrix {
        entries: k,
        centered: true,
    })
}

/// Raw kernel values between `x` and every training sample.
pub fn raw_kernel_vector(spec: &KernelSpec, train: &[Vec<f64>], x: &[f64]) -> Result<Vec<f64>> {
    train.iter().map(|t| spec.eval(t, x)).collect()
}

/// Centered kernel vector `<phi(x_i) - mean, phi(x) - mean>` over the training set.
pub fn kernel_vector(spec: &KernelSpec, train: &[Vec<f64>], x: &[f64]) -> Result<Vec<f64>> {
    let stats = CenteringStats::from_gram(&gram(spec, train)?)?;
    Ok(stats.center_vector(&raw_kernel_vector(spec, train, x)?))
}
