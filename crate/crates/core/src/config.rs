//! Pipeline configuration as a flat `key=value` file.
//!
//! ```text
//! image.height=92
//! image.width=112
//! gabor.k_max=1.5707963267948966
//! gabor.f=1.4142135623730951
//! gabor.sigma=6.283185307179586
//! gabor.scales=5
//! gabor.orientations=8
//! gabor.support=33
//! block.omega=7
//! block.c=3
//! kernel.type=cosine
//! kernel.scale=auto
//! kernel.normalize=true
//! measure=cos
//! rank_tol=1e-10
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Missing keys keep
//! their defaults. `kernel.type` selects which of `kernel.scale`,
//! `kernel.sigma`, `kernel.degree` and `kernel.offset` apply.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::blocks::BlockConfig;
use crate::classifier::Measure;
use crate::error::{Error, Result};
use crate::gabor::{GaborParams, DEFAULT_SUPPORT};
use crate::kdcv::DEFAULT_RANK_TOL;
use crate::kernel::{KernelKind, KernelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Images are resized to `height` x `width` before filtering.
    pub height: usize,
    pub width: usize,
    pub gabor: GaborParams,
    pub support: usize,
    pub block: BlockConfig,
    pub kernel: KernelSpec,
    pub measure: Measure,
    pub rank_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            height: 92,
            width: 112,
            gabor: GaborParams::default(),
            support: DEFAULT_SUPPORT,
            block: BlockConfig::default(),
            kernel: KernelSpec::cosine(),
            measure: Measure::Cos,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e| format!("bad value `{raw}` for `{key}`: {e}"))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidParameter("image size must be positive".into()));
        }
        if self.support.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "gabor support {} must be odd",
                self.support
            )));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rank_tol {} must lie in (0, 1)",
                self.rank_tol
            )));
        }
        self.gabor.validate()?;
        self.block.validate()?;
        self.kernel.validate()?;
        if self.block.feature_len(self.height, self.width) == 0 {
            return Err(Error::InvalidParameter(format!(
                "{}x{} images hold no {}x{} window",
                self.height, self.width, self.block.omega, self.block.omega
            )));
        }
        Ok(())
    }

    /// Length of the feature vector produced for one image.
    pub fn feature_len(&self) -> usize {
        self.block.feature_len(self.height, self.width)
    }

    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut pairs = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .ok_or_else(|| (idx + 1, "expected `key=value`".to_string()))?;
            let key = key.trim().to_string();
            if pairs.insert(key.clone(), (idx + 1, raw.trim().to_string())).is_some() {
                return Err((idx + 1, format!("duplicate key `{key}`")));
            }
        }

        let mut cfg = Self::default();
        let kernel_type = match pairs.remove("kernel.type") {
            Some((_, t)) => t,
            None => "cosine".to_string(),
        };
        let mut scale: Option<f64> = None;
        let mut sigma = 1.0;
        let mut degree = 2u32;
        let mut offset = 0.0;
        let mut normalize = None;

        for (key, (line, raw)) in pairs {
            let at = |r: std::result::Result<(), String>| r.map_err(|e| (line, e));
            let k = key.as_str();
            at((|| {
                match k {
                    "image.height" => cfg.height = value(k, &raw)?,
                    "image.width" => cfg.width = value(k, &raw)?,
                    "gabor.k_max" => cfg.gabor.k_max = value(k, &raw)?,
                    "gabor.f" => cfg.gabor.spacing = value(k, &raw)?,
                    "gabor.sigma" => cfg.gabor.sigma = value(k, &raw)?,
                    "gabor.scales" => cfg.gabor.num_scales = value(k, &raw)?,
                    "gabor.orientations" => cfg.gabor.num_orientations = value(k, &raw)?,
                    "gabor.support" => cfg.support = value(k, &raw)?,
                    "block.omega" => cfg.block.omega = value(k, &raw)?,
                    "block.c" => cfg.block.block = value(k, &raw)?,
                    "kernel.scale" if kernel_type == "cosine" => {
                        scale = if raw == "auto" { None } else { Some(value(k, &raw)?) }
                    }
                    "kernel.sigma" if kernel_type == "rbf" => sigma = value(k, &raw)?,
                    "kernel.degree" if kernel_type == "polynomial" => degree = value(k, &raw)?,
                    "kernel.offset" if kernel_type == "polynomial" => offset = value(k, &raw)?,
                    "kernel.normalize" => normalize = Some(value(k, &raw)?),
                    "measure" => {
                        cfg.measure = raw.parse().map_err(|e: Error| e.to_string())?
                    }
                    "rank_tol" => cfg.rank_tol = value(k, &raw)?,
                    "kernel.scale" | "kernel.sigma" | "kernel.degree" | "kernel.offset" => {
                        return Err(format!("`{k}` does not apply to kernel.type={kernel_type}"))
                    }
                    _ => return Err(format!("unknown key `{k}`")),
                }
                Ok(())
            })())?;
        }

        let kernel = match kernel_type.as_str() {
            "cosine" => KernelSpec {
                kind: KernelKind::Cosine { scale },
                normalize: normalize.unwrap_or(true),
            },
            "rbf" => KernelSpec::rbf(sigma).normalized(normalize.unwrap_or(false)),
            "polynomial" => {
                KernelSpec::polynomial(degree, offset).normalized(normalize.unwrap_or(false))
            }
            other => {
                return Err((
                    0,
                    format!("unknown kernel.type `{other}` (expected cosine, rbf or polynomial)"),
                ))
            }
        };
        cfg.kernel = kernel;
        cfg.validate().map_err(|e| (0, e.to_string()))?;
        Ok(cfg)
    }

    pub fn serialize(&self) -> String {
        let g = &self.gabor;
        let mut out = String::new();
        let _ = writeln!(out, "image.height={}", self.height);
        let _ = writeln!(out, "image.width={}", self.width);
        let _ = writeln!(out, "gabor.k_max={}", g.k_max);
        let _ = writeln!(out, "gabor.f={}", g.spacing);
        let _ = writeln!(out, "gabor.sigma={}", g.sigma);
        let _ = writeln!(out, "gabor.scales={}", g.num_scales);
        let _ = writeln!(out, "gabor.orientations={}", g.num_orientations);
        let _ = writeln!(out, "gabor.support={}", self.support);
        let _ = writeln!(out, "block.omega={}", self.block.omega);
        let _ = writeln!(out, "block.c={}", self.block.block);
        match self.kernel.kind {
            KernelKind::Cosine { scale } => {
                out.push_str("kernel.type=cosine\n");
                match scale {
                    Some(s) => {
                        let _ = writeln!(out, "kernel.scale={s}");
                    }
                    None => out.push_str("kernel.scale=auto\n"),
                }
            }
            KernelKind::Rbf { sigma } => {
                let _ = writeln!(out, "kernel.type=rbf\nkernel.sigma={sigma}");
            }
            KernelKind::Polynomial { degree, offset } => {
                let _ = writeln!(
                    out,
                    "kernel.type=polynomial\nkernel.degree={degree}\nkernel.offset={offset}"
                );
            }
        }
        let _ = writeln!(out, "kernel.normalize={}", self.kernel.normalize);
        let _ = writeln!(out, "measure={}", self.measure);
        let _ = writeln!(out, "rank_tol={:e}", self.rank_tol);
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, reason)| match line {
            0 => Error::InvalidParameter(format!("{}: {reason}", path.display())),
            _ => Error::parse(path, line, reason),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.serialize()).map_err(|e| Error::io(path, e))
    }
}
