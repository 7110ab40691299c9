//! Image to feature vector, for single images and whole datasets.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::blocks::{extract, fuse};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::gabor::{BankPlan, GaborBank, ResponseStack};
use crate::image_io::{load_image, resize, GrayImage};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "GKDCV_THREADS";

/// Gabor bank planned once for the configured image size.
pub struct FeaturePipeline {
    config: PipelineConfig,
    plan: BankPlan,
}

impl FeaturePipeline {
    pub fn new(config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        let bank = GaborBank::new(config.gabor, config.support)?;
        let plan = bank.plan(config.height, config.width)?;
        Ok(Self {
            config: config.clone(),
            plan,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn feature_len(&self) -> usize {
        self.config.feature_len()
    }

    /// Resize to the configured size and compute all magnitude planes.
    pub fn responses(&self, img: &GrayImage) -> Result<ResponseStack> {
        let img = resize(img, self.config.height, self.config.width)?;
        self.plan.respond(&img)
    }

    pub fn features(&self, img: &GrayImage) -> Result<Vec<f64>> {
        let fused = fuse(&self.responses(img)?)?;
        Ok(extract(&fused, &self.config.block)?.into_values())
    }

    pub fn features_for_file(&self, path: &Path) -> Result<Vec<f64>> {
        let img = load_image(path)?;
        self.features(&img).map_err(|e| match e {
            Error::InvalidParameter(reason) | Error::Dataset(reason) => {
                Error::decode(path, reason)
            }
            other => other,
        })
    }

    /// Features for every path, in input order, computed in parallel.
    pub fn features_for_files(&self, paths: &[PathBuf]) -> Result<Vec<Vec<f64>>> {
        paths
            .par_iter()
            .map(|p| self.features_for_file(p))
            .collect()
    }
}

/// Worker count from [`THREADS_ENV`], or `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::InvalidParameter(format!("{THREADS_ENV}: {e}"))),
        Ok(raw) if raw.trim().is_empty() => Ok(None),
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidParameter(format!(
                "{THREADS_ENV}={raw} is not a positive integer"
            ))),
        },
    }
}

/// Run `f` on a pool of `threads` workers (all available cores if `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            height: 24,
            width: 28,
            support: 9,
            ..Default::default()
        }
    }

    #[test]
    fn feature_length_follows_config() {
        let pipe = FeaturePipeline::new(&small_config()).unwrap();
        let img = GrayImage::from_fn(40, 30, |r, c| ((r * 7 + c * 3) % 11) as f64 / 10.0).unwrap();
        let f = pipe.features(&img).unwrap();
        assert_eq!(f.len(), 3 * 4 * 9);
        assert_eq!(f.len(), pipe.feature_len());
    }

    #[test]
    fn single_and_multi_threaded_agree() {
        let pipe = FeaturePipeline::new(&small_config()).unwrap();
        let img = GrayImage::from_fn(28, 24, |r, c| ((r * c) % 13) as f64 / 12.0).unwrap();
        let one = with_threads(Some(1), || pipe.features(&img).unwrap()).unwrap();
        let many = with_threads(Some(4), || pipe.features(&img).unwrap()).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn kernel_larger_than_image_is_rejected() {
        let cfg = PipelineConfig {
            height: 20,
            width: 20,
            ..Default::default()
        };
        assert!(FeaturePipeline::new(&cfg).is_err());
    }
}
