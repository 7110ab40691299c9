//! Face recognition from low-energized Gabor blocks and kernel discriminative
//! common vectors.
//!
//! The pipeline runs image -> [`gabor`] magnitude responses -> [`blocks`]
//! feature vector -> [`kdcv`] discriminant vector -> [`classifier`] ranking,
//! with [`evaluation`] turning rankings into identification and verification
//! metrics. [`pipeline`] wires the stages together for whole datasets and
//! [`commands`] backs the `gkdcv` command-line tool.

pub mod blocks;
pub mod classifier;
pub mod commands;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod formats;
pub mod gabor;
pub mod image_io;
pub mod kdcv;
pub mod kernel;
pub mod model_io;
pub mod pipeline;
pub mod synthetic;

pub use blocks::{extract, fuse, BlockConfig, FeatureVector, FusedImage};
pub use classifier::{classify, score, Measure, Ranking};
pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use evaluation::{closed_set_eval, metrics, verification_eval, ConfusionCounts, EvalReport};
pub use gabor::{GaborBank, GaborParams, ResponseStack};
pub use image_io::{load_image, resize, DatasetManifest, GrayImage, Role};
pub use kdcv::{fit, CommonVectors, KdcvModel};
pub use kernel::{KernelKind, KernelSpec};
pub use model_io::{load_model, save_model};
pub use pipeline::FeaturePipeline;
