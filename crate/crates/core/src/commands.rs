//! Operations behind the `gkdcv` subcommands.
//!
//! Every command is deterministic: identical inputs and configuration give
//! byte-identical output files.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use crate::classifier::{classify, Measure};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::evaluation::{closed_set_eval, EvalReport, LabeledProbe, ThresholdSweep, VerificationScores};
use crate::formats::{
    encode_plane, feature_index_csv, plane_to_pgm, read_feature_index, read_feature_matrix,
    write_feature_matrix, FeatureRow,
};
use crate::image_io::{first_k_split, load_image, DatasetManifest, ManifestEntry, Role};
use crate::kdcv::{fit, KdcvModel};
use crate::model_io::{load_model, save_model};
use crate::pipeline::FeaturePipeline;

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneFormat {
    Pgm,
    Bin,
}

impl PlaneFormat {
    fn extension(self) -> &'static str {
        match self {
            PlaneFormat::Pgm => "pgm",
            PlaneFormat::Bin => "bin",
        }
    }
}

/// Write one file per Gabor magnitude plane, named `plane_v{nu}_u{mu}`.
pub fn cmd_gabor_dump(
    image: &Path,
    config: &PipelineConfig,
    out_dir: &Path,
    format: PlaneFormat,
) -> Result<Vec<PathBuf>> {
    let pipeline = FeaturePipeline::new(config)?;
    let stack = pipeline.responses(&load_image(image)?)?;
    create_dir(out_dir)?;
    let mut written = Vec::with_capacity(stack.len());
    for nu in 0..stack.num_scales() {
        for mu in 0..stack.num_orientations() {
            let plane = stack.plane(nu, mu);
            let path = out_dir.join(format!("plane_v{nu}_u{mu}.{}", format.extension()));
            let bytes = match format {
                PlaneFormat::Pgm => plane_to_pgm(stack.height(), stack.width(), plane),
                PlaneFormat::Bin => encode_plane(stack.height(), stack.width(), plane),
            };
            write_file(&path, bytes)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Features of previously extracted images, keyed by resolved path.
#[derive(Debug, Default)]
pub struct FeatureCache {
    rows: HashMap<PathBuf, Vec<f64>>,
}

impl FeatureCache {
    /// Load `features.bin` and `features.csv` written by [`cmd_extract`].
    pub fn load(dir: &Path) -> Result<Self> {
        let matrix = read_feature_matrix(dir.join("features.bin"))?;
        let index = read_feature_index(dir.join("features.csv"))?;
        if matrix.len() != index.len() {
            return Err(Error::dims(
                index.len(),
                matrix.len(),
                format!("feature rows in {}", dir.display()),
            ));
        }
        Ok(Self {
            rows: index.into_iter().map(|r| r.path).zip(matrix).collect(),
        })
    }

    pub fn get(&self, path: &Path) -> Option<&Vec<f64>> {
        self.rows.get(path)
    }
}

/// Features for `paths`, from the cache when present and computed otherwise.
fn features_for(
    pipeline: &FeaturePipeline,
    paths: &[PathBuf],
    cache: Option<&FeatureCache>,
) -> Result<Vec<Vec<f64>>> {
    let missing: Vec<PathBuf> = paths
        .iter()
        .filter(|p| cache.and_then(|c| c.get(p)).is_none())
        .cloned()
        .collect();
    let mut computed = pipeline.features_for_files(&missing)?.into_iter();
    let expected = pipeline.feature_len();
    paths
        .iter()
        .map(|p| {
            let row = match cache.and_then(|c| c.get(p)) {
                Some(row) => row.clone(),
                None => computed.next().expect("one computed row per missing path"),
            };
            if row.len() != expected {
                return Err(Error::dims(
                    expected,
                    row.len(),
                    format!("cached features of {}", p.display()),
                ));
            }
            Ok(row)
        })
        .collect()
}

fn resolved(manifest: &DatasetManifest, entries: &[&ManifestEntry]) -> Vec<PathBuf> {
    entries.iter().map(|e| manifest.resolve(e)).collect()
}

/// Extract features for every manifest entry into `features.bin` and
/// `features.csv` under `out_dir`.
pub fn cmd_extract(manifest_path: &Path, config: &PipelineConfig, out_dir: &Path) -> Result<usize> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let pipeline = FeaturePipeline::new(config)?;
    let entries: Vec<&ManifestEntry> = manifest.entries().iter().collect();
    let paths = resolved(&manifest, &entries);
    let rows = pipeline.features_for_files(&paths)?;
    create_dir(out_dir)?;
    write_feature_matrix(out_dir.join("features.bin"), &rows)?;
    let index: Vec<FeatureRow> = paths
        .into_iter()
        .zip(&entries)
        .map(|(path, e)| FeatureRow {
            path,
            class_id: e.class_id,
        })
        .collect();
    write_file(&out_dir.join("features.csv"), feature_index_csv(&index))?;
    Ok(rows.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainSummary {
    /// Training samples.
    pub samples: usize,
    pub classes: usize,
    pub feature_dim: usize,
    /// Retained kernel PCA components.
    pub rank: usize,
    /// Discriminant dimensions.
    pub dim: usize,
}

impl fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M={} C={} d={} r={} p={}",
            self.samples, self.classes, self.feature_dim, self.rank, self.dim
        )
    }
}

pub fn train_model(
    manifest: &DatasetManifest,
    config: &PipelineConfig,
    cache: Option<&FeatureCache>,
) -> Result<KdcvModel> {
    let pipeline = FeaturePipeline::new(config)?;
    let entries: Vec<&ManifestEntry> = manifest.with_role(Role::Train).collect();
    if entries.is_empty() {
        return Err(Error::Dataset("manifest has no train entries".into()));
    }
    let features = features_for(&pipeline, &resolved(manifest, &entries), cache)?;
    let labels: Vec<usize> = entries.iter().map(|e| e.class_id).collect();
    fit(&features, &labels, config.kernel, config.rank_tol)
}

pub fn cmd_train(
    manifest_path: &Path,
    config: &PipelineConfig,
    model_out: &Path,
    cache: Option<&FeatureCache>,
) -> Result<TrainSummary> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let model = train_model(&manifest, config, cache)?;
    save_model(&model, model_out)?;
    Ok(TrainSummary {
        samples: model.num_samples(),
        classes: model.num_classes(),
        feature_dim: model.feature_dim(),
        rank: model.rank(),
        dim: model.dim(),
    })
}

fn check_model_fits(model: &KdcvModel, config: &PipelineConfig) -> Result<()> {
    if model.feature_dim() != config.feature_len() {
        return Err(Error::dims(
            model.feature_dim(),
            config.feature_len(),
            format!(
                "model feature length vs {}x{} images with {}x{} windows and {}x{} blocks",
                config.height,
                config.width,
                config.block.omega,
                config.block.omega,
                config.block.block,
                config.block.block
            ),
        ));
    }
    Ok(())
}

fn project_paths(
    model: &KdcvModel,
    config: &PipelineConfig,
    paths: &[PathBuf],
    cache: Option<&FeatureCache>,
) -> Result<Vec<Vec<f64>>> {
    check_model_fits(model, config)?;
    let pipeline = FeaturePipeline::new(config)?;
    model.project_all(&features_for(&pipeline, paths, cache)?)
}

/// Images to classify.
#[derive(Debug, Clone)]
pub enum PredictInput {
    /// Every entry of a manifest, in file order.
    Manifest(PathBuf),
    Images(Vec<PathBuf>),
}

/// CSV of `path,predicted_class,score`, or with `ranking = Some(n)` one
/// `path,rank,class,score` line for each of the top `n` classes.
pub fn cmd_predict(
    model_path: &Path,
    input: &PredictInput,
    config: &PipelineConfig,
    measure: Measure,
    ranking: Option<usize>,
    cache: Option<&FeatureCache>,
) -> Result<String> {
    let model = load_model(model_path)?;
    let paths = match input {
        PredictInput::Manifest(path) => {
            let manifest = DatasetManifest::load(path)?;
            let entries: Vec<&ManifestEntry> = manifest.entries().iter().collect();
            resolved(&manifest, &entries)
        }
        PredictInput::Images(paths) => paths.clone(),
    };
    let projected = project_paths(&model, config, &paths, cache)?;
    let mut out = String::new();
    match ranking {
        None => out.push_str("path,predicted_class,score\n"),
        Some(_) => out.push_str("path,rank,class,score\n"),
    }
    for (path, y) in paths.iter().zip(&projected) {
        let r = classify(model.common_vectors(), y, measure)?;
        match ranking {
            None => {
                let _ = writeln!(out, "{},{},{}", path.display(), r.predicted(), r.best_score());
            }
            Some(n) => {
                for (k, (class, score)) in r.top(n).iter().enumerate() {
                    let _ = writeln!(out, "{},{},{class},{score}", path.display(), k + 1);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Identification against every class template.
    Closed,
    /// Accept or reject claimed identities.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    Sweep { lo: f64, hi: f64, steps: usize },
    /// Sweep 101 thresholds across the observed score range.
    Auto,
}

impl std::str::FromStr for Threshold {
    type Err = Error;

    /// Parses `lo:hi:steps`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("threshold sweep `{s}` is not lo:hi:steps"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(Threshold::Sweep {
            lo: parts[0].trim().parse().map_err(|_| bad())?,
            hi: parts[1].trim().parse().map_err(|_| bad())?,
            steps: parts[2].trim().parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub report: EvalReport,
    pub sweep: Option<ThresholdSweep>,
    /// Human-readable report, also written to `report.txt`.
    pub text: String,
    pub files: Vec<PathBuf>,
}

pub fn evaluate(
    model: &KdcvModel,
    manifest: &DatasetManifest,
    config: &PipelineConfig,
    measure: Measure,
    mode: EvalMode,
    threshold: Threshold,
    cache: Option<&FeatureCache>,
) -> Result<(EvalReport, Option<ThresholdSweep>)> {
    let probes = |role: Role| -> Result<Vec<LabeledProbe>> {
        let entries: Vec<&ManifestEntry> = manifest.with_role(role).collect();
        let projected = project_paths(model, config, &resolved(manifest, &entries), cache)?;
        Ok(projected
            .into_iter()
            .zip(&entries)
            .map(|(y, e)| LabeledProbe::new(y, e.class_id))
            .collect())
    };
    let genuine = probes(Role::ProbeGenuine)?;
    if genuine.is_empty() {
        return Err(Error::Dataset("manifest has no probe-genuine entries".into()));
    }
    let closed = closed_set_eval(model.common_vectors(), &genuine, measure)?;
    if mode == EvalMode::Closed {
        return Ok((closed, None));
    }

    let impostor = probes(Role::ProbeImpostor)?;
    if impostor.is_empty() {
        return Err(Error::Dataset(
            "verify mode needs probe-impostor entries in the manifest".into(),
        ));
    }
    let scores = VerificationScores::compute(model.common_vectors(), &genuine, &impostor, measure)?;
    let (mut report, sweep) = match threshold {
        Threshold::Fixed(tau) => (scores.report_at(tau)?, None),
        sweep => {
            let taus = match sweep {
                Threshold::Sweep { lo, hi, steps } => ThresholdSweep::grid(lo, hi, steps)?,
                _ => {
                    let all = scores.genuine.iter().chain(&scores.impostor);
                    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
                    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
                    ThresholdSweep::grid(lo, hi.max(lo), 101)?
                }
            };
            let sweep = scores.sweep(&taus)?;
            let eer = sweep
                .equal_error_point()
                .expect("a sweep grid has at least two points");
            (scores.report_at(eer.tau)?, Some(sweep))
        }
    };
    report.cmc = closed.cmc;
    Ok((report, sweep))
}

/// Evaluate and write `report.txt`, `metrics.csv`, `cmc.csv` and, for
/// threshold sweeps, `sweep.csv` into `out_dir`.
#[allow(clippy::too_many_arguments)]
pub fn cmd_eval(
    model_path: &Path,
    manifest_path: &Path,
    config: &PipelineConfig,
    measure: Measure,
    mode: EvalMode,
    threshold: Threshold,
    out_dir: &Path,
    cache: Option<&FeatureCache>,
) -> Result<EvalOutput> {
    let model = load_model(model_path)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let (report, sweep) = evaluate(&model, &manifest, config, measure, mode, threshold, cache)?;

    let mut text = report.summary();
    if let Some(s) = &sweep {
        let _ = writeln!(
            text,
            "threshold sweep: {} points; equal error point at tau={}",
            s.points.len(),
            report.threshold.unwrap_or(f64::NAN)
        );
    }
    create_dir(out_dir)?;
    let mut files = Vec::new();
    let mut emit = |name: &str, contents: &str| -> Result<()> {
        let path = out_dir.join(name);
        write_file(&path, contents)?;
        files.push(path);
        Ok(())
    };
    emit("report.txt", &text)?;
    emit("metrics.csv", &report.metrics_csv())?;
    emit("cmc.csv", &report.cmc_csv())?;
    if let Some(s) = &sweep {
        emit("sweep.csv", &s.to_csv())?;
    }
    Ok(EvalOutput {
        report,
        sweep,
        text,
        files,
    })
}

/// First-`k` split of a class-per-directory tree, saved to `out`.
///
/// With `impostor_classes = n > 0` the last `n` class directories are not
/// enrolled; their images become impostor probes claiming the enrolled
/// identities in turn.
pub fn cmd_split(root: &Path, k: usize, impostor_classes: usize, out: &Path) -> Result<DatasetManifest> {
    let split = first_k_split(root, k)?;
    let total = split.num_classes();
    if impostor_classes >= total {
        return Err(Error::InvalidParameter(format!(
            "{impostor_classes} impostor classes leave no enrolled class out of {total}"
        )));
    }
    let enrolled = total - impostor_classes;
    let base = out.parent().unwrap_or(Path::new(""));
    let root_abs = std::path::absolute(root).map_err(|e| Error::io(root, e))?;
    let base_abs = std::path::absolute(base).map_err(|e| Error::io(base, e))?;
    let mut claims = 0;
    let entries = split
        .entries()
        .iter()
        .map(|e| {
            let full = root_abs.join(&e.path);
            let path = full
                .strip_prefix(&base_abs)
                .map(Path::to_path_buf)
                .unwrap_or(full.clone());
            if e.class_id < enrolled {
                ManifestEntry { path, ..e.clone() }
            } else {
                claims += 1;
                ManifestEntry {
                    path,
                    class_id: (claims - 1) % enrolled,
                    role: Role::ProbeImpostor,
                }
            }
        })
        .collect();
    let manifest = DatasetManifest::new(base, entries)?;
    manifest.save(out)?;
    Ok(manifest)
}
