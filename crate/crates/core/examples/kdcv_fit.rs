//! Fit a discriminant model on the bundled training images.
//!
//! Shows the model dimensions and the spread of each class after projection.

use gkdcv::synthetic::bundled_dir;
use gkdcv::{fit, DatasetManifest, FeaturePipeline, PipelineConfig, Role};

fn main() -> gkdcv::Result<()> {
    let manifest = DatasetManifest::load(bundled_dir().join("manifest.csv"))?;
    let cfg = PipelineConfig::default();
    let pipeline = FeaturePipeline::new(&cfg)?;

    let train: Vec<_> = manifest.with_role(Role::Train).collect();
    let paths: Vec<_> = train.iter().map(|e| manifest.resolve(e)).collect();
    let labels: Vec<usize> = train.iter().map(|e| e.class_id).collect();
    let features = pipeline.features_for_files(&paths)?;

    let model = fit(&features, &labels, cfg.kernel, cfg.rank_tol)?;
    println!(
        "M={} d={} r={} p={} C={}",
        model.num_samples(),
        model.feature_dim(),
        model.rank(),
        model.dim(),
        model.num_classes()
    );

    // Training samples of one class collapse onto their common vector.
    let projected = model.project_all(&features)?;
    for (y, &class) in projected.iter().zip(&labels).step_by(3) {
        let cv = model.common_vectors().row(class);
        let gap: f64 = y.iter().zip(cv).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        println!("class {class}: distance to common vector {gap:.2e}");
    }
    Ok(())
}
