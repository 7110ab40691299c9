//! Rank classes for held-out probes under each similarity measure.

use gkdcv::synthetic::bundled_dir;
use gkdcv::{classify, fit, DatasetManifest, FeaturePipeline, Measure, PipelineConfig, Role};

fn main() -> gkdcv::Result<()> {
    let manifest = DatasetManifest::load(bundled_dir().join("manifest.csv"))?;
    let cfg = PipelineConfig::default();
    let pipeline = FeaturePipeline::new(&cfg)?;

    let load = |role| -> gkdcv::Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let entries: Vec<_> = manifest.with_role(role).collect();
        let paths: Vec<_> = entries.iter().map(|e| manifest.resolve(e)).collect();
        Ok((pipeline.features_for_files(&paths)?, entries.iter().map(|e| e.class_id).collect()))
    };
    let (train, labels) = load(Role::Train)?;
    let (probes, truth) = load(Role::ProbeGenuine)?;
    let model = fit(&train, &labels, cfg.kernel, cfg.rank_tol)?;

    for measure in Measure::ALL {
        let mut correct = 0;
        for (x, &class) in probes.iter().zip(&truth) {
            let ranking = classify(model.common_vectors(), &model.project(x)?, measure)?;
            correct += usize::from(ranking.predicted() == class);
        }
        println!("{measure}: {correct}/{} correct at rank 1", probes.len());
    }

    let ranking = classify(model.common_vectors(), &model.project(&probes[0])?, Measure::Cos)?;
    println!("top 3 for first probe (class {}):", truth[0]);
    for (class, score) in ranking.entries().iter().take(3) {
        println!("  class {class}  score {score:.4}");
    }
    Ok(())
}
