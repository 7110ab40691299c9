//! Save a trained model, load it back and check projections agree.

use gkdcv::commands::cmd_train;
use gkdcv::synthetic::bundled_dir;
use gkdcv::{load_model, FeaturePipeline, PipelineConfig};

fn main() -> gkdcv::Result<()> {
    let cfg = PipelineConfig::default();
    let path = std::env::temp_dir().join("gkdcv-example.kdcv");
    let summary = cmd_train(&bundled_dir().join("manifest.csv"), &cfg, &path, None)?;
    println!("trained {summary}");
    println!("{} bytes at {}", std::fs::metadata(&path).map_or(0, |m| m.len()), path.display());

    let model = load_model(&path)?;
    let x = FeaturePipeline::new(&cfg)?.features_for_file(&bundled_dir().join("s05/04.pgm"))?;
    let y = model.project(&x)?;
    let again = load_model(&path)?.project(&x)?;
    assert_eq!(y, again);
    println!("projection of dimension {} identical after reload", y.len());
    Ok(())
}
