//! Full pipeline from a directory of images to identification metrics.
//!
//! ```text
//! cargo run --release --example end_to_end -- [image-root] [k]
//! ```
//!
//! The root holds one subdirectory per person. The first `k` images of each
//! person train the model and the rest are probes.

use gkdcv::commands::{cmd_split, cmd_train, evaluate, EvalMode, Threshold};
use gkdcv::synthetic::bundled_dir;
use gkdcv::{load_model, Measure, PipelineConfig};

fn main() -> gkdcv::Result<()> {
    let mut args = std::env::args().skip(1);
    let root = args.next().map_or_else(bundled_dir, Into::into);
    let k = args.next().map_or(Ok(3), |s| s.parse()).map_err(|e| {
        gkdcv::Error::InvalidParameter(format!("k: {e}"))
    })?;

    let out = std::env::temp_dir().join("gkdcv-end-to-end");
    let manifest_path = out.join("manifest.csv");
    let manifest = cmd_split(&root, k, 0, &manifest_path)?;

    let cfg = PipelineConfig::default();
    let model_path = out.join("model.kdcv");
    println!("{}", cmd_train(&manifest_path, &cfg, &model_path, None)?);
    let model = load_model(&model_path)?;
    for measure in Measure::ALL {
        let (report, _) = evaluate(&model, &manifest, &cfg, measure, EvalMode::Closed, Threshold::Auto, None)?;
        print!("{}", report.summary());
    }
    Ok(())
}
