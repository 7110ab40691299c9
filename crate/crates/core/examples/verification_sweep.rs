//! Verification with genuine and impostor claims over a threshold sweep.
//!
//! The last two synthetic identities are held out of training and claim
//! enrolled identities.

use gkdcv::commands::cmd_split;
use gkdcv::evaluation::{LabeledProbe, ThresholdSweep, VerificationScores};
use gkdcv::synthetic::SyntheticFaces;
use gkdcv::{fit, FeaturePipeline, Measure, PipelineConfig, Role};

fn main() -> gkdcv::Result<()> {
    let work = std::env::temp_dir().join("gkdcv-verification-example");
    SyntheticFaces { classes: 10, ..Default::default() }.write(&work)?;
    let manifest = cmd_split(&work, 3, 2, &work.join("split.csv"))?;

    let cfg = PipelineConfig::default();
    let pipeline = FeaturePipeline::new(&cfg)?;
    let load = |role| -> gkdcv::Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let entries: Vec<_> = manifest.with_role(role).collect();
        let paths: Vec<_> = entries.iter().map(|e| manifest.resolve(e)).collect();
        Ok((pipeline.features_for_files(&paths)?, entries.iter().map(|e| e.class_id).collect()))
    };
    let (train, labels) = load(Role::Train)?;
    let model = fit(&train, &labels, cfg.kernel, cfg.rank_tol)?;
    let probes = |role| -> gkdcv::Result<Vec<LabeledProbe>> {
        let (xs, claims) = load(role)?;
        xs.iter()
            .zip(claims)
            .map(|(x, c)| Ok(LabeledProbe::new(model.project(x)?, c)))
            .collect()
    };

    let scores = VerificationScores::compute(
        model.common_vectors(),
        &probes(Role::ProbeGenuine)?,
        &probes(Role::ProbeImpostor)?,
        Measure::Cos,
    )?;
    let sweep = scores.sweep(&ThresholdSweep::grid(-1.0, 0.0, 21)?)?;
    print!("{}", sweep.to_csv());
    if let Some(eer) = sweep.equal_error_point() {
        println!("equal error near tau={:.3}", eer.tau);
        print!("{}", scores.report_at(eer.tau)?.summary());
    }
    Ok(())
}
