use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gkdcv::commands::{
    cmd_eval, cmd_extract, cmd_gabor_dump, cmd_predict, cmd_split, cmd_train, EvalMode,
    FeatureCache, PlaneFormat, PredictInput, Threshold,
};
use gkdcv::pipeline::{threads_from_env, with_threads};
use gkdcv::{Error, Measure, PipelineConfig, Result};

/// Gabor block features with kernel discriminative common vectors.
///
/// GKDCV_THREADS caps the number of worker threads.
#[derive(Parser)]
#[command(name = "gkdcv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// key=value pipeline configuration; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<PipelineConfig> {
        match &self.config {
            Some(path) => PipelineConfig::load(path),
            None => Ok(PipelineConfig::default()),
        }
    }
}

#[derive(Args)]
struct CacheArg {
    /// directory written by `extract`, used instead of recomputing features
    #[arg(long)]
    features: Option<PathBuf>,
}

impl CacheArg {
    fn load(&self) -> Result<Option<FeatureCache>> {
        self.features.as_deref().map(FeatureCache::load).transpose()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    L1,
    L2,
    Cos,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::L1 => Measure::L1,
            MeasureArg::L2 => Measure::L2,
            MeasureArg::Cos => Measure::Cos,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Closed,
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Pgm,
    Bin,
}

#[derive(Subcommand)]
enum Command {
    /// Write every Gabor magnitude plane of one image
    GaborDump {
        image: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_enum, default_value = "pgm")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract block features for every manifest entry
    Extract {
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model on the manifest's train entries
    Train {
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        cache: CacheArg,
        /// model file to write
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify images (or every entry of --manifest) and print CSV
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "images")]
        manifest: Option<PathBuf>,
        images: Vec<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        cache: CacheArg,
        #[arg(long, value_enum)]
        measure: Option<MeasureArg>,
        /// list the N best classes per image
        #[arg(long, value_name = "N")]
        ranking: Option<usize>,
        /// write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate identification or verification on a manifest
    Eval {
        #[arg(long)]
        model: PathBuf,
        manifest: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        cache: CacheArg,
        #[arg(long, value_enum)]
        measure: Option<MeasureArg>,
        #[arg(long, value_enum, default_value = "closed")]
        mode: ModeArg,
        /// fixed acceptance threshold
        #[arg(long, conflicts_with = "tau_sweep", allow_negative_numbers = true)]
        tau: Option<f64>,
        /// thresholds lo:hi:steps
        #[arg(long, value_name = "LO:HI:STEPS", allow_hyphen_values = true)]
        tau_sweep: Option<String>,
        /// report directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a first-k manifest from a directory per class
    Split {
        root: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// treat the last N class directories as impostors
        #[arg(long, default_value_t = 0, value_name = "N")]
        impostor_classes: usize,
        /// manifest file to write
        #[arg(long)]
        out: PathBuf,
    },
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GaborDump { image, config, format, out } => {
            let format = match format {
                FormatArg::Pgm => PlaneFormat::Pgm,
                FormatArg::Bin => PlaneFormat::Bin,
            };
            let files = cmd_gabor_dump(&image, &config.load()?, &out, format)?;
            println!("wrote {} planes to {}", files.len(), out.display());
        }
        Command::Extract { manifest, config, out } => {
            let rows = cmd_extract(&manifest, &config.load()?, &out)?;
            println!("wrote {rows} feature rows to {}", out.display());
        }
        Command::Train { manifest, config, cache, out } => {
            let summary = cmd_train(&manifest, &config.load()?, &out, cache.load()?.as_ref())?;
            println!("{summary}");
        }
        Command::Predict { model, manifest, images, config, cache, measure, ranking, out } => {
            let config = config.load()?;
            let input = match manifest {
                Some(m) => PredictInput::Manifest(m),
                None if images.is_empty() => {
                    return Err(Error::InvalidParameter(
                        "predict needs --manifest or at least one image".into(),
                    ))
                }
                None => PredictInput::Images(images),
            };
            let measure = measure.map_or(config.measure, Measure::from);
            let csv = cmd_predict(&model, &input, &config, measure, ranking, cache.load()?.as_ref())?;
            write_or_print(out.as_deref(), &csv)?;
        }
        Command::Eval { model, manifest, config, cache, measure, mode, tau, tau_sweep, out } => {
            let config = config.load()?;
            let threshold = match (tau, tau_sweep) {
                (Some(t), _) => Threshold::Fixed(t),
                (None, Some(s)) => s.parse()?,
                (None, None) => Threshold::Auto,
            };
            let mode = match mode {
                ModeArg::Closed => EvalMode::Closed,
                ModeArg::Verify => EvalMode::Verify,
            };
            let measure = measure.map_or(config.measure, Measure::from);
            let output = cmd_eval(
                &model,
                &manifest,
                &config,
                measure,
                mode,
                threshold,
                &out,
                cache.load()?.as_ref(),
            )?;
            print!("{}", output.text);
        }
        Command::Split { root, k, impostor_classes, out } => {
            let manifest = cmd_split(&root, k, impostor_classes, &out)?;
            println!("wrote {} entries to {}", manifest.entries().len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = threads_from_env().and_then(|threads| with_threads(threads, || run(cli.command)));
    match result.and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {message}", e.category());
            ExitCode::FAILURE
        }
    }
}
