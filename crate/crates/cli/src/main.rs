//! `specdetect`: synthesize, enhance, train, infer and evaluate.
//!
//! Exit codes: 0 success, 1 data or domain error, 2 usage error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

/// Bad or missing flags; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(
    name = "specdetect",
    version,
    about = "Detect CNN-generated images from enhanced spectra"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Crop side N in pixels (default 64).
    #[arg(long)]
    pub crop_size: Option<usize>,
    /// Number of crops L per image (default 16).
    #[arg(long)]
    pub crops: Option<usize>,
    /// Magnitude floor inside log10 (default 1e-12).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Seed for every random choice (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// `key=value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Detector {
    Spectrum,
    Pixel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    /// 3×3 box, strong checkerboard.
    Box,
    /// 7×7 Gaussian (σ = 1.5), near-ideal low-pass.
    Gaussian,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic real/fake dataset and its manifest.
    Synth(SynthArgs),
    /// Compute the enhanced spectrum of one image.
    Enhance(EnhanceArgs),
    /// Train a detector from a labeled manifest.
    Train(TrainArgs),
    /// Score images with one detector or the ensemble.
    Infer(InferArgs),
    /// Score a labeled manifest and report F-score and AP.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of real images.
    #[arg(long)]
    pub real: Option<usize>,
    /// Number of fake images.
    #[arg(long)]
    pub fake: Option<usize>,
    /// Image side in pixels (default 256).
    #[arg(long)]
    pub size: Option<usize>,
    /// Zero-insertion upsampling factor (default 2).
    #[arg(long)]
    pub factor: Option<usize>,
    /// Value-noise octaves (default 5).
    #[arg(long)]
    pub octaves: Option<usize>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelKind>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct EnhanceArgs {
    /// PGM or PPM image.
    pub image: PathBuf,
    /// Destination `.esp` file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a centre-shifted PGM rendering of the spectrum.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Lower end of the dump range (default: spectrum minimum).
    #[arg(long, requires = "hi", allow_negative_numbers = true)]
    pub lo: Option<f64>,
    /// Upper end of the dump range (default: spectrum maximum).
    #[arg(long, requires = "lo", allow_negative_numbers = true)]
    pub hi: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Manifest CSV with `path,label` rows.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Destination model file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub detector: Option<Detector>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Spectrum model (or any single model).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Pixel-domain model.
    #[arg(long)]
    pub pixel_model: Option<PathBuf>,
    /// Fuse pixel and spectrum scores; needs both models.
    #[arg(long)]
    pub ensemble: bool,
}

#[derive(Args, Debug)]
pub struct InferArgs {
    /// Images to score.
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub models: ModelArgs,
    /// Decision threshold (default 0.5).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Write the precision-recall curve as CSV.
    #[arg(long)]
    pub pr_csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Enhance(_) => "enhance",
            Command::Train(_) => "train",
            Command::Infer(_) => "infer",
            Command::Eval(_) => "eval",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sub = cli.command.name();
    match commands::run(cli) {
        Ok(code) => code,
        Err(err) => {
            if let Some(usage) = err.downcast_ref::<UsageError>() {
                eprintln!("error: {usage}\n");
                let mut cmd = Cli::command();
                cmd.build();
                let usage_text = match cmd.find_subcommand_mut(sub) {
                    Some(sc) => sc.render_usage(),
                    None => cmd.render_usage(),
                };
                eprintln!("{usage_text}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {err:#}");
                ExitCode::from(1)
            }
        }
    }
}
