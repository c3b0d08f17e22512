use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use specdetect::classifier::{
    load_model, save_model, train_with_history, ClassifierModel, TrainConfig,
};
use specdetect::enhance::DEFAULT_EPSILON;
use specdetect::ensemble::combine_scores;
use specdetect::image::{encode_pgm, encode_pgm_auto, read_image};
use specdetect::metrics::{evaluate, ScoredLabel, DEFAULT_THRESHOLD};
use specdetect::pipeline::{extract_features, DEFAULT_CROP_COUNT, DEFAULT_CROP_SIZE};
use specdetect::synthgen::{build_dataset, read_manifest, Kernel, SynthConfig, MANIFEST_NAME};
use specdetect::{EnhanceParams, FeatureSource};

use crate::config::ConfigFile;
use crate::{
    Cli, Command, Common, Detector, EnhanceArgs, EvalArgs, InferArgs, KernelKind, ModelArgs,
    SynthArgs, TrainArgs, UsageError,
};

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Synth(args) => synth(args),
        Command::Enhance(args) => enhance(args),
        Command::Train(args) => train(args),
        Command::Infer(args) => infer(args),
        Command::Eval(args) => eval(args),
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| usage(format!("missing required flag --{flag}")))
}

fn enhance_params(common: &Common, file: &ConfigFile) -> Result<EnhanceParams> {
    Ok(EnhanceParams {
        crop_size: file.pick_or(common.crop_size, "crop-size", DEFAULT_CROP_SIZE)?,
        crop_count: file.pick_or(common.crops, "crops", DEFAULT_CROP_COUNT)?,
        seed: file.pick_or(common.seed, "seed", 0)?,
        epsilon: file.pick_or(common.epsilon, "epsilon", DEFAULT_EPSILON)?,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn synth(args: SynthArgs) -> Result<ExitCode> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let out: PathBuf = required(file.pick(args.out, "out")?, "out")?;
    let defaults = SynthConfig::default();
    let kernel = match file
        .pick_or(args.kernel.map(kernel_name), "kernel", "box".to_owned())?
        .as_str()
    {
        "box" => Kernel::default(),
        "gaussian" => Kernel::gaussian(7, 1.5)?,
        other => return Err(usage(format!("unknown kernel `{other}`"))),
    };
    let cfg = SynthConfig {
        image_size: file.pick_or(args.size, "size", defaults.image_size)?,
        upsample_factor: file.pick_or(args.factor, "factor", defaults.upsample_factor)?,
        kernel,
        noise_octaves: file.pick_or(args.octaves, "octaves", defaults.noise_octaves)?,
        count_real: file.pick_or(args.real, "real", defaults.count_real)?,
        count_fake: file.pick_or(args.fake, "fake", defaults.count_fake)?,
        seed: file.pick_or(args.common.seed, "seed", 0)?,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let manifest = build_dataset(&cfg, &out)?;
    println!(
        "manifest={} images={} digest={}",
        out.join(MANIFEST_NAME).display(),
        manifest.entries.len(),
        manifest.config_digest.unwrap_or_default()
    );
    Ok(ExitCode::SUCCESS)
}

fn kernel_name(kind: KernelKind) -> String {
    match kind {
        KernelKind::Box => "box",
        KernelKind::Gaussian => "gaussian",
    }
    .to_owned()
}

fn enhance(args: EnhanceArgs) -> Result<ExitCode> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let params = enhance_params(&args.common, &file)?;
    let out: PathBuf = required(file.pick(args.out, "out")?, "out")?;
    let img = read_image(&args.image)?;
    let spectrum = params
        .enhance(&img)
        .with_context(|| format!("enhancing {}", args.image.display()))?;
    write_file(&out, &spectrum.to_bytes())?;
    if let Some(dump) = &args.dump {
        let shifted = spectrum.center_shifted();
        let bytes = match (args.lo, args.hi) {
            (Some(lo), Some(hi)) => {
                encode_pgm(&shifted, lo, hi).map_err(|e| usage(e.to_string()))?
            }
            _ => encode_pgm_auto(&shifted)?,
        };
        write_file(dump, &bytes)?;
    }
    println!(
        "{} size={} crops={}",
        out.display(),
        spectrum.size(),
        spectrum.crop_count()
    );
    Ok(ExitCode::SUCCESS)
}

fn features_for(
    paths: &[PathBuf],
    source: FeatureSource,
    params: &EnhanceParams,
) -> Vec<Result<specdetect::FeatureVector>> {
    paths
        .par_iter()
        .map(|p| {
            let img = read_image(p)?;
            extract_features(&img, source, params)
                .with_context(|| format!("processing {}", p.display()))
        })
        .collect()
}

fn train(args: TrainArgs) -> Result<ExitCode> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let params = enhance_params(&args.common, &file)?;
    let manifest_path: PathBuf = required(file.pick(args.manifest, "manifest")?, "manifest")?;
    let out: PathBuf = required(file.pick(args.out, "out")?, "out")?;
    let detector = match args.detector {
        Some(d) => d,
        None => match file.pick(None::<String>, "detector")?.as_deref() {
            None | Some("spectrum") => Detector::Spectrum,
            Some("pixel") => Detector::Pixel,
            Some(other) => return Err(usage(format!("unknown detector `{other}`"))),
        },
    };
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        learning_rate: file.pick_or(args.lr, "lr", defaults.learning_rate)?,
        epochs: file.pick_or(args.epochs, "epochs", defaults.epochs)?,
        batch_size: file.pick_or(args.batch_size, "batch-size", defaults.batch_size)?,
        l2: file.pick_or(args.l2, "l2", defaults.l2)?,
        seed: params.seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let manifest = read_manifest(&manifest_path)?;
    if !manifest.has_both_labels() {
        bail!(
            "{}: training needs both labels 0 and 1",
            manifest_path.display()
        );
    }
    let source = match detector {
        Detector::Spectrum => FeatureSource::Spectrum,
        Detector::Pixel => FeatureSource::Pixel,
    };
    let paths: Vec<PathBuf> = manifest.entries.iter().map(|e| e.path.clone()).collect();
    let features = features_for(&paths, source, &params)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let (model, history) = train_with_history(&features, &manifest.labels(), &cfg)?;
    for (epoch, loss) in history.losses.iter().enumerate().skip(1) {
        eprintln!("epoch {epoch:>4} loss {loss:.6}");
    }
    write_file(&out, &save_model(&model))?;
    println!(
        "model={} detector={} samples={} initial_loss={:.6} final_loss={:.6}",
        out.display(),
        source,
        features.len(),
        history.initial(),
        history.last()
    );
    Ok(ExitCode::SUCCESS)
}

/// Loaded models for one scoring run.
enum Scorer {
    Single(ClassifierModel),
    Ensemble {
        pixel: ClassifierModel,
        spectrum: ClassifierModel,
    },
}

/// Per-image scores: `(r_i, r_f, r)` for the ensemble, `r` otherwise.
enum Scores {
    Single(f64),
    Ensemble(f64, f64, f64),
}

impl Scores {
    fn final_score(&self) -> f64 {
        match *self {
            Scores::Single(r) | Scores::Ensemble(_, _, r) => r,
        }
    }
}

fn read_model(path: &Path) -> Result<ClassifierModel> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_model(&bytes).with_context(|| format!("loading {}", path.display()))
}

impl Scorer {
    fn load(models: &ModelArgs, file: &ConfigFile) -> Result<Self> {
        let spectrum: Option<PathBuf> = file.pick(models.model.clone(), "model")?;
        let pixel: Option<PathBuf> = file.pick(models.pixel_model.clone(), "pixel-model")?;
        match (models.ensemble, spectrum, pixel) {
            (true, Some(s), Some(p)) => {
                let spectrum = read_model(&s)?;
                let pixel = read_model(&p)?;
                if spectrum.source() != FeatureSource::Spectrum
                    || pixel.source() != FeatureSource::Pixel
                {
                    bail!("--model must be a spectrum model and --pixel-model a pixel model");
                }
                Ok(Scorer::Ensemble { pixel, spectrum })
            }
            (true, _, _) => Err(usage("--ensemble needs both --model and --pixel-model")),
            (false, Some(_), Some(_)) => {
                Err(usage("two models given; pass --ensemble to fuse them"))
            }
            (false, Some(path), None) | (false, None, Some(path)) => {
                Ok(Scorer::Single(read_model(&path)?))
            }
            (false, None, None) => Err(usage("missing required flag --model")),
        }
    }

    fn score(&self, path: &Path, params: &EnhanceParams) -> Result<Scores> {
        let img = read_image(path)?;
        let run = |model: &ClassifierModel| -> Result<f64> {
            let f = extract_features(&img, model.source(), params)?;
            Ok(model.score(&f)?)
        };
        let scores = match self {
            Scorer::Single(model) => Scores::Single(run(model)?),
            Scorer::Ensemble { pixel, spectrum } => {
                let r_i = run(pixel)?;
                let r_f = run(spectrum)?;
                Scores::Ensemble(r_i, r_f, combine_scores(r_i, r_f)?)
            }
        };
        Ok(scores)
    }
}

fn infer(args: InferArgs) -> Result<ExitCode> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let params = enhance_params(&args.common, &file)?;
    let scorer = Scorer::load(&args.models, &file)?;
    let results: Vec<Result<Scores>> = args
        .images
        .par_iter()
        .map(|p| {
            scorer
                .score(p, &params)
                .with_context(|| format!("{}", p.display()))
        })
        .collect();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut failed = false;
    for (path, result) in args.images.iter().zip(results) {
        match result {
            Ok(Scores::Single(r)) => writeln!(out, "{} {r:.6}", path.display())?,
            Ok(Scores::Ensemble(r_i, r_f, r)) => {
                writeln!(out, "{} {r_i:.6} {r_f:.6} {r:.6}", path.display())?
            }
            Err(e) => {
                failed = true;
                eprintln!("error: {e:#}");
            }
        }
    }
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn eval(args: EvalArgs) -> Result<ExitCode> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let params = enhance_params(&args.common, &file)?;
    let manifest_path: PathBuf = required(file.pick(args.manifest, "manifest")?, "manifest")?;
    let threshold = file.pick_or(args.threshold, "threshold", DEFAULT_THRESHOLD)?;
    let scorer = Scorer::load(&args.models, &file)?;
    let manifest = read_manifest(&manifest_path)?;
    if !manifest.entries.iter().any(|e| e.label.is_positive()) {
        bail!(
            "{}: no positive (label 1) entries; recall and AP are undefined",
            manifest_path.display()
        );
    }
    let scored = manifest
        .entries
        .par_iter()
        .map(|e| {
            let s = scorer
                .score(&e.path, &params)
                .with_context(|| format!("{}", e.path.display()))?;
            Ok(ScoredLabel::new(s.final_score(), e.label)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = evaluate(&scored, threshold).map_err(|e| anyhow!(e))?;
    println!("{report}");
    eprintln!("{}", report.percent_summary());
    if let Some(csv) = &args.pr_csv {
        write_file(csv, report.pr_csv().as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}
