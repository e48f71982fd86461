//! Command-line front end: synthetic scene generation, training,
//! evaluation, generator sampling, and distribution comparison.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cvgan::ctensor::ComplexTensor;
use cvgan::data::{
    builtin_sigmas, compute_norm_stats, extract_patches, generate_scene, load_raster, save_raster,
    split, CoherencyPixel, CoherencyRaster, Layout, Quota, SplitSpec,
};
use cvgan::gan::{
    checkpoint, predict_classes, sample_latents, train, TrainInputs, TrainMode, TrainingConfig,
};
use cvgan::layers::Mode;
use cvgan::metrics::{histogram_compare, pcolor_ppm, reports_to_csv, ConfusionMatrix};

#[derive(Parser)]
#[command(
    name = "cvgan",
    about = "Complex-valued semi-supervised GAN for PolSAR coherency data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic complex-Wishart scene (CTM1 + LBL1 files)
    Synth(SynthArgs),
    /// Train a model on a scene and write a CVG1 checkpoint
    Train(Box<TrainArgs>),
    /// Classify a scene with a trained model and report OA/AA/Kappa
    Evaluate(EvalArgs),
    /// Sample patches from a trained generator into a CTM1 raster
    Generate(GenerateArgs),
    /// Histogram + KS comparison of two rasters (T11 and T12, both planes)
    CompareDist(CompareArgs),
    /// Render raster diagonals (T11, T22, T33) as an RGB PPM image
    Pcolor(PcolorArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Number of classes (2..=8, built-in class models)
    #[arg(long)]
    classes: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    #[arg(long, default_value_t = 128)]
    width: usize,
    /// Multilook count L
    #[arg(long, default_value_t = 8)]
    looks: usize,
    /// Class layout over the raster
    #[arg(long, default_value = "stripes")]
    layout: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output coherency raster (CTM1)
    #[arg(long)]
    out: PathBuf,
    /// Output label grid (LBL1)
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Input coherency raster (CTM1)
    #[arg(long)]
    data: PathBuf,
    /// Input label grid (LBL1)
    #[arg(long)]
    labels: PathBuf,
    /// Labeled patches per class (absolute count)
    #[arg(long, conflicts_with = "per_class_ratio")]
    per_class_count: Option<usize>,
    /// Labeled fraction of each class population
    #[arg(long)]
    per_class_ratio: Option<f64>,
    /// Fraction of all patches used as the unlabeled pool
    #[arg(long, default_value_t = 0.1)]
    unlabeled_fraction: f64,
    #[arg(long, default_value_t = 32)]
    patch: usize,
    /// Patch extraction stride (defaults to the patch size)
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, default_value_t = 0.0005)]
    lr: f64,
    #[arg(long, default_value_t = 0.5)]
    beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    /// Batch-normalization memory (batches averaged)
    #[arg(long, default_value_t = 8)]
    m: usize,
    /// Latent width per plane
    #[arg(long, default_value_t = 100)]
    latent: usize,
    /// semisup or supervised
    #[arg(long, default_value = "semisup")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generator deconv widths, deepest first
    #[arg(long, value_delimiter = ',', default_value = "64,32,16")]
    g_channels: Vec<usize>,
    /// Discriminator conv widths, input side first
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    d_channels: Vec<usize>,
    /// Output checkpoint (CVG1)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Trained checkpoint (CVG1)
    #[arg(long)]
    model: PathBuf,
    /// Patch extraction stride (defaults to the model patch size)
    #[arg(long)]
    stride: Option<usize>,
    /// Output confusion matrix CSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Number of patches to sample
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output raster of tiled patches (CTM1)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Actual-data raster (CTM1)
    #[arg(long)]
    real: PathBuf,
    /// Generated-data raster (CTM1)
    #[arg(long = "gen")]
    generated: PathBuf,
    #[arg(long, default_value_t = 64)]
    bins: usize,
    /// Output histogram CSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PcolorArgs {
    #[arg(long)]
    data: PathBuf,
    /// Output PPM image (P6)
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Train(args) => cmd_train(*args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Generate(args) => cmd_generate(args),
        Command::CompareDist(args) => cmd_compare(args),
        Command::Pcolor(args) => cmd_pcolor(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<()> {
    let layout = Layout::parse(&args.layout)?;
    let sigmas = builtin_sigmas(args.classes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let raster = generate_scene(
        args.classes,
        &sigmas,
        layout,
        args.looks,
        args.height,
        args.width,
        &mut rng,
    )?;
    save_raster(&raster, &args.out, Some(&args.labels))
        .with_context(|| format!("writing {} / {}", args.out.display(), args.labels.display()))?;
    Ok(())
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<()> {
    let quota = match (args.per_class_count, args.per_class_ratio) {
        (Some(n), None) => Quota::Count(n),
        (None, Some(r)) => Quota::Ratio(r),
        (None, None) => bail!("one of --per-class-count or --per-class-ratio is required"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    let raster = load_raster(&args.data, Some(&args.labels))
        .with_context(|| format!("loading {} / {}", args.data.display(), args.labels.display()))?;
    let k = raster.class_count();
    if k < 2 {
        bail!("labels define {k} classes; need at least 2");
    }
    let stride = args.stride.unwrap_or(args.patch);
    let patches = extract_patches(&raster, args.patch, stride)?;

    let spec = SplitSpec {
        quota,
        unlabeled_fraction: args.unlabeled_fraction,
        seed: args.seed,
    };
    let sets = split(&patches, k, &spec)?;
    for w in &sets.warnings {
        eprintln!("warning: {w}");
    }

    // normalization statistics from the training pools only
    let mut stat_indices: BTreeSet<usize> = sets.labeled.iter().map(|(i, _)| *i).collect();
    stat_indices.extend(sets.unlabeled.iter());
    let stat_indices: Vec<usize> = stat_indices.into_iter().collect();
    let norm = compute_norm_stats(&patches, &stat_indices)?;

    let labeled: Vec<(ComplexTensor, usize)> = sets
        .labeled
        .iter()
        .map(|&(i, label)| {
            let mut t = patches[i].data.clone();
            norm.apply(&mut t);
            (t, label)
        })
        .collect();
    let unlabeled: Vec<ComplexTensor> = sets
        .unlabeled
        .iter()
        .map(|&i| {
            let mut t = patches[i].data.clone();
            norm.apply(&mut t);
            t
        })
        .collect();

    let config = TrainingConfig {
        patch_size: args.patch,
        lr: args.lr,
        beta1: args.beta1,
        beta2: args.beta2,
        batch_size: args.batch,
        epochs: args.epochs,
        m: args.m,
        latent_width: args.latent,
        seed: args.seed,
        mode: TrainMode::parse(&args.mode)?,
        k,
        in_channels: 6,
        g_channels: args.g_channels.clone(),
        d_channels: args.d_channels.clone(),
    };
    let model = train(
        &config,
        &TrainInputs {
            labeled: &labeled,
            unlabeled: &unlabeled,
        },
    )?;

    println!("epoch,l_labeled,l_unlabeled,l_generated,l_generator");
    for (epoch, row) in model.epoch_log.iter().enumerate() {
        println!(
            "{},{},{},{},{}",
            epoch, row.l_labeled, row.l_unlabeled, row.l_generated, row.l_generator
        );
    }

    checkpoint::save(&args.out, &model, &norm)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn cmd_evaluate(args: EvalArgs) -> anyhow::Result<()> {
    let (mut model, norm) =
        checkpoint::load(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let raster = load_raster(&args.data, Some(&args.labels))?;
    let k = raster.class_count();
    if k != model.config.k {
        return Err(cvgan::Error::ClassCountMismatch {
            expected: model.config.k,
            got: k,
        }
        .into());
    }
    let stride = args.stride.unwrap_or(model.config.patch_size);
    let patches = extract_patches(&raster, model.config.patch_size, stride)?;

    let mut tensors = Vec::new();
    let mut labels = Vec::new();
    for p in &patches {
        if p.label > 0 {
            let mut t = p.data.clone();
            norm.apply(&mut t);
            tensors.push(t);
            labels.push(p.label);
        }
    }
    if tensors.is_empty() {
        bail!("no labeled patches to evaluate");
    }
    let preds = predict_classes(
        &mut model.discriminator,
        &tensors,
        model.config.batch_size,
    )?;
    let cm = ConfusionMatrix::from_predictions(&preds, &labels, k)?;

    for (class, recall) in cm.per_class_recall().iter().enumerate() {
        match recall {
            Some(r) => println!("class {} accuracy: {:.2}%", class + 1, 100.0 * r),
            None => println!("class {} accuracy: n/a (no samples)", class + 1),
        }
    }
    let (aa, excluded) = cm.aa()?;
    println!("OA: {:.2}%", 100.0 * cm.oa()?);
    println!("AA: {:.2}%", 100.0 * aa);
    if !excluded.is_empty() {
        println!("AA excluded zero-support classes: {excluded:?}");
    }
    println!("Kappa: {:.4}", cm.kappa()?);

    std::fs::write(&args.out, cm.to_csv())
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<()> {
    let (mut model, norm) =
        checkpoint::load(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let generator = model
        .generator
        .as_mut()
        .ok_or_else(|| anyhow::anyhow!("checkpoint holds no generator (supervised mode)"))?;
    if args.count == 0 {
        bail!("--count must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let patch = generator.patch();

    // sample in batches, tile row-major into a 1 x count strip
    let mut raster = CoherencyRaster::new(patch, patch * args.count);
    let batch = model.config.batch_size.max(2);
    let mut written = 0usize;
    while written < args.count {
        let take = batch.min(args.count - written);
        let z = sample_latents(&mut rng, take, generator.latent_width());
        let (mut fake, _) = generator.forward(&z, Mode::Eval)?;
        norm.invert(&mut fake);
        for b in 0..take {
            let left = (written + b) * patch;
            for y in 0..patch {
                for x in 0..patch {
                    let idx = y * raster.width + left + x;
                    raster.pixels[idx] = CoherencyPixel::new([
                        fake.re[[b, 0, y, x]],
                        fake.re[[b, 1, y, x]],
                        fake.re[[b, 2, y, x]],
                        fake.re[[b, 3, y, x]],
                        fake.im[[b, 3, y, x]],
                        fake.re[[b, 4, y, x]],
                        fake.im[[b, 4, y, x]],
                        fake.re[[b, 5, y, x]],
                        fake.im[[b, 5, y, x]],
                    ]);
                }
            }
        }
        written += take;
    }
    save_raster(&raster, &args.out, None)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<()> {
    let real = load_raster(&args.real, None)?;
    let generated = load_raster(&args.generated, None)?;
    let collect = |raster: &CoherencyRaster, entry: usize| -> Vec<f64> {
        raster.pixels.iter().map(|p| p.entries[entry]).collect()
    };
    let zeros = |raster: &CoherencyRaster| -> Vec<f64> { vec![0.0; raster.pixels.len()] };

    // the representative variables: T11 (diagonal, imaginary part
    // structurally zero in the file format) and T12
    let reports = vec![
        histogram_compare(
            "T11",
            "re",
            &collect(&real, CoherencyPixel::T11),
            &collect(&generated, CoherencyPixel::T11),
            args.bins,
        )?,
        histogram_compare("T11", "im", &zeros(&real), &zeros(&generated), args.bins)?,
        histogram_compare(
            "T12",
            "re",
            &collect(&real, CoherencyPixel::RE12),
            &collect(&generated, CoherencyPixel::RE12),
            args.bins,
        )?,
        histogram_compare(
            "T12",
            "im",
            &collect(&real, CoherencyPixel::IM12),
            &collect(&generated, CoherencyPixel::IM12),
            args.bins,
        )?,
    ];
    for r in &reports {
        println!("{} {}: ks={}", r.channel, r.plane, r.ks);
    }
    std::fs::write(&args.out, reports_to_csv(&reports))
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn cmd_pcolor(args: PcolorArgs) -> anyhow::Result<()> {
    let raster = load_raster(&args.data, None)?;
    let ppm = pcolor_ppm(&raster)?;
    std::fs::write(&args.out, ppm).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}
