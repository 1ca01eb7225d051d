//! Command-line interface.
//!
//! One binary exposes the full pipeline: synthesizing datasets,
//! fitting illumination, removing a person from a single image, batch
//! evaluation, and manifest validation. Flags override the config
//! file, which overrides built-in defaults. Exit codes: 0 success, 1
//! runtime or per-entry failures, 2 usage and configuration errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{load_config, ToolkitConfig};
use crate::error::{Error, Result};
use crate::harness::{self, load_lpips_file, DatasetWriter, EvalOptions, Manifest};
use crate::io;
use crate::lightfit::{
    fit_descent_with_objective, fit_grid_with_objective, FitResult, LightingGrid,
};
use crate::mosaic::{
    extract_sprite, load_backgrounds, load_sprites, mosaic_item, MosaicConfig, Placement,
};
use crate::removal::{
    build_restorer, remove_coarse_to_fine, run_removal, RemovalMode, RestorerKind,
};
use crate::render::{enumerate_angles, render_item, LightingParams, RenderConfig};

/// Number of triplets generated per parallel batch before writing, so
/// large datasets never hold every image in memory.
const WRITE_CHUNK: usize = 64;

#[derive(Parser, Debug)]
#[command(
    name = "person-removal",
    version,
    about = "Synthetic data and evaluation toolkit for person removal"
)]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread override (0 = default pool).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize cut-and-paste triplets into a dataset directory.
    SynthMosaic(SynthMosaicArgs),
    /// Synthesize relit triplets with depth annotations.
    SynthRender(SynthRenderArgs),
    /// Fit lighting parameters that blend a person into a background.
    FitLight(FitLightArgs),
    /// Remove the masked person from one image.
    Remove(RemoveArgs),
    /// Run removal over a manifest's test split and score it.
    Evaluate(EvaluateArgs),
    /// Check a dataset manifest for problems.
    ValidateManifest(ValidateManifestArgs),
}

#[derive(Args, Debug)]
pub struct SynthMosaicArgs {
    /// Directory of background PNGs.
    #[arg(long, value_name = "DIR")]
    pub backgrounds: Option<PathBuf>,
    /// Directory of donor PNGs with `<stem>.mask.png` silhouettes.
    #[arg(long, value_name = "DIR")]
    pub sprites: Option<PathBuf>,
    /// Directory of placement-region masks named after backgrounds.
    #[arg(long, value_name = "DIR")]
    pub regions: Option<PathBuf>,
    /// Number of triplets to generate.
    #[arg(long)]
    pub count: Option<u32>,
    /// Output dataset directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthRenderArgs {
    #[arg(long, value_name = "DIR")]
    pub backgrounds: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub sprites: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub regions: Option<PathBuf>,
    #[arg(long)]
    pub count: Option<u32>,
    /// Enumerated light azimuth count (0 samples angles freely).
    #[arg(long)]
    pub angles: Option<u32>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitLightArgs {
    /// Composite image containing the person.
    #[arg(long, value_name = "PNG")]
    pub source: PathBuf,
    /// Clean background to harmonize against.
    #[arg(long, value_name = "PNG")]
    pub target: PathBuf,
    /// Person mask.
    #[arg(long, value_name = "PNG")]
    pub mask: PathBuf,
    /// Grid axis `param=lo:hi:steps`; repeatable. Without axes the fit
    /// runs coordinate descent instead.
    #[arg(long, value_name = "AXIS")]
    pub grid: Vec<String>,
    /// Evaluation budget for coordinate descent.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Output JSON file for the fit result.
    #[arg(long, value_name = "JSON")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RemoveArgs {
    /// Input image.
    #[arg(long = "in", value_name = "PNG")]
    pub input: PathBuf,
    /// Person mask.
    #[arg(long, value_name = "PNG")]
    pub mask: PathBuf,
    /// Output image.
    #[arg(long, value_name = "PNG")]
    pub out: PathBuf,
    /// Pipeline mode: legacy_inpaint or mask_guided.
    #[arg(long)]
    pub mode: Option<String>,
    /// Hole filler: diffusion, exemplar, or subprocess.
    #[arg(long)]
    pub restorer: Option<String>,
    /// Coarse-to-fine rounds for mask-guided removal.
    #[arg(long)]
    pub refine_iters: Option<u32>,
    /// Mask dilation in pixels.
    #[arg(long)]
    pub mask_dilation: Option<u32>,
    /// Reject masks that are not strictly 0/255.
    #[arg(long)]
    pub strict_mask: bool,
    /// Also write each refinement stage next to the output.
    #[arg(long)]
    pub save_stages: bool,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Dataset manifest (JSONL).
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Output directory for predictions and reports.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Create a fresh train/test split with this train fraction before
    /// evaluating; the tagged manifest is written into the out dir.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Seed for the split shuffle (defaults to the master seed).
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Keep existing split tags and only assign unassigned entries.
    #[arg(long)]
    pub incremental: bool,
    /// JSON side-file of externally computed LPIPS scores, id to value.
    #[arg(long, value_name = "JSON")]
    pub lpips_file: Option<PathBuf>,
    /// Method label for the report.
    #[arg(long)]
    pub method: Option<String>,
    /// Dataset label for the report.
    #[arg(long)]
    pub dataset: Option<String>,
}

#[derive(Args, Debug)]
pub struct ValidateManifestArgs {
    /// Dataset manifest (JSONL).
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Also load every image and cross-check sizes and mask values.
    #[arg(long)]
    pub deep: bool,
}

/// Parses arguments, runs the selected command, and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn dispatch(cli: Cli) -> Result<i32> {
    let config = match &cli.config {
        Some(path) => load_config(path)?,
        None => ToolkitConfig::default(),
    };
    let seed = cli.seed.unwrap_or(config.seed);
    let workers = effective_workers(cli.workers, config.workers)?;
    log::info!("seed {seed}, workers {workers}");
    match cli.command {
        Command::SynthMosaic(args) => cmd_synth_mosaic(&config, seed, workers, args),
        Command::SynthRender(args) => cmd_synth_render(&config, seed, workers, args),
        Command::FitLight(args) => cmd_fit_light(&config, workers, args),
        Command::Remove(args) => cmd_remove(&config, args),
        Command::Evaluate(args) => cmd_evaluate(&config, seed, workers, args),
        Command::ValidateManifest(args) => cmd_validate_manifest(args),
    }
}

fn effective_workers(flag: Option<usize>, from_config: usize) -> Result<usize> {
    if let Some(w) = flag {
        return Ok(w);
    }
    match std::env::var("PERSON_REMOVAL_WORKERS") {
        Ok(value) => value.parse().map_err(|_| {
            Error::InvalidArgument(format!(
                "PERSON_REMOVAL_WORKERS must be a nonnegative integer, got '{value}'"
            ))
        }),
        Err(_) => Ok(from_config),
    }
}

/// Runs `work` inside a dedicated pool of `workers` threads, or on the
/// default pool when `workers` is 0.
fn with_pool<T: Send>(workers: usize, work: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?
            .install(work)
    }
}

struct SynthAssets {
    backgrounds: Vec<crate::mosaic::BackgroundAsset>,
    sprites: Vec<crate::mosaic::PersonSprite>,
}

fn load_assets(
    config: &ToolkitConfig,
    backgrounds: Option<PathBuf>,
    sprites: Option<PathBuf>,
    regions: Option<PathBuf>,
) -> Result<SynthAssets> {
    let backgrounds_dir = backgrounds.or_else(|| config.mosaic.backgrounds.clone()).ok_or_else(|| {
        Error::InvalidArgument(
            "no backgrounds directory; pass --backgrounds or set [mosaic] backgrounds".into(),
        )
    })?;
    let sprites_dir = sprites.or_else(|| config.mosaic.sprites.clone()).ok_or_else(|| {
        Error::InvalidArgument(
            "no sprites directory; pass --sprites or set [mosaic] sprites".into(),
        )
    })?;
    let regions_dir = regions.or_else(|| config.mosaic.regions.clone());
    let backgrounds = load_backgrounds(
        &backgrounds_dir,
        regions_dir.as_deref(),
        config.mosaic.region_top_fraction,
    )?;
    let sprites = load_sprites(&sprites_dir, config.mosaic.feather_radius)?;
    if backgrounds.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no background PNGs found in {}",
            backgrounds_dir.display()
        )));
    }
    if sprites.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no sprite donors found in {}",
            sprites_dir.display()
        )));
    }
    Ok(SynthAssets {
        backgrounds,
        sprites,
    })
}

fn cmd_synth_mosaic(
    config: &ToolkitConfig,
    seed: u64,
    workers: usize,
    args: SynthMosaicArgs,
) -> Result<i32> {
    let assets = load_assets(config, args.backgrounds, args.sprites, args.regions)?;
    let count = args.count.unwrap_or(config.mosaic.count) as usize;
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let mosaic_config = MosaicConfig {
        seed,
        scale: config.mosaic.scale,
    };
    let mut writer = DatasetWriter::create(&args.out, false)?;
    with_pool(workers, || {
        let mut start = 0;
        while start < count {
            let end = (start + WRITE_CHUNK).min(count);
            let chunk: Vec<_> = (start..end)
                .into_par_iter()
                .map(|i| mosaic_item(&assets.backgrounds, &assets.sprites, &mosaic_config, i))
                .collect::<Result<_>>()?;
            for triplet in &chunk {
                writer.push(triplet, None)?;
            }
            start = end;
        }
        Ok(())
    })?;
    let manifest = writer.finish()?;
    println!("wrote {} triplets to {}", manifest.len(), args.out.display());
    Ok(0)
}

fn cmd_synth_render(
    config: &ToolkitConfig,
    seed: u64,
    workers: usize,
    args: SynthRenderArgs,
) -> Result<i32> {
    let assets = load_assets(config, args.backgrounds, args.sprites, args.regions)?;
    let count = args.count.unwrap_or(config.mosaic.count) as usize;
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let angle_count = match args.angles {
        Some(0) => None,
        Some(n) => Some(n),
        None => config.render.enumerated_angles(),
    };
    let render_config = RenderConfig {
        seed,
        scale: config.mosaic.scale,
        angle_count,
        ranges: config.render.ranges,
    };
    render_config.ranges.validate()?;
    let angles = match render_config.angle_count {
        Some(n) => enumerate_angles(n)?,
        None => Vec::new(),
    };
    let mut writer = DatasetWriter::create(&args.out, true)?;
    with_pool(workers, || {
        let mut start = 0;
        while start < count {
            let end = (start + WRITE_CHUNK).min(count);
            let chunk: Vec<_> = (start..end)
                .into_par_iter()
                .map(|i| {
                    render_item(&assets.backgrounds, &assets.sprites, &render_config, &angles, i)
                })
                .collect::<Result<_>>()?;
            for (triplet, depth) in &chunk {
                writer.push(triplet, Some(depth))?;
            }
            start = end;
        }
        Ok(())
    })?;
    let manifest = writer.finish()?;
    println!(
        "wrote {} relit triplets with depth to {}",
        manifest.len(),
        args.out.display()
    );
    Ok(0)
}

fn cmd_fit_light(config: &ToolkitConfig, workers: usize, args: FitLightArgs) -> Result<i32> {
    let source = io::load_image(&args.source)?;
    let target = io::load_image(&args.target)?;
    let mask = io::load_mask(&args.mask, false)?;
    source.ensure_same_size_as(&target)?;
    mask.ensure_same_size_as(&source)?;

    let feather = config.mosaic.feather_radius;
    let sprite = extract_sprite(&source, &mask, feather)?;
    let (bx0, by0, _, _) = mask
        .bounding_box()
        .ok_or_else(|| Error::EmptySelection("mask has no set pixels".into()))?;
    let (sw, sh) = sprite.dimensions();
    // The sprite patch starts at the mask's bounding box expanded by
    // the feather; anchor it so the paste lands exactly there.
    let x0 = bx0.saturating_sub(feather) as i64;
    let y0 = by0.saturating_sub(feather) as i64;
    let placement = Placement {
        anchor_x: x0 + sw as i64 / 2,
        anchor_y: y0 + sh as i64 - 1,
        scale: 1.0,
        flip: false,
    };

    let objective = config.lightfit.objective()?;
    let init = LightingParams::identity();
    let axes = if args.grid.is_empty() {
        config.lightfit.grid.clone()
    } else {
        args.grid.clone()
    };
    let fit: FitResult = with_pool(workers, || {
        if axes.is_empty() {
            let budget = args.budget.unwrap_or(config.lightfit.budget);
            fit_descent_with_objective(&target, &sprite, &placement, &init, budget, objective)
        } else {
            let mut grid = LightingGrid::new(init)?;
            for axis in &axes {
                let (param, values) = LightingGrid::parse_axis(axis)?;
                grid = grid.with_axis(param, values)?;
            }
            fit_grid_with_objective(&target, &sprite, &placement, &grid, objective)
        }
    })?;

    let text = serde_json::to_string_pretty(&fit)
        .map_err(|e| Error::InvalidArgument(format!("fit result serialization: {e}")))?;
    std::fs::write(&args.out, text + "\n").map_err(|e| Error::io(args.out.clone(), e))?;
    println!(
        "loss {:.6} after {} evaluations -> {}",
        fit.loss,
        fit.evaluations,
        args.out.display()
    );
    Ok(0)
}

fn parse_mode(value: &str) -> Result<RemovalMode> {
    match value {
        "legacy_inpaint" => Ok(RemovalMode::LegacyInpaint),
        "mask_guided" => Ok(RemovalMode::MaskGuided),
        other => Err(Error::InvalidArgument(format!(
            "unknown mode '{other}' (expected legacy_inpaint or mask_guided)"
        ))),
    }
}

fn parse_restorer(value: &str) -> Result<RestorerKind> {
    match value {
        "diffusion" => Ok(RestorerKind::Diffusion),
        "exemplar" => Ok(RestorerKind::Exemplar),
        "subprocess" => Ok(RestorerKind::Subprocess),
        other => Err(Error::InvalidArgument(format!(
            "unknown restorer '{other}' (expected diffusion, exemplar, or subprocess)"
        ))),
    }
}

fn stage_path(out: &Path, stage: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("out");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("png");
    out.with_file_name(format!("{stem}.stage{stage}.{ext}"))
}

fn cmd_remove(config: &ToolkitConfig, args: RemoveArgs) -> Result<i32> {
    let mut removal = config.removal.clone();
    if let Some(mode) = &args.mode {
        removal.mode = parse_mode(mode)?;
    }
    if let Some(restorer) = &args.restorer {
        removal.restorer = parse_restorer(restorer)?;
    }
    if let Some(iters) = args.refine_iters {
        removal.refine_iters = iters;
    }
    if let Some(dilation) = args.mask_dilation {
        removal.mask_dilation = dilation;
    }
    removal.validate()?;

    let image = io::load_image(&args.input)?;
    let mask = io::load_mask(&args.mask, args.strict_mask)?;
    mask.ensure_same_size_as(&image)?;

    if args.save_stages && removal.mode == RemovalMode::MaskGuided && !mask.is_empty() {
        let restorer = build_restorer(&removal)?;
        let work_mask = if removal.mask_dilation > 0 {
            mask.dilate(removal.mask_dilation)
        } else {
            mask.clone()
        };
        let (finished, stages) =
            remove_coarse_to_fine(&image, &work_mask, restorer.as_ref(), removal.refine_iters)?;
        for (i, stage) in stages.iter().enumerate() {
            io::save_image(stage_path(&args.out, i + 1), stage)?;
        }
        io::save_image(&args.out, &finished)?;
    } else {
        if args.save_stages {
            log::warn!("--save-stages only applies to nontrivial mask-guided runs; ignoring");
        }
        let finished = run_removal(&image, &mask, &removal)?;
        io::save_image(&args.out, &finished)?;
    }
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn cmd_evaluate(
    config: &ToolkitConfig,
    seed: u64,
    workers: usize,
    args: EvaluateArgs,
) -> Result<i32> {
    let mut manifest = Manifest::load(&args.manifest)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(args.out.clone(), e))?;

    if let Some(fraction) = args.train_fraction {
        let split_seed = args.split_seed.unwrap_or(seed);
        harness::split(&mut manifest, fraction, split_seed, args.incremental)?;
        // The tagged copy lands in the out dir, away from the dataset
        // root, so its paths must not stay relative.
        let mut tagged = manifest.clone();
        tagged.make_paths_absolute()?;
        tagged.save(args.out.join("manifest.jsonl"))?;
        let (train, test, _) = manifest.split_counts();
        println!("split {} entries into {train} train / {test} test", manifest.len());
    } else if manifest.split_counts().1 == 0 {
        return Err(Error::InvalidArgument(
            "manifest has no test entries; pass --train-fraction to create a split".into(),
        ));
    }

    let method = args.method.clone().unwrap_or_else(|| {
        match config.removal.mode {
            RemovalMode::LegacyInpaint => "legacy_inpaint",
            RemovalMode::MaskGuided => "mask_guided",
        }
        .to_string()
    });
    let dataset = args.dataset.clone().unwrap_or_else(|| {
        args.manifest
            .parent()
            .and_then(|p| p.file_name())
            .and_then(|n| n.to_str())
            .unwrap_or("dataset")
            .to_string()
    });
    let lpips = match &args.lpips_file {
        Some(path) => Some(load_lpips_file(path)?),
        None => None,
    };
    let options = EvalOptions {
        out_dir: args.out.clone(),
        workers,
        lpips,
        method,
        dataset,
    };
    let report = harness::run_eval(&manifest, &config.removal, &options)?;
    harness::write_reports(&report, &args.out)?;

    let a = &report.aggregate;
    println!(
        "scored {} images: psnr {:.3} ssim {:.4} rmse {:.3} rmsew {:.3}",
        report.per_image.len(),
        a.psnr,
        a.ssim,
        a.rmse,
        a.rmsew
    );
    if !report.failures.is_empty() {
        eprintln!(
            "{} of {} entries failed; see report.md",
            report.failures.len(),
            report.failures.len() + report.per_image.len()
        );
        return Ok(1);
    }
    Ok(0)
}

fn cmd_validate_manifest(args: ValidateManifestArgs) -> Result<i32> {
    let manifest = Manifest::load(&args.manifest)?;
    let issues = harness::validate(&manifest, args.deep);
    let (train, test, unassigned) = manifest.split_counts();
    println!(
        "{} entries ({train} train, {test} test, {unassigned} unassigned)",
        manifest.len()
    );
    if issues.is_empty() {
        println!("manifest ok");
        Ok(0)
    } else {
        for issue in &issues {
            eprintln!("{}: {}", issue.id, issue.message);
        }
        eprintln!("{} issues found", issues.len());
        Ok(1)
    }
}
