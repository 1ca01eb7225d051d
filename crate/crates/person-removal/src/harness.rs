//! Dataset manifests, train/test splitting, dataset writing, and batch
//! evaluation.
//!
//! A dataset is a directory of PNG triplets (source, target, mask, and
//! optionally depth) indexed by a JSONL manifest with one entry per
//! line. Relative paths in a manifest resolve against the manifest's
//! own directory, so datasets stay relocatable. Evaluation runs the
//! configured removal pipeline over the test split in parallel and
//! produces a [`MetricsReport`]; per-entry problems are collected as
//! failures instead of aborting the batch.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io;
use crate::mask::Mask;
use crate::metrics::{self, EntryFailure, ImageScores, MetricsReport, ReportMeta};
use crate::mosaic::{CompositeTriplet, TripletMeta};
use crate::removal::{build_restorer, run_removal_with, RemovalConfig, Restorer};
use crate::render::DepthMap;

/// Split membership of a manifest entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Test,
    #[default]
    Unassigned,
}

/// One dataset item: paths to its images plus split membership and,
/// for synthesized data, the recipe that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub source_path: PathBuf,
    pub target_path: PathBuf,
    pub mask_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_path: Option<PathBuf>,
    #[serde(default)]
    pub split: SplitTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<TripletMeta>,
}

/// An id-sorted collection of entries with unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(mut entries: Vec<ManifestEntry>) -> Result<Self> {
        for entry in &entries {
            if entry.id.is_empty() {
                return Err(Error::Manifest("entry with an empty id".into()));
            }
            if entry.id.contains(['/', '\\']) || entry.id.contains("..") {
                return Err(Error::Manifest(format!(
                    "id '{}' must not contain path separators",
                    entry.id
                )));
            }
        }
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in entries.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Manifest(format!("duplicate id '{}'", pair[0].id)));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// (train, test, unassigned) entry counts.
    pub fn split_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for entry in &self.entries {
            match entry.split {
                SplitTag::Train => counts.0 += 1,
                SplitTag::Test => counts.1 += 1,
                SplitTag::Unassigned => counts.2 += 1,
            }
        }
        counts
    }

    /// Reads a JSONL manifest. Relative image paths are resolved
    /// against the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.to_path_buf(), e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        let mut entries = Vec::new();
        for (number, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut entry: ManifestEntry = serde_json::from_str(line).map_err(|e| {
                Error::Manifest(format!("{}:{}: {e}", path.display(), number + 1))
            })?;
            entry.source_path = resolve(entry.source_path);
            entry.target_path = resolve(entry.target_path);
            entry.mask_path = resolve(entry.mask_path);
            entry.depth_path = entry.depth_path.map(resolve);
            entries.push(entry);
        }
        Self::new(entries)
    }

    /// Writes the manifest as JSONL, one entry per line in id order.
    /// Paths are written exactly as stored.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for entry in &self.entries {
            let line = serde_json::to_string(entry)
                .map_err(|e| Error::Manifest(format!("entry '{}' failed to serialize: {e}", entry.id)))?;
            out.push_str(&line);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path.to_path_buf(), e))
    }

    /// Rewrites every image path to be absolute, resolving relative
    /// ones against the current working directory. Useful before
    /// saving a manifest somewhere other than the dataset root.
    pub fn make_paths_absolute(&mut self) -> Result<()> {
        let cwd = std::env::current_dir().map_err(|e| Error::io(PathBuf::from("."), e))?;
        let absolutize = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = cwd.join(&*p);
            }
        };
        for entry in &mut self.entries {
            absolutize(&mut entry.source_path);
            absolutize(&mut entry.target_path);
            absolutize(&mut entry.mask_path);
            if let Some(depth) = &mut entry.depth_path {
                absolutize(depth);
            }
        }
        Ok(())
    }
}

/// A problem found while validating a manifest entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub id: String,
    pub message: String,
}

/// Checks every entry's files. The shallow pass verifies the files
/// exist; the deep pass also loads them and checks that sizes agree
/// and masks are strictly binary.
pub fn validate(manifest: &Manifest, deep: bool) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    for entry in manifest.entries() {
        let mut report = |message: String| {
            issues.push(ValidationIssue {
                id: entry.id.clone(),
                message,
            })
        };
        let mut paths = vec![
            ("source", &entry.source_path),
            ("target", &entry.target_path),
            ("mask", &entry.mask_path),
        ];
        if let Some(depth) = &entry.depth_path {
            paths.push(("depth", depth));
        }
        let mut missing = false;
        for (role, path) in &paths {
            if !path.is_file() {
                report(format!("{role} file {} is missing", path.display()));
                missing = true;
            }
        }
        if !deep || missing {
            continue;
        }
        let source = io::load_image(&entry.source_path);
        let target = io::load_image(&entry.target_path);
        let mask = io::load_mask(&entry.mask_path, true);
        match (&source, &target) {
            (Ok(s), Ok(t)) if s.dimensions() != t.dimensions() => {
                report(format!(
                    "source is {}x{} but target is {}x{}",
                    s.width(),
                    s.height(),
                    t.width(),
                    t.height()
                ));
            }
            _ => {}
        }
        if let (Ok(s), Ok(m)) = (&source, &mask) {
            if m.ensure_same_size_as(s).is_err() {
                report(format!(
                    "mask is {}x{} but source is {}x{}",
                    m.width(),
                    m.height(),
                    s.width(),
                    s.height()
                ));
            }
        }
        for (role, result) in [("source", source.err()), ("target", target.err())] {
            if let Some(e) = result {
                report(format!("{role} failed to load: {e}"));
            }
        }
        if let Err(e) = &mask {
            report(format!("mask failed to load: {e}"));
        }
    }
    issues
}

/// Assigns train/test tags in place. The train set size targets
/// `round(train_fraction * len)`, clamped so both splits stay
/// nonempty. A non-incremental split first clears all tags; an
/// incremental one keeps existing assignments and only distributes the
/// unassigned entries, topping the train set up toward the target.
/// Assignment shuffles the id-sorted candidates with a seeded
/// generator, so a given (manifest, fraction, seed) is reproducible.
pub fn split(
    manifest: &mut Manifest,
    train_fraction: f64,
    seed: u64,
    incremental: bool,
) -> Result<()> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n = manifest.entries.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "splitting needs at least two entries".into(),
        ));
    }
    let target_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);

    if !incremental {
        for entry in &mut manifest.entries {
            entry.split = SplitTag::Unassigned;
        }
    }
    let existing_train = manifest
        .entries
        .iter()
        .filter(|e| e.split == SplitTag::Train)
        .count();
    let mut pool: Vec<usize> = manifest
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.split == SplitTag::Unassigned)
        .map(|(i, _)| i)
        .collect();
    let need = target_train.saturating_sub(existing_train).min(pool.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    for (rank, index) in pool.into_iter().enumerate() {
        manifest.entries[index].split = if rank < need {
            SplitTag::Train
        } else {
            SplitTag::Test
        };
    }
    Ok(())
}

/// Writes triplets into the standard dataset layout: `source/`,
/// `target/`, `mask/` (and `depth/` when enabled) with five-digit
/// zero-based ids, plus `manifest.jsonl` holding relative paths.
pub struct DatasetWriter {
    root: PathBuf,
    with_depth: bool,
    entries: Vec<ManifestEntry>,
}

impl DatasetWriter {
    pub fn create(root: impl AsRef<Path>, with_depth: bool) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let mut dirs = vec!["source", "target", "mask"];
        if with_depth {
            dirs.push("depth");
        }
        for dir in dirs {
            let path = root.join(dir);
            std::fs::create_dir_all(&path).map_err(|e| Error::io(path.clone(), e))?;
        }
        Ok(Self {
            root,
            with_depth,
            entries: Vec::new(),
        })
    }

    /// Saves one triplet and appends its manifest entry. Returns the
    /// assigned id.
    pub fn push(&mut self, triplet: &CompositeTriplet, depth: Option<&DepthMap>) -> Result<String> {
        if self.with_depth != depth.is_some() {
            return Err(Error::InvalidArgument(if self.with_depth {
                "dataset expects a depth map for every triplet".into()
            } else {
                "dataset was created without depth".into()
            }));
        }
        let id = format!("{:05}", self.entries.len());
        let relative = |dir: &str| PathBuf::from(dir).join(format!("{id}.png"));
        io::save_image(self.root.join(relative("source")), triplet.source())?;
        io::save_image(self.root.join(relative("target")), triplet.target())?;
        io::save_mask(self.root.join(relative("mask")), triplet.mask())?;
        let mut depth_path = None;
        if let Some(depth) = depth {
            io::save_depth(self.root.join(relative("depth")), depth)?;
            depth_path = Some(relative("depth"));
        }
        self.entries.push(ManifestEntry {
            id: id.clone(),
            source_path: relative("source"),
            target_path: relative("target"),
            mask_path: relative("mask"),
            depth_path,
            split: SplitTag::Unassigned,
            provenance: Some(triplet.meta.clone()),
        });
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes `manifest.jsonl` and returns the manifest with paths
    /// resolved against the dataset root.
    pub fn finish(self) -> Result<Manifest> {
        let manifest = Manifest::new(self.entries)?;
        let path = self.root.join("manifest.jsonl");
        manifest.save(&path)?;
        Manifest::load(&path)
    }
}

/// Short stable fingerprint of a removal configuration, used to tie a
/// report to the exact settings that produced it.
pub fn config_hash(config: &RemovalConfig) -> String {
    let json = serde_json::to_string(config).expect("removal config serializes");
    let digest = Sha256::digest(json.as_bytes());
    hex::encode(digest)[..16].to_string()
}

/// Settings for a batch evaluation run.
#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Output directory; predictions land in `<out_dir>/pred/`.
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses the default rayon pool.
    pub workers: usize,
    /// Externally computed LPIPS scores keyed by entry id.
    pub lpips: Option<HashMap<String, f64>>,
    /// Method label stamped into the report.
    pub method: String,
    /// Dataset label stamped into the report.
    pub dataset: String,
}

impl EvalOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            workers: 0,
            lpips: None,
            method: "mask_guided".into(),
            dataset: "dataset".into(),
        }
    }
}

/// Loads an LPIPS side-file: a JSON object mapping entry ids to
/// scores.
pub fn load_lpips_file(path: impl AsRef<Path>) -> Result<HashMap<String, f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.to_path_buf(), e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("lpips file {}: {e}", path.display())))
}

fn score_entry(
    entry: &ManifestEntry,
    config: &RemovalConfig,
    restorer: &dyn Restorer,
    pred_dir: &Path,
    lpips: Option<&HashMap<String, f64>>,
) -> Result<ImageScores> {
    let source = io::load_image(&entry.source_path)?;
    let target = io::load_image(&entry.target_path)?;
    let mask = io::load_mask(&entry.mask_path, false)?;
    source.ensure_same_size_as(&target)?;
    mask.ensure_same_size_as(&source)?;

    let prediction = if mask.is_empty() {
        source.clone()
    } else {
        run_removal_with(&source, &mask, config, restorer)?
    };
    ensure_untouched_outside(&source, &prediction, &mask, config.mask_dilation)?;
    io::save_image(pred_dir.join(format!("{}.png", entry.id)), &prediction)?;

    Ok(ImageScores {
        id: entry.id.clone(),
        psnr: metrics::psnr(&prediction, &target)?,
        ssim: metrics::ssim(&prediction, &target)?,
        rmse: metrics::rmse(&prediction, &target)?,
        // An empty mask means nothing was removed; score the masked
        // error as zero rather than failing the entry.
        rmsew: if mask.is_empty() {
            0.0
        } else {
            metrics::rmse_weighted(&prediction, &target, &mask)?
        },
        lpips: lpips.and_then(|m| m.get(&entry.id).copied()),
    })
}

/// Spot check of the composition contract: a removal run may only
/// change pixels inside the dilated mask.
fn ensure_untouched_outside(
    source: &Image,
    prediction: &Image,
    mask: &Mask,
    dilation: u32,
) -> Result<()> {
    let guard = if dilation > 0 { mask.dilate(dilation) } else { mask.clone() };
    let (w, _) = source.dimensions();
    let src = source.channels();
    let pred = prediction.channels();
    for (p, allowed) in guard.bits().iter().enumerate() {
        if !allowed && src[3 * p..3 * p + 3] != pred[3 * p..3 * p + 3] {
            let (x, y) = (p as u32 % w, p as u32 / w);
            return Err(Error::InvalidArgument(format!(
                "prediction changed pixel ({x}, {y}) outside the dilated mask"
            )));
        }
    }
    Ok(())
}

/// Runs the configured removal over the manifest's test split and
/// scores every prediction against its target. Entries that cannot be
/// processed become report failures; the aggregate covers only scored
/// entries. Errors out if the test split is empty or nothing could be
/// scored.
pub fn run_eval(
    manifest: &Manifest,
    config: &RemovalConfig,
    options: &EvalOptions,
) -> Result<MetricsReport> {
    config.validate()?;
    let test: Vec<&ManifestEntry> = manifest
        .entries()
        .iter()
        .filter(|e| e.split == SplitTag::Test)
        .collect();
    if test.is_empty() {
        return Err(Error::EmptySelection("manifest has no test entries".into()));
    }
    let pred_dir = options.out_dir.join("pred");
    std::fs::create_dir_all(&pred_dir).map_err(|e| Error::io(pred_dir.clone(), e))?;
    let restorer = build_restorer(config)?;

    let evaluate = |entry: &ManifestEntry| {
        score_entry(entry, config, restorer.as_ref(), &pred_dir, options.lpips.as_ref()).map_err(
            |e| EntryFailure {
                id: entry.id.clone(),
                message: e.to_string(),
            },
        )
    };
    let outcomes: Vec<std::result::Result<ImageScores, EntryFailure>> = if options.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
        pool.install(|| test.par_iter().map(|entry| evaluate(entry)).collect())
    } else {
        test.par_iter().map(|entry| evaluate(entry)).collect()
    };

    let mut scores = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(score) => scores.push(score),
            Err(failure) => failures.push(failure),
        }
    }
    if scores.is_empty() {
        return Err(Error::EmptySelection("every test entry failed".into()));
    }
    let meta = ReportMeta {
        method: options.method.clone(),
        dataset: options.dataset.clone(),
        config_hash: config_hash(config),
    };
    MetricsReport::new(meta, scores, failures)
}

/// Writes `report.json`, `report.csv`, and `report.md` into `out_dir`.
pub fn write_reports(report: &MetricsReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.to_path_buf(), e))?;
    report.write_json(out_dir.join("report.json"))?;
    report.write_csv(out_dir.join("report.csv"))?;
    report.write_markdown(out_dir.join("report.md"))
}
