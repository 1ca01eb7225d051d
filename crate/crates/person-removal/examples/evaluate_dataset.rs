//! End-to-end batch evaluation: synthesize a small dataset, split it
//! into train and test, run removal over the test split, and write the
//! JSON/CSV/Markdown reports.
//!
//! Run with `cargo run --example evaluate_dataset`. Everything lands in
//! `target/examples/evaluate_dataset/`.

use std::path::PathBuf;

use person_removal::harness::{self, config_hash, DatasetWriter, EvalOptions};
use person_removal::mosaic::{
    extract_sprite, synth_mosaic_batch, BackgroundAsset, MosaicConfig, ScaleRuleSpec,
};
use person_removal::removal::RemovalConfig;
use person_removal::synthetic::{gradient_background, lower_region, person_donor};

fn out_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from("target/examples").join(name);
    std::fs::create_dir_all(&dir).expect("create example output directory");
    dir
}

fn main() -> person_removal::Result<()> {
    let dir = out_dir("evaluate_dataset");
    let dataset_dir = dir.join("dataset");
    let eval_dir = dir.join("eval");

    // Ten synthetic triplets in the standard dataset layout.
    let backgrounds: Vec<BackgroundAsset> = (0..3)
        .map(|i| {
            let image = gradient_background(128, 96, 60 + i);
            let region = lower_region(image.width(), image.height(), 0.55);
            BackgroundAsset {
                id: format!("bg-{i}"),
                image,
                region,
            }
        })
        .collect();
    let mut sprites = Vec::new();
    for seed in [71u64, 72] {
        let (donor, mask) = person_donor(40, 64, seed);
        sprites.push(extract_sprite(&donor, &mask, 2)?.with_origin_id(format!("donor-{seed}")));
    }
    let config = MosaicConfig {
        seed: 5,
        scale: ScaleRuleSpec::default(),
    };
    let triplets = synth_mosaic_batch(&backgrounds, &sprites, 10, &config)?;
    let mut writer = DatasetWriter::create(&dataset_dir, false)?;
    for triplet in &triplets {
        writer.push(triplet, None)?;
    }
    let mut manifest = writer.finish()?;
    println!("dataset: {} triplets in {}", manifest.len(), dataset_dir.display());

    // Deterministic 70/30 split; only the test split is scored.
    harness::split(&mut manifest, 0.7, 99, false)?;
    let (train, test, _) = manifest.split_counts();
    println!("split: {train} train, {test} test");

    let removal = RemovalConfig::default();
    println!("removal config hash: {}", config_hash(&removal));
    let options = EvalOptions {
        method: "mask_guided".into(),
        dataset: "example".into(),
        ..EvalOptions::new(&eval_dir)
    };
    let report = harness::run_eval(&manifest, &removal, &options)?;
    harness::write_reports(&report, &eval_dir)?;

    for score in &report.per_image {
        println!(
            "  {}: psnr {:.2}, ssim {:.4}, rmse {:.3}, rmsew {:.3}",
            score.id, score.psnr, score.ssim, score.rmse, score.rmsew
        );
    }
    let a = &report.aggregate;
    println!(
        "aggregate over {} images: psnr {:.2}, ssim {:.4}, rmse {:.3}, rmsew {:.3}",
        report.per_image.len(),
        a.psnr,
        a.ssim,
        a.rmse,
        a.rmsew
    );
    println!(
        "reports: {}, predictions: {}",
        eval_dir.join("report.md").display(),
        eval_dir.join("pred").display()
    );
    Ok(())
}
