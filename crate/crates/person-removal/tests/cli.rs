//! End-to-end tests of the command-line binary: exit codes, seeded
//! determinism across worker counts, and the full synthesize, validate,
//! remove, fit, and evaluate flows.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use person_removal::io::{save_image, save_mask};
use person_removal::mosaic::{extract_sprite, paste, Placement};
use person_removal::synthetic::{gradient_background, person_donor};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_person-removal"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Writes two background PNGs and two donor/mask pairs for the synth
/// commands to load.
fn write_assets(root: &Path) -> (PathBuf, PathBuf) {
    let backgrounds = root.join("backgrounds");
    let sprites = root.join("sprites");
    fs::create_dir_all(&backgrounds).unwrap();
    fs::create_dir_all(&sprites).unwrap();
    for i in 0..2u64 {
        let image = gradient_background(96, 72, 50 + i);
        save_image(backgrounds.join(format!("bg{i}.png")), &image).unwrap();
    }
    for i in 0..2u64 {
        let (donor, mask) = person_donor(36, 56, 60 + i);
        save_image(sprites.join(format!("donor{i}.png")), &donor).unwrap();
        save_mask(sprites.join(format!("donor{i}.mask.png")), &mask).unwrap();
    }
    (backgrounds, sprites)
}

/// Writes a composite scene: source with a pasted person, clean target,
/// and the person mask.
fn write_scene(root: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let background = gradient_background(96, 72, 5);
    let (donor, donor_mask) = person_donor(32, 48, 6);
    let sprite = extract_sprite(&donor, &donor_mask, 2).unwrap();
    let placement = Placement {
        anchor_x: 48,
        anchor_y: 66,
        scale: 1.0,
        flip: false,
    };
    let triplet = paste(&background, &sprite, &placement).unwrap();
    let source = root.join("source.png");
    let target = root.join("target.png");
    let mask = root.join("mask.png");
    save_image(&source, triplet.source()).unwrap();
    save_image(&target, triplet.target()).unwrap();
    save_mask(&mask, triplet.mask()).unwrap();
    (source, target, mask)
}

#[test]
fn usage_exit_codes() {
    let help = run(&["--help"]);
    assert!(help.status.success());
    assert!(stdout(&help).contains("synth-mosaic"));

    let unknown = run(&["no-such-command"]);
    assert_eq!(unknown.status.code(), Some(2));

    let missing = run(&["remove", "--in", "a.png"]);
    assert_eq!(missing.status.code(), Some(2), "missing required flags: {}", stderr(&missing));

    let bad_flag_value = run(&["synth-mosaic", "--count", "peach", "--out", "x"]);
    assert_eq!(bad_flag_value.status.code(), Some(2));
}

#[test]
fn synth_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (backgrounds, sprites) = write_assets(dir.path());
    let bg = backgrounds.to_str().unwrap();
    let sp = sprites.to_str().unwrap();

    let mut outputs = Vec::new();
    for (name, workers) in [("a", "0"), ("b", "2"), ("c", "1")] {
        let out = dir.path().join(name);
        let result = run(&[
            "synth-mosaic",
            "--backgrounds",
            bg,
            "--sprites",
            sp,
            "--count",
            "6",
            "--seed",
            "11",
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success(), "synth failed: {}", stderr(&result));
        assert!(stdout(&result).contains("wrote 6 triplets"));
        outputs.push(out);
    }
    let reference = fs::read(outputs[0].join("manifest.jsonl")).unwrap();
    for out in &outputs[1..] {
        assert_eq!(fs::read(out.join("manifest.jsonl")).unwrap(), reference);
    }
    for kind in ["source", "target", "mask"] {
        for i in 0..6 {
            let name = format!("{kind}/{i:05}.png");
            let reference = fs::read(outputs[0].join(&name)).unwrap();
            for out in &outputs[1..] {
                assert_eq!(fs::read(out.join(&name)).unwrap(), reference, "{name} differs");
            }
        }
    }
}

#[test]
fn synth_render_writes_depth_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let (backgrounds, sprites) = write_assets(dir.path());
    let out = dir.path().join("rendered");
    let result = run(&[
        "synth-render",
        "--backgrounds",
        backgrounds.to_str().unwrap(),
        "--sprites",
        sprites.to_str().unwrap(),
        "--count",
        "4",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "synth-render failed: {}", stderr(&result));
    assert!(out.join("depth/00003.png").exists());

    let manifest = out.join("manifest.jsonl");
    let valid = run(&["validate-manifest", "--manifest", manifest.to_str().unwrap(), "--deep"]);
    assert!(valid.status.success(), "validation failed: {}", stderr(&valid));
    assert!(stdout(&valid).contains("manifest ok"));

    // Breaking the dataset must flip validation to a failure exit.
    fs::remove_file(out.join("target/00001.png")).unwrap();
    let broken = run(&["validate-manifest", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(broken.status.code(), Some(1));
    assert!(stderr(&broken).contains("00001"));
}

#[test]
fn remove_writes_the_prediction_and_stages() {
    let dir = tempfile::tempdir().unwrap();
    let (source, _target, mask) = write_scene(dir.path());
    let out = dir.path().join("pred.png");
    let result = run(&[
        "remove",
        "--in",
        source.to_str().unwrap(),
        "--mask",
        mask.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--refine-iters",
        "2",
        "--save-stages",
    ]);
    assert!(result.status.success(), "remove failed: {}", stderr(&result));
    assert!(out.exists());
    assert!(dir.path().join("pred.stage1.png").exists());
    assert!(dir.path().join("pred.stage2.png").exists());

    let prediction = person_removal::io::load_image(&out).unwrap();
    assert_eq!(prediction.dimensions(), (96, 72));

    let bad_mode = run(&[
        "remove",
        "--in",
        source.to_str().unwrap(),
        "--mask",
        mask.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--mode",
        "telepathy",
    ]);
    assert_eq!(bad_mode.status.code(), Some(2));
    assert!(stderr(&bad_mode).contains("unknown mode"));
}

#[test]
fn fit_light_writes_a_fit_result() {
    let dir = tempfile::tempdir().unwrap();
    let (source, target, mask) = write_scene(dir.path());
    let out = dir.path().join("fit.json");
    let result = run(&[
        "fit-light",
        "--source",
        source.to_str().unwrap(),
        "--target",
        target.to_str().unwrap(),
        "--mask",
        mask.to_str().unwrap(),
        "--grid",
        "gain=0.8:1.2:5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "fit-light failed: {}", stderr(&result));
    let parsed: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(parsed["evaluations"], 5);
    assert!(parsed["loss"].as_f64().unwrap().is_finite());
    assert!(parsed["params"]["gain"].is_array());

    let bad_grid = run(&[
        "fit-light",
        "--source",
        source.to_str().unwrap(),
        "--target",
        target.to_str().unwrap(),
        "--mask",
        mask.to_str().unwrap(),
        "--grid",
        "sparkle=1:2:3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(bad_grid.status.code(), Some(2));
}

#[test]
fn evaluate_scores_the_test_split_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (backgrounds, sprites) = write_assets(dir.path());
    let dataset = dir.path().join("dataset");
    let synth = run(&[
        "synth-mosaic",
        "--backgrounds",
        backgrounds.to_str().unwrap(),
        "--sprites",
        sprites.to_str().unwrap(),
        "--count",
        "8",
        "--seed",
        "21",
        "--out",
        dataset.to_str().unwrap(),
    ]);
    assert!(synth.status.success(), "synth failed: {}", stderr(&synth));
    let manifest = dataset.join("manifest.jsonl");

    // Without tags and without a split request there is nothing to score.
    let untagged = run(&[
        "evaluate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        dir.path().join("nope").to_str().unwrap(),
    ]);
    assert_eq!(untagged.status.code(), Some(2));
    assert!(stderr(&untagged).contains("train-fraction"));

    let mut csv = Vec::new();
    for name in ["eval1", "eval2"] {
        let out = dir.path().join(name);
        let result = run(&[
            "evaluate",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--train-fraction",
            "0.5",
            "--split-seed",
            "9",
        ]);
        assert!(result.status.success(), "evaluate failed: {}", stderr(&result));
        assert!(stdout(&result).contains("split 8 entries into 4 train / 4 test"));
        assert!(stdout(&result).contains("scored 4 images"));
        assert!(out.join("report.json").exists());
        assert!(out.join("report.md").exists());
        assert!(out.join("manifest.jsonl").exists());
        // Exactly the four test entries get predictions.
        let predictions = fs::read_dir(out.join("pred")).unwrap().count();
        assert_eq!(predictions, 4);
        csv.push(fs::read(out.join("report.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1], "reports differ between identical runs");
}
