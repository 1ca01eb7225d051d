//! Composition algebra on a synthetic scene: soft alpha blending for
//! synthesis, the hard masked selection used when scoring predictions,
//! and the legacy punch-out that zero-fills the person.
//!
//! Run with `cargo run --example composition`. Images land in
//! `target/examples/composition/`.

use std::path::PathBuf;

use person_removal::compose::{alpha_blend, compose_masked, subtract_person};
use person_removal::io::{save_image, save_mask};
use person_removal::mosaic::{extract_sprite, paste, Placement};
use person_removal::synthetic::{gradient_background, person_donor};
use person_removal::AlphaMap;

fn out_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from("target/examples").join(name);
    std::fs::create_dir_all(&dir).expect("create example output directory");
    dir
}

fn main() -> person_removal::Result<()> {
    let dir = out_dir("composition");

    // A clean plate and a donor person, both procedural.
    let background = gradient_background(160, 120, 11);
    let (donor, donor_mask) = person_donor(64, 96, 3);
    let sprite = extract_sprite(&donor, &donor_mask, 2)?;

    // Paste stands the sprite on its anchor (bottom center) and blends
    // through the feathered alpha.
    let placement = Placement {
        anchor_x: 80,
        anchor_y: 112,
        scale: 1.0,
        flip: false,
    };
    let triplet = paste(&background, &sprite, &placement)?;
    save_image(dir.join("source.png"), triplet.source())?;
    save_image(dir.join("target.png"), triplet.target())?;
    save_mask(dir.join("mask.png"), triplet.mask())?;

    // Hard selection: prediction inside the mask, source outside, both
    // sides bit-exact. Recomposing the source into the target restores
    // the composite wherever the mask is set.
    let recomposed = compose_masked(triplet.target(), triplet.source(), triplet.mask())?;
    let mut inside_ok = true;
    let mut outside_ok = true;
    for y in 0..background.height() {
        for x in 0..background.width() {
            let expected = if triplet.mask().get(x, y) {
                triplet.source().get(x, y)
            } else {
                triplet.target().get(x, y)
            };
            let got = recomposed.get(x, y);
            if triplet.mask().get(x, y) {
                inside_ok &= got == expected;
            } else {
                outside_ok &= got == expected;
            }
        }
    }
    println!("masked composition bit-exact inside: {inside_ok}, outside: {outside_ok}");

    // Legacy pipelines feed the restorer a punched-out frame: black
    // holes where the person was.
    let punched = subtract_person(triplet.source(), triplet.mask())?;
    save_image(dir.join("punched.png"), &punched)?;
    println!(
        "punched out {} of {} pixels",
        triplet.mask().count_ones(),
        background.pixel_count()
    );

    // Soft blending with a full-frame alpha ramp, the same operator the
    // paste uses through the sprite's feathered silhouette.
    let other = gradient_background(160, 120, 99);
    let mut ramp = Vec::with_capacity(160 * 120);
    for _y in 0..120u32 {
        for x in 0..160u32 {
            ramp.push(x as f32 / 159.0);
        }
    }
    let alpha = AlphaMap::new(160, 120, ramp)?;
    let blend = alpha_blend(&background, &other, &alpha)?;
    save_image(dir.join("blend.png"), &blend)?;
    let left = blend.get(0, 60);
    let right = blend.get(159, 60);
    println!(
        "blend endpoints match the layers: left {}, right {}",
        left == other.get(0, 60),
        right == background.get(159, 60)
    );

    println!("wrote {}", dir.display());
    Ok(())
}
