//! Procedural fixtures: deterministic backgrounds, person donors, and
//! placement regions.
//!
//! The toolkit consumes ordinary PNG directories in production. These
//! generators exist so that tests, examples, and smoke runs can exercise
//! the full pipeline without shipping binary assets. Everything here is
//! seeded and reproducible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::image::Image;
use crate::mask::Mask;

/// Smooth two-corner gradient, linear in `x + y`, with a seeded palette.
/// Being harmonic, it is exactly reconstructible by diffusion fill, which
/// makes it the backdrop of choice for removal-quality fixtures.
pub fn gradient_background(width: u32, height: u32, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0: [f32; 3] = std::array::from_fn(|_| rng.random_range(0.15..0.45));
    let c1: [f32; 3] = std::array::from_fn(|_| rng.random_range(0.55..0.85));
    let span = (width.max(2) - 1 + height.max(2) - 1) as f32;
    Image::from_fn(width, height, |x, y| {
        let t = (x + y) as f32 / span;
        std::array::from_fn(|c| c0[c] + (c1[c] - c0[c]) * t)
    })
}

/// Vertical two-tone stripes with period `2 * band` pixels. Exactly
/// periodic along x, which gives exemplar fill an unambiguous texture to
/// continue.
pub fn stripe_background(width: u32, height: u32, band: u32) -> Image {
    let band = band.max(1);
    let bright = [0.75, 0.70, 0.62];
    let dark = [0.30, 0.34, 0.42];
    Image::from_fn(width, height, |x, _| {
        if (x / band) % 2 == 0 {
            bright
        } else {
            dark
        }
    })
}

/// Checkerboard with square cells of `cell` pixels.
pub fn checker_background(width: u32, height: u32, cell: u32) -> Image {
    let cell = cell.max(1);
    let bright = [0.72, 0.72, 0.68];
    let dark = [0.26, 0.28, 0.33];
    Image::from_fn(width, height, |x, y| {
        if ((x / cell) + (y / cell)) % 2 == 0 {
            bright
        } else {
            dark
        }
    })
}

/// Cartoon person donor: head, torso, and legs drawn over a neutral fill,
/// plus the silhouette mask. Colors come from the seed; a mild
/// deterministic brightness weave keeps the silhouette textured so
/// lighting parameters stay identifiable. Intended for donors of roughly
/// 24x32 pixels and up.
pub fn person_donor(width: u32, height: u32, seed: u64) -> (Image, Mask) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skin: [f32; 3] = std::array::from_fn(|_| rng.random_range(0.45..0.80));
    let shirt: [f32; 3] = std::array::from_fn(|_| rng.random_range(0.20..0.80));
    let pants: [f32; 3] = std::array::from_fn(|_| rng.random_range(0.15..0.55));

    let w = width as f32;
    let h = height as f32;
    let head_c = (0.50 * w, 0.20 * h);
    let head_r = 0.11 * h;
    let torso_c = (0.50 * w, 0.50 * h);
    let torso_ax = (0.26 * w, 0.20 * h);
    let leg_y = (0.66 * h, 0.90 * h);
    let leg_spans = [(0.28 * w, 0.44 * w), (0.56 * w, 0.72 * w)];

    let part = |x: u32, y: u32| -> Option<[f32; 3]> {
        let (px, py) = (x as f32 + 0.5, y as f32 + 0.5);
        let dx = px - head_c.0;
        let dy = py - head_c.1;
        if dx * dx + dy * dy <= head_r * head_r {
            return Some(skin);
        }
        let ex = (px - torso_c.0) / torso_ax.0;
        let ey = (py - torso_c.1) / torso_ax.1;
        if ex * ex + ey * ey <= 1.0 {
            return Some(shirt);
        }
        if py >= leg_y.0 && py <= leg_y.1 {
            for &(lo, hi) in &leg_spans {
                if px >= lo && px <= hi {
                    return Some(pants);
                }
            }
        }
        None
    };

    let mask = Mask::from_fn(width, height, |x, y| part(x, y).is_some());
    let image = Image::from_fn(width, height, |x, y| match part(x, y) {
        Some(color) => {
            let weave = 0.92 + 0.16 * (((x * 31 + y * 17) % 7) as f32 / 6.0);
            std::array::from_fn(|c| (color[c] * weave).clamp(0.0, 1.0))
        }
        None => [0.5, 0.5, 0.5],
    });
    (image, mask)
}

/// Placement region covering the lower band of the frame: every row from
/// `floor(top_fraction * height)` down. Stands in for road or sidewalk
/// annotations.
pub fn lower_region(width: u32, height: u32, top_fraction: f32) -> Mask {
    let start = ((top_fraction.clamp(0.0, 1.0) * height as f32).floor() as u32).min(height - 1);
    Mask::from_fn(width, height, |_, y| y >= start)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(
            gradient_background(16, 12, 9).channels(),
            gradient_background(16, 12, 9).channels()
        );
        let (img_a, mask_a) = person_donor(24, 32, 3);
        let (img_b, mask_b) = person_donor(24, 32, 3);
        assert_eq!(img_a, img_b);
        assert_eq!(mask_a, mask_b);
    }

    #[test]
    fn donor_silhouette_stays_inside_a_margin() {
        let (_, mask) = person_donor(28, 40, 11);
        let (x0, y0, x1, y1) = mask.bounding_box().unwrap();
        assert!(x0 >= 2 && y0 >= 2);
        assert!(x1 <= 25 && y1 <= 37);
        assert!(mask.count_ones() > 100);
    }

    #[test]
    fn stripes_are_periodic() {
        let img = stripe_background(32, 8, 4);
        for y in 0..8 {
            for x in 0..24 {
                assert_eq!(img.get(x, y), img.get(x + 8, y));
            }
        }
    }

    #[test]
    fn lower_region_covers_expected_rows() {
        let region = lower_region(10, 20, 0.6);
        assert!(!region.get(5, 11));
        assert!(region.get(5, 12));
        assert!(region.get(0, 19));
        assert_eq!(region.count_ones(), 10 * 8);

        let full = lower_region(4, 4, 0.0);
        assert_eq!(full.count_ones(), 16);
    }
}
