//! Shared fixtures for the integration tests, including reference
//! implementations of the quality metrics written independently of the
//! library (direct two-dimensional windows, centered moments) so the
//! two sides can be compared.

use person_removal::{Image, Mask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(width: u32, height: u32, rng: &mut ChaCha8Rng) -> Image {
    let n = 3 * width as usize * height as usize;
    let data = (0..n).map(|_| rng.random::<f32>()).collect();
    Image::new(width, height, data).expect("random image dimensions are valid")
}

pub fn random_mask(width: u32, height: u32, density: f64, rng: &mut ChaCha8Rng) -> Mask {
    let n = width as usize * height as usize;
    let bits = (0..n).map(|_| rng.random_bool(density)).collect();
    Mask::new(width, height, bits).expect("random mask dimensions are valid")
}

pub fn rmse_reference(a: &Image, b: &Image) -> f64 {
    assert_eq!(a.dimensions(), b.dimensions());
    let mut sum = 0.0f64;
    let mut count = 0u64;
    for y in 0..a.height() {
        for x in 0..a.width() {
            let pa = a.get(x, y);
            let pb = b.get(x, y);
            for c in 0..3 {
                let diff = 255.0 * (pa[c] as f64 - pb[c] as f64);
                sum += diff * diff;
                count += 1;
            }
        }
    }
    (sum / count as f64).sqrt()
}

pub fn psnr_reference(rmse: f64) -> f64 {
    if rmse == 0.0 {
        99.0
    } else {
        20.0 * (255.0 / rmse).log10()
    }
}

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;

fn window_weights() -> [[f64; WINDOW]; WINDOW] {
    let mut weights = [[0.0; WINDOW]; WINDOW];
    let mut total = 0.0;
    for (i, row) in weights.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            let di = i as f64 - (WINDOW as f64 - 1.0) / 2.0;
            let dj = j as f64 - (WINDOW as f64 - 1.0) / 2.0;
            *w = (-(di * di + dj * dj) / (2.0 * SIGMA * SIGMA)).exp();
            total += *w;
        }
    }
    for row in weights.iter_mut() {
        for w in row.iter_mut() {
            *w /= total;
        }
    }
    weights
}

fn luma_grid(image: &Image) -> Vec<Vec<f64>> {
    (0..image.height())
        .map(|y| {
            (0..image.width())
                .map(|x| {
                    let [r, g, b] = image.get(x, y);
                    255.0 * (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
                })
                .collect()
        })
        .collect()
}

/// Mean structural similarity over all fully contained 11x11 windows,
/// computed the straightforward way: per window, weighted means first,
/// then weighted centered moments.
pub fn ssim_reference(a: &Image, b: &Image) -> f64 {
    assert_eq!(a.dimensions(), b.dimensions());
    let (w, h) = (a.width() as usize, a.height() as usize);
    assert!(w >= WINDOW && h >= WINDOW, "images must fit one window");
    let weights = window_weights();
    let la = luma_grid(a);
    let lb = luma_grid(b);
    let c1 = (0.01 * 255.0f64).powi(2);
    let c2 = (0.03 * 255.0f64).powi(2);

    let mut total = 0.0;
    let mut windows = 0u64;
    for y0 in 0..=(h - WINDOW) {
        for x0 in 0..=(w - WINDOW) {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            for i in 0..WINDOW {
                for j in 0..WINDOW {
                    mu_a += weights[i][j] * la[y0 + i][x0 + j];
                    mu_b += weights[i][j] * lb[y0 + i][x0 + j];
                }
            }
            let mut var_a = 0.0;
            let mut var_b = 0.0;
            let mut cov = 0.0;
            for i in 0..WINDOW {
                for j in 0..WINDOW {
                    let da = la[y0 + i][x0 + j] - mu_a;
                    let db = lb[y0 + i][x0 + j] - mu_b;
                    var_a += weights[i][j] * da * da;
                    var_b += weights[i][j] * db * db;
                    cov += weights[i][j] * da * db;
                }
            }
            let numerator = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let denominator = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += numerator / denominator;
            windows += 1;
        }
    }
    total / windows as f64
}
