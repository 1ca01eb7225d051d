//! Hole filling by harmonic interpolation.
//!
//! Masked pixels are relaxed toward the average of their four
//! neighbors (Jacobi iteration) until the largest per-iteration change
//! drops below a tolerance. The fixed point is the discrete harmonic
//! extension of the surrounding pixels, which carries smooth gradients
//! across the hole and reproduces linear shading exactly.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::mask::Mask;

use super::{DiffusionParams, Restorer};

/// [`Restorer`] wrapper around [`diffusion_restore`].
#[derive(Debug, Clone, Copy)]
pub struct DiffusionRestorer {
    params: DiffusionParams,
}

impl DiffusionRestorer {
    pub fn new(params: DiffusionParams) -> Self {
        Self { params }
    }
}

impl Restorer for DiffusionRestorer {
    fn name(&self) -> &str {
        "diffusion"
    }

    fn restore(&self, image: &Image, mask: &Mask) -> Result<Image> {
        diffusion_restore(image, mask, self.params.iters, self.params.tol)
    }
}

/// Fills the masked pixels of `image` by Jacobi relaxation, stopping
/// after `max_iters` sweeps or once the largest update falls below
/// `tol`. Unmasked pixels are returned bit-identical. The hole values
/// are seeded from the input clamped per connected component to the
/// range of that component's boundary, so every iterate (and the
/// result) respects the discrete maximum principle. A fully masked
/// image has no boundary to interpolate and is rejected.
pub fn diffusion_restore(image: &Image, mask: &Mask, max_iters: u32, tol: f32) -> Result<Image> {
    mask.ensure_same_size_as(image)?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument("diffusion tol must be nonnegative".into()));
    }
    if mask.is_empty() {
        return Ok(image.clone());
    }
    let (w, h) = image.dimensions();
    let (wi, hi) = (w as usize, h as usize);
    let total = wi * hi;
    if mask.count_ones() as usize == total {
        return Err(Error::NoBoundary);
    }

    let bits = mask.bits();
    let neighbors = |p: usize| {
        let (x, y) = (p % wi, p / wi);
        let mut out = [usize::MAX; 4];
        let mut n = 0;
        if x > 0 {
            out[n] = p - 1;
            n += 1;
        }
        if x + 1 < wi {
            out[n] = p + 1;
            n += 1;
        }
        if y > 0 {
            out[n] = p - wi;
            n += 1;
        }
        if y + 1 < hi {
            out[n] = p + wi;
            n += 1;
        }
        (out, n)
    };

    // Label 4-connected components of the hole and record the boundary
    // value range of each, then seed the hole with the input clamped to
    // that range.
    let mut component = vec![usize::MAX; total];
    let mut ranges: Vec<[(f32, f32); 3]> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    let mut current = image.channels().to_vec();
    for start in 0..total {
        if !bits[start] || component[start] != usize::MAX {
            continue;
        }
        let id = ranges.len();
        let mut range = [(f32::INFINITY, f32::NEG_INFINITY); 3];
        let mut members = Vec::new();
        component[start] = id;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            members.push(p);
            let (nbrs, n) = neighbors(p);
            for &q in &nbrs[..n] {
                if bits[q] {
                    if component[q] == usize::MAX {
                        component[q] = id;
                        queue.push_back(q);
                    }
                } else {
                    for c in 0..3 {
                        let v = current[3 * q + c];
                        range[c].0 = range[c].0.min(v);
                        range[c].1 = range[c].1.max(v);
                    }
                }
            }
        }
        debug_assert!(range[0].0.is_finite(), "interior component without boundary");
        for &p in &members {
            for c in 0..3 {
                current[3 * p + c] = current[3 * p + c].clamp(range[c].0, range[c].1);
            }
        }
        ranges.push(range);
    }

    let hole: Vec<usize> = (0..total).filter(|&p| bits[p]).collect();
    let mut next = current.clone();
    for _ in 0..max_iters {
        let mut max_delta = 0.0f32;
        for &p in &hole {
            let (nbrs, n) = neighbors(p);
            for c in 0..3 {
                let mut sum = 0.0f64;
                for &q in &nbrs[..n] {
                    sum += current[3 * q + c] as f64;
                }
                let v = (sum / n as f64) as f32;
                max_delta = max_delta.max((v - current[3 * p + c]).abs());
                next[3 * p + c] = v;
            }
        }
        std::mem::swap(&mut current, &mut next);
        if max_delta < tol {
            break;
        }
    }

    Image::new(w, h, current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn empty_mask_is_identity() {
        let image = synthetic::gradient_background(9, 7, 1);
        let empty = Mask::filled(9, 7, false).unwrap();
        let out = diffusion_restore(&image, &empty, 100, 1e-6).unwrap();
        assert_eq!(out, image);
    }

    #[test]
    fn full_mask_has_no_boundary() {
        let image = synthetic::gradient_background(6, 6, 1);
        let full = Mask::filled(6, 6, true).unwrap();
        assert!(matches!(
            diffusion_restore(&image, &full, 100, 1e-6),
            Err(Error::NoBoundary)
        ));
    }

    #[test]
    fn single_pixel_hole_averages_its_neighbors() {
        let mut image = Image::filled(3, 3, [0.5; 3]).unwrap();
        image.set(1, 1, [0.9, 0.1, 0.3]);
        let mask = Mask::from_fn(3, 3, |x, y| x == 1 && y == 1);
        let out = diffusion_restore(&image, &mask, 100, 1e-7).unwrap();
        assert_eq!(out.get(1, 1), [0.5; 3]);

        let mut uneven = Image::filled(3, 3, [0.0; 3]).unwrap();
        uneven.set(0, 1, [0.4; 3]);
        uneven.set(2, 1, [0.4; 3]);
        uneven.set(1, 0, [0.6; 3]);
        uneven.set(1, 2, [0.6; 3]);
        let out = diffusion_restore(&uneven, &mask, 100, 1e-7).unwrap();
        for c in 0..3 {
            assert!((out.get(1, 1)[c] - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn linear_gradients_are_reproduced() {
        let w = 17u32;
        let h = 13u32;
        let image = Image::from_fn(w, h, |x, _| {
            let v = x as f32 / (w - 1) as f32;
            [v, 0.5 * v, 1.0 - 0.5 * v]
        });
        let mask = Mask::from_fn(w, h, |x, y| (6..11).contains(&x) && (4..9).contains(&y));
        let tol = 1e-6f32;
        let out = diffusion_restore(&image, &mask, 20_000, tol).unwrap();
        let mut worst = 0.0f32;
        for y in 0..h {
            for x in 0..w {
                if mask.get(x, y) {
                    for c in 0..3 {
                        worst = worst.max((out.get(x, y)[c] - image.get(x, y)[c]).abs());
                    }
                } else {
                    assert_eq!(out.get(x, y), image.get(x, y));
                }
            }
        }
        assert!(worst < 10.0 * tol, "gradient error {worst}");
    }

    #[test]
    fn fill_respects_the_boundary_range() {
        let image = synthetic::gradient_background(24, 24, 11);
        let mask = Mask::from_fn(24, 24, |x, y| {
            let (dx, dy) = (x as i64 - 12, y as i64 - 12);
            dx * dx + dy * dy <= 36
        });
        let out = diffusion_restore(&image, &mask, 5_000, 1e-6).unwrap();

        let mut lo = [f32::INFINITY; 3];
        let mut hi = [f32::NEG_INFINITY; 3];
        for (x, y) in mask.dilate(1).iter_set() {
            if !mask.get(x, y) {
                for c in 0..3 {
                    lo[c] = lo[c].min(image.get(x, y)[c]);
                    hi[c] = hi[c].max(image.get(x, y)[c]);
                }
            }
        }
        for (x, y) in mask.iter_set() {
            for c in 0..3 {
                let v = out.get(x, y)[c];
                assert!(v >= lo[c] - 1e-6 && v <= hi[c] + 1e-6, "{v} outside [{}, {}]", lo[c], hi[c]);
            }
        }
    }

    #[test]
    fn components_are_filled_independently() {
        let image = Image::from_fn(12, 4, |x, _| {
            if x < 6 {
                [0.2; 3]
            } else {
                [0.8; 3]
            }
        });
        let mask = Mask::from_fn(12, 4, |x, y| y == 1 && (x == 2 || x == 9));
        let out = diffusion_restore(&image, &mask, 200, 1e-7).unwrap();
        assert_eq!(out.get(2, 1), [0.2; 3]);
        assert_eq!(out.get(9, 1), [0.8; 3]);
    }
}
