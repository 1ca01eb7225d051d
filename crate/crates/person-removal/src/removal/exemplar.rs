//! Hole filling by exemplar patch copying.
//!
//! The hole is filled greedily from its rim inward. Each round picks
//! the frontier pixel whose patch window contains the most known
//! pixels, searches nearby fully-known windows for the best match to
//! the window's known content, and copies the match into the window's
//! unknown positions. Copying whole patches propagates texture and
//! repeating structure that smooth interpolation would wash out. Any
//! pixels left over when no candidate window exists are filled by
//! diffusion, and the split is reported so callers can tell how much
//! of the hole was synthesized from exemplars.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::mask::Mask;

use super::diffusion::diffusion_restore;
use super::{ExemplarParams, Restorer};

/// How the hole pixels were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExemplarOutcome {
    /// Pixels copied from exemplar windows.
    pub exemplar_filled: u64,
    /// Pixels that fell back to diffusion.
    pub diffusion_filled: u64,
}

/// [`Restorer`] wrapper around [`exemplar_restore`].
#[derive(Debug, Clone, Copy)]
pub struct ExemplarRestorer {
    params: ExemplarParams,
}

impl ExemplarRestorer {
    pub fn new(params: ExemplarParams) -> Result<Self> {
        validate(params.patch_size, params.search_radius)?;
        Ok(Self { params })
    }
}

impl Restorer for ExemplarRestorer {
    fn name(&self) -> &str {
        "exemplar"
    }

    fn restore(&self, image: &Image, mask: &Mask) -> Result<Image> {
        let (restored, outcome) =
            exemplar_restore(image, mask, self.params.patch_size, self.params.search_radius)?;
        if outcome.diffusion_filled > 0 {
            log::debug!(
                "exemplar fill: {} pixels from exemplars, {} from diffusion fallback",
                outcome.exemplar_filled,
                outcome.diffusion_filled
            );
        }
        Ok(restored)
    }
}

fn validate(patch_size: u32, search_radius: u32) -> Result<()> {
    if patch_size < 3 || patch_size % 2 == 0 {
        return Err(Error::InvalidArgument(
            "exemplar patch size must be odd and at least 3".into(),
        ));
    }
    if search_radius < patch_size {
        return Err(Error::InvalidArgument(
            "exemplar search radius must be at least the patch size".into(),
        ));
    }
    Ok(())
}

/// Inclusive-prefix-sum table over a boolean grid, laid out (w+1) by
/// (h+1) so any rectangle count is four lookups.
struct CountTable {
    w: usize,
    sums: Vec<u32>,
}

impl CountTable {
    fn build(flags: &[bool], w: usize, h: usize) -> Self {
        let stride = w + 1;
        let mut sums = vec![0u32; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u32;
            for x in 0..w {
                row += flags[y * w + x] as u32;
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { w, sums }
    }

    /// Count of set flags in `[x0, x1) x [y0, y1)`.
    fn rect(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u32 {
        let stride = self.w + 1;
        self.sums[y1 * stride + x1] + self.sums[y0 * stride + x0]
            - self.sums[y0 * stride + x1]
            - self.sums[y1 * stride + x0]
    }
}

/// Fills the masked pixels of `image` by greedy exemplar copying with a
/// diffusion fallback, returning the filled image and the fill
/// breakdown. Candidate windows are `patch_size` squares that lie fully
/// inside the image and contain no originally-masked pixel, searched
/// within a Chebyshev `search_radius` of the target pixel. Ties in
/// target priority and in candidate score both resolve toward the
/// smaller (y, x), which keeps the fill exactly deterministic.
pub fn exemplar_restore(
    image: &Image,
    mask: &Mask,
    patch_size: u32,
    search_radius: u32,
) -> Result<(Image, ExemplarOutcome)> {
    validate(patch_size, search_radius)?;
    mask.ensure_same_size_as(image)?;
    if mask.is_empty() {
        return Ok((image.clone(), ExemplarOutcome::default()));
    }

    let (w, h) = image.dimensions();
    let (wi, hi) = (w as usize, h as usize);
    let k = patch_size as usize;
    let kr = k / 2;
    let radius = search_radius as i64;

    let bits = mask.bits();
    let mut known: Vec<bool> = bits.iter().map(|&b| !b).collect();
    let originally_known = CountTable::build(&known, wi, hi);
    let mut data = image.channels().to_vec();
    let mut remaining = mask.count_ones();
    let mut exemplar_filled = 0u64;

    // Candidate window centers, precomputed once: the window must fit in
    // the image and contain only originally-known pixels.
    let valid_center = |cx: usize, cy: usize| -> bool {
        cx >= kr
            && cy >= kr
            && cx + kr < wi
            && cy + kr < hi
            && originally_known.rect(cx - kr, cy - kr, cx + kr + 1, cy + kr + 1) == (k * k) as u32
    };

    while remaining > 0 {
        let current_known = CountTable::build(&known, wi, hi);

        // Frontier pixel with the most known context in its window.
        let mut target: Option<(usize, usize, u32)> = None;
        for y in 0..hi {
            for x in 0..wi {
                let p = y * wi + x;
                if known[p] {
                    continue;
                }
                let bordered = (x > 0 && known[p - 1])
                    || (x + 1 < wi && known[p + 1])
                    || (y > 0 && known[p - wi])
                    || (y + 1 < hi && known[p + wi]);
                if !bordered {
                    continue;
                }
                let x0 = x.saturating_sub(kr);
                let y0 = y.saturating_sub(kr);
                let x1 = (x + kr + 1).min(wi);
                let y1 = (y + kr + 1).min(hi);
                let priority = current_known.rect(x0, y0, x1, y1);
                if target.map_or(true, |(_, _, best)| priority > best) {
                    target = Some((x, y, priority));
                }
            }
        }
        let Some((tx, ty, _)) = target else {
            break;
        };

        // Best-matching candidate window under mean SSD over the known
        // pixels of the target window.
        let cx_lo = ((tx as i64 - radius).max(0)) as usize;
        let cx_hi = ((tx as i64 + radius).min(wi as i64 - 1)) as usize;
        let cy_lo = ((ty as i64 - radius).max(0)) as usize;
        let cy_hi = ((ty as i64 + radius).min(hi as i64 - 1)) as usize;
        let mut candidate: Option<(usize, usize, f64)> = None;
        for cy in cy_lo..=cy_hi {
            for cx in cx_lo..=cx_hi {
                if !valid_center(cx, cy) {
                    continue;
                }
                let mut ssd = 0.0f64;
                let mut count = 0u32;
                for dy in -(kr as i64)..=kr as i64 {
                    for dx in -(kr as i64)..=kr as i64 {
                        let px = tx as i64 + dx;
                        let py = ty as i64 + dy;
                        if px < 0 || py < 0 || px >= wi as i64 || py >= hi as i64 {
                            continue;
                        }
                        let p = py as usize * wi + px as usize;
                        if !known[p] {
                            continue;
                        }
                        let q = (cy as i64 + dy) as usize * wi + (cx as i64 + dx) as usize;
                        for c in 0..3 {
                            let d = data[3 * p + c] as f64 - data[3 * q + c] as f64;
                            ssd += d * d;
                        }
                        count += 1;
                    }
                }
                let score = ssd / count as f64;
                if candidate.map_or(true, |(_, _, best)| score < best) {
                    candidate = Some((cx, cy, score));
                }
            }
        }
        let Some((cx, cy, _)) = candidate else {
            break;
        };

        // Copy the candidate into the window's unknown pixels.
        for dy in -(kr as i64)..=kr as i64 {
            for dx in -(kr as i64)..=kr as i64 {
                let px = tx as i64 + dx;
                let py = ty as i64 + dy;
                if px < 0 || py < 0 || px >= wi as i64 || py >= hi as i64 {
                    continue;
                }
                let p = py as usize * wi + px as usize;
                if known[p] {
                    continue;
                }
                let q = (cy as i64 + dy) as usize * wi + (cx as i64 + dx) as usize;
                for c in 0..3 {
                    data[3 * p + c] = data[3 * q + c];
                }
                known[p] = true;
                remaining -= 1;
                exemplar_filled += 1;
            }
        }
    }

    let mut out = Image::new(w, h, data)?;
    let mut diffusion_filled = 0u64;
    if remaining > 0 {
        log::warn!(
            "exemplar search found no candidate window for {remaining} pixels; falling back to diffusion"
        );
        let residual = Mask::from_fn(w, h, |x, y| !known[y as usize * wi + x as usize]);
        out = diffusion_restore(&out, &residual, 2000, 1e-5)?;
        diffusion_filled = remaining as u64;
    }
    Ok((
        out,
        ExemplarOutcome {
            exemplar_filled,
            diffusion_filled,
        },
    ))
}
