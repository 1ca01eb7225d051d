//! Image-mosaic dataset synthesis.
//!
//! A person is cropped out of a donor photo via its silhouette mask,
//! feathered at the rim, and pasted onto a background at a sampled
//! placement. Because the background is the ground truth, every paste
//! yields a complete (source, target, mask) triplet: the source carries
//! the person, the target is the untouched background, and the mask marks
//! the pasted silhouette.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compose::blend_channel;
use crate::error::{Error, Result};
use crate::image::{AlphaMap, Image};
use crate::io;
use crate::mask::Mask;
use crate::render::LightingParams;
use crate::synthetic;

/// A cropped person: the patch pixels, a soft silhouette alpha, and the
/// donor label it came from. The feather radius used at extraction rides
/// along so that pasting can rebuild an equally tight rim at any scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonSprite {
    patch: Image,
    alpha: AlphaMap,
    origin_id: String,
    feather_radius: u32,
}

impl PersonSprite {
    pub fn new(patch: Image, alpha: AlphaMap, origin_id: String, feather_radius: u32) -> Result<Self> {
        crate::image::ensure_same_size(patch.dimensions(), alpha.dimensions())?;
        Ok(Self {
            patch,
            alpha,
            origin_id,
            feather_radius,
        })
    }

    pub fn with_origin_id(mut self, origin_id: impl Into<String>) -> Self {
        self.origin_id = origin_id.into();
        self
    }

    pub fn patch(&self) -> &Image {
        &self.patch
    }

    pub fn alpha(&self) -> &AlphaMap {
        &self.alpha
    }

    pub fn origin_id(&self) -> &str {
        &self.origin_id
    }

    pub fn feather_radius(&self) -> u32 {
        self.feather_radius
    }

    pub fn dimensions(&self) -> (u32, u32) {
        self.patch.dimensions()
    }

    /// True on the hard silhouette interior, i.e. where the alpha is a
    /// full 1 rather than part of the feather ramp.
    pub fn is_silhouette(&self, x: u32, y: u32) -> bool {
        self.alpha.get(x, y) == 1.0
    }

    /// Replaces the patch pixels, keeping alpha and provenance. The new
    /// patch must match the old resolution.
    pub(crate) fn with_patch(&self, patch: Image) -> Result<Self> {
        crate::image::ensure_same_size(patch.dimensions(), self.alpha.dimensions())?;
        Ok(Self {
            patch,
            alpha: self.alpha.clone(),
            origin_id: self.origin_id.clone(),
            feather_radius: self.feather_radius,
        })
    }
}

/// Where and how a sprite lands on the background: `anchor_x`/`anchor_y`
/// give the bottom-center pixel of the scaled footprint in background
/// coordinates (possibly outside the frame for partial placements).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub anchor_x: i64,
    pub anchor_y: i64,
    pub scale: f32,
    pub flip: bool,
}

impl Default for Placement {
    fn default() -> Self {
        Self {
            anchor_x: 0,
            anchor_y: 0,
            scale: 1.0,
            flip: false,
        }
    }
}

/// Linear perspective heuristic: `scale = base_scale * anchor_y /
/// horizon_offset`, floored at `min_scale` so degenerate anchors near the
/// top of the frame never collapse the sprite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundLineRule {
    base_scale: f64,
    horizon_offset: f64,
    min_scale: f64,
}

impl GroundLineRule {
    pub fn new(base_scale: f64, horizon_offset: f64, min_scale: f64) -> Result<Self> {
        for (name, v) in [
            ("base_scale", base_scale),
            ("horizon_offset", horizon_offset),
            ("min_scale", min_scale),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "ground line rule {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            base_scale,
            horizon_offset,
            min_scale,
        })
    }

    pub fn scale_at(&self, anchor_y: i64) -> f32 {
        let raw = self.base_scale * anchor_y.max(0) as f64 / self.horizon_offset;
        raw.max(self.min_scale) as f32
    }
}

/// Scale-rule parameters as they appear in configuration, with the
/// horizon expressed as a fraction of the background height so one config
/// serves mixed-resolution asset sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaleRuleSpec {
    pub base: f64,
    pub horizon_fraction: f64,
    pub min: f64,
}

impl Default for ScaleRuleSpec {
    fn default() -> Self {
        Self {
            base: 1.0,
            horizon_fraction: 0.6,
            min: 0.05,
        }
    }
}

impl ScaleRuleSpec {
    pub fn rule_for_height(&self, height: u32) -> Result<GroundLineRule> {
        let horizon = self.horizon_fraction * height.saturating_sub(1).max(1) as f64;
        GroundLineRule::new(self.base, horizon, self.min)
    }
}

/// Batch-synthesis knobs shared by the mosaic and render generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MosaicConfig {
    pub seed: u64,
    pub scale: ScaleRuleSpec,
}

impl Default for MosaicConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            scale: ScaleRuleSpec::default(),
        }
    }
}

/// Provenance carried by every synthesized triplet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TripletMeta {
    pub background_id: String,
    pub sprite_id: String,
    pub placement: Placement,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lighting: Option<LightingParams>,
}

/// The dataset unit: source with person, clean target, binary mask, and
/// provenance. All three grids share one resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeTriplet {
    source: Image,
    target: Image,
    mask: Mask,
    pub meta: TripletMeta,
}

impl CompositeTriplet {
    pub fn new(source: Image, target: Image, mask: Mask, meta: TripletMeta) -> Result<Self> {
        source.ensure_same_size_as(&target)?;
        mask.ensure_same_size_as(&source)?;
        Ok(Self {
            source,
            target,
            mask,
            meta,
        })
    }

    pub fn source(&self) -> &Image {
        &self.source
    }

    pub fn target(&self) -> &Image {
        &self.target
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }
}

/// Crops the tight bounding box of the mask (padded by the feather
/// radius where the donor has room) and builds the soft alpha: 1 on the
/// silhouette, linearly falling to 0 at `feather_radius` pixels out.
pub fn extract_sprite(donor: &Image, donor_mask: &Mask, feather_radius: u32) -> Result<PersonSprite> {
    donor_mask.ensure_same_size_as(donor)?;
    let (bx0, by0, bx1, by1) = donor_mask
        .bounding_box()
        .ok_or_else(|| Error::EmptySelection("donor mask has no set bits".into()))?;
    let x0 = bx0.saturating_sub(feather_radius);
    let y0 = by0.saturating_sub(feather_radius);
    let x1 = (bx1 + feather_radius).min(donor.width() - 1);
    let y1 = (by1 + feather_radius).min(donor.height() - 1);
    let (pw, ph) = (x1 - x0 + 1, y1 - y0 + 1);

    let patch = Image::from_fn(pw, ph, |x, y| donor.get(x0 + x, y0 + y));
    let silhouette = Mask::from_fn(pw, ph, |x, y| donor_mask.get(x0 + x, y0 + y));
    let alpha = feather_alpha(&silhouette, feather_radius);
    PersonSprite::new(patch, alpha, String::new(), feather_radius)
}

/// Soft alpha from a hard silhouette: 1 on set bits, `1 - d/radius` at
/// Euclidean distance `d` outside, 0 from `radius` out. The nearest set
/// bit of any pixel with positive alpha lies within a Chebyshev window of
/// `radius`, so the scan is windowed without losing exactness.
pub(crate) fn feather_alpha(silhouette: &Mask, radius: u32) -> AlphaMap {
    let (w, h) = silhouette.dimensions();
    if radius == 0 {
        let values = silhouette.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        return AlphaMap::new(w, h, values).expect("binary values are valid alphas");
    }
    let r = radius as i64;
    let mut values = Vec::with_capacity((w * h) as usize);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if silhouette.get(x as u32, y as u32) {
                values.push(1.0);
                continue;
            }
            let mut best = i64::MAX;
            for dy in -r..=r {
                let ny = y + dy;
                if ny < 0 || ny >= h as i64 {
                    continue;
                }
                for dx in -r..=r {
                    let nx = x + dx;
                    if nx < 0 || nx >= w as i64 {
                        continue;
                    }
                    if silhouette.get(nx as u32, ny as u32) {
                        best = best.min(dx * dx + dy * dy);
                    }
                }
            }
            if best == i64::MAX {
                values.push(0.0);
            } else {
                let d = (best as f64).sqrt();
                values.push((1.0 - d / radius as f64).max(0.0) as f32);
            }
        }
    }
    AlphaMap::new(w, h, values).expect("feather values lie in [0,1]")
}

pub(crate) fn scaled_extent(width: u32, height: u32, scale: f32) -> (u32, u32) {
    let sw = (width as f64 * scale as f64).round().max(1.0) as u32;
    let sh = (height as f64 * scale as f64).round().max(1.0) as u32;
    (sw, sh)
}

fn source_index(out: u32, out_extent: u32, src_extent: u32, mirror: bool) -> u32 {
    let ratio = src_extent as f64 / out_extent as f64;
    let idx = (((out as f64 + 0.5) * ratio).floor() as u32).min(src_extent - 1);
    if mirror {
        src_extent - 1 - idx
    } else {
        idx
    }
}

/// Pastes the scaled, optionally mirrored sprite with its bottom-center
/// at the placement anchor. The pasted silhouette is re-feathered in
/// output coordinates, so the rim band stays `feather_radius` pixels wide
/// at every scale; the mask binarizes that alpha at 0.5 and the target is
/// the untouched background.
pub fn paste(background: &Image, sprite: &PersonSprite, placement: &Placement) -> Result<CompositeTriplet> {
    if !placement.scale.is_finite() || placement.scale <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "placement scale must be positive and finite, got {}",
            placement.scale
        )));
    }
    let (pw, ph) = sprite.dimensions();
    let (sw, sh) = scaled_extent(pw, ph, placement.scale);
    let x0 = placement.anchor_x - (sw / 2) as i64;
    let y0 = placement.anchor_y - sh as i64 + 1;

    let (bw, bh) = background.dimensions();
    let cx0 = x0.max(0);
    let cy0 = y0.max(0);
    let cx1 = (x0 + sw as i64 - 1).min(bw as i64 - 1);
    let cy1 = (y0 + sh as i64 - 1).min(bh as i64 - 1);
    if cx0 > cx1 || cy0 > cy1 {
        return Err(Error::NoOverlap);
    }

    let scaled_silhouette = Mask::from_fn(sw, sh, |ix, iy| {
        let sx = source_index(ix, sw, pw, placement.flip);
        let sy = source_index(iy, sh, ph, false);
        sprite.is_silhouette(sx, sy)
    });
    let alpha = feather_alpha(&scaled_silhouette, sprite.feather_radius());

    let mut source = background.clone();
    let mut mask = Mask::filled(bw, bh, false)?;
    for py in cy0..=cy1 {
        for px in cx0..=cx1 {
            let ix = (px - x0) as u32;
            let iy = (py - y0) as u32;
            let a = alpha.get(ix, iy);
            if a <= 0.0 {
                continue;
            }
            let sx = source_index(ix, sw, pw, placement.flip);
            let sy = source_index(iy, sh, ph, false);
            let fg = sprite.patch().get(sx, sy);
            let bg = background.get(px as u32, py as u32);
            source.set(
                px as u32,
                py as u32,
                [
                    blend_channel(bg[0], fg[0], 1.0 - a),
                    blend_channel(bg[1], fg[1], 1.0 - a),
                    blend_channel(bg[2], fg[2], 1.0 - a),
                ],
            );
            if a >= 0.5 {
                mask.set(px as u32, py as u32, true);
            }
        }
    }
    if mask.is_empty() {
        log::warn!(
            "paste of sprite '{}' produced an empty mask (transparent or fully clipped)",
            sprite.origin_id()
        );
    }

    let meta = TripletMeta {
        sprite_id: sprite.origin_id().to_string(),
        placement: *placement,
        ..TripletMeta::default()
    };
    CompositeTriplet::new(source, background.clone(), mask, meta)
}

/// Samples an anchor uniformly among the set bits of the placement
/// region, mirrors the sprite on a coin flip, and takes the scale from
/// the ground-line rule. Deterministic under the seed. The anchor lies
/// inside the frame and is always covered by the scaled footprint, so the
/// resulting placement overlaps the background for any sprite extent.
pub fn sample_placement(
    region: &Mask,
    sprite: &PersonSprite,
    rng_seed: u64,
    rule: &GroundLineRule,
) -> Result<Placement> {
    if region.is_empty() {
        return Err(Error::EmptySelection("placement region has no set bits".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let pick = rng.random_range(0..region.count_ones());
    let (x, y) = region.iter_set().nth(pick).expect("index is below the set-bit count");
    let flip = rng.random::<bool>();
    let scale = rule.scale_at(y as i64);
    let (pw, ph) = sprite.dimensions();
    let (sw, sh) = scaled_extent(pw, ph, scale);
    log::trace!("sampled anchor ({x},{y}), scale {scale:.3}, footprint {sw}x{sh}, flip {flip}");
    Ok(Placement {
        anchor_x: x as i64,
        anchor_y: y as i64,
        scale,
        flip,
    })
}

/// A background image plus the region mask its placements are sampled
/// from.
#[derive(Debug, Clone)]
pub struct BackgroundAsset {
    pub id: String,
    pub image: Image,
    pub region: Mask,
}

fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let name = match path.file_name().and_then(|n| n.to_str()) {
            Some(n) => n,
            None => continue,
        };
        if name.ends_with(".png") && !name.ends_with(".mask.png") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string()
}

/// Loads every background PNG in `dir` (sorted by file name). A region
/// mask is taken from `regions_dir/<stem>.png` when present; otherwise
/// the lower band of the frame below `region_top_fraction` is used.
pub fn load_backgrounds(
    dir: impl AsRef<Path>,
    regions_dir: Option<&Path>,
    region_top_fraction: f32,
) -> Result<Vec<BackgroundAsset>> {
    let mut assets = Vec::new();
    for path in png_files(dir.as_ref())? {
        let image = io::load_image(&path)?;
        let id = file_stem(&path);
        let region = match regions_dir.map(|d| d.join(format!("{id}.png"))) {
            Some(region_path) if region_path.exists() => {
                let region = io::load_mask(&region_path, false)?;
                region.ensure_same_size_as(&image).map_err(|_| {
                    Error::InvalidArgument(format!(
                        "region {} does not match background {}",
                        region_path.display(),
                        path.display()
                    ))
                })?;
                region
            }
            _ => synthetic::lower_region(image.width(), image.height(), region_top_fraction),
        };
        assets.push(BackgroundAsset { id, image, region });
    }
    Ok(assets)
}

/// Loads donor/mask pairs `<stem>.png` + `<stem>.mask.png` from `dir`
/// (sorted by stem) and extracts each sprite with the given feather.
pub fn load_sprites(dir: impl AsRef<Path>, feather_radius: u32) -> Result<Vec<PersonSprite>> {
    let mut sprites = Vec::new();
    for path in png_files(dir.as_ref())? {
        let stem = file_stem(&path);
        let mask_path = path.with_file_name(format!("{stem}.mask.png"));
        if !mask_path.exists() {
            return Err(Error::InvalidArgument(format!(
                "sprite donor {} has no mask file {}",
                path.display(),
                mask_path.display()
            )));
        }
        let donor = io::load_image(&path)?;
        let donor_mask = io::load_mask(&mask_path, false)?;
        donor_mask.ensure_same_size_as(&donor).map_err(|_| {
            Error::InvalidArgument(format!(
                "mask {} does not match donor {}",
                mask_path.display(),
                path.display()
            ))
        })?;
        sprites.push(extract_sprite(&donor, &donor_mask, feather_radius)?.with_origin_id(stem));
    }
    Ok(sprites)
}

/// Synthesizes one triplet of a batch. Item `index` draws from its own
/// RNG stream seeded `seed + index`, so batches are reproducible and
/// order-independent under parallel generation. Placements whose mask
/// comes out empty (fully transparent or clipped pastes) are resampled up
/// to 100 times before giving up.
pub(crate) fn mosaic_item(
    backgrounds: &[BackgroundAsset],
    sprites: &[PersonSprite],
    config: &MosaicConfig,
    index: usize,
) -> Result<CompositeTriplet> {
    let item_seed = config.seed.wrapping_add(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(item_seed);
    let background = &backgrounds[rng.random_range(0..backgrounds.len())];
    let sprite = &sprites[rng.random_range(0..sprites.len())];
    let rule = config.scale.rule_for_height(background.image.height())?;
    for _ in 0..100 {
        let placement_seed: u64 = rng.random();
        let placement = sample_placement(&background.region, sprite, placement_seed, &rule)?;
        let mut triplet = paste(&background.image, sprite, &placement)?;
        if !triplet.mask().is_empty() {
            triplet.meta.background_id = background.id.clone();
            triplet.meta.seed = Some(item_seed);
            return Ok(triplet);
        }
    }
    Err(Error::EmptySelection(format!(
        "item {index}: all 100 sampled placements produced an empty mask"
    )))
}

/// Synthesizes `count` triplets from randomly combined background/sprite
/// pairs. Fully deterministic under `config.seed`; items are generated in
/// parallel.
pub fn synth_mosaic_batch(
    backgrounds: &[BackgroundAsset],
    sprites: &[PersonSprite],
    count: usize,
    config: &MosaicConfig,
) -> Result<Vec<CompositeTriplet>> {
    if backgrounds.is_empty() || sprites.is_empty() {
        return Err(Error::InvalidArgument(
            "mosaic synthesis needs at least one background and one sprite".into(),
        ));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("mosaic batch count must be at least 1".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|i| mosaic_item(backgrounds, sprites, config, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opaque_sprite(w: u32, h: u32, rgb: [f32; 3]) -> PersonSprite {
        PersonSprite::new(
            Image::filled(w, h, rgb).unwrap(),
            AlphaMap::filled(w, h, 1.0).unwrap(),
            "test".into(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn extract_full_frame_mask_keeps_whole_donor() {
        let donor = Image::from_fn(6, 4, |x, y| [x as f32 / 6.0, y as f32 / 4.0, 0.5]);
        let mask = Mask::filled(6, 4, true).unwrap();
        let sprite = extract_sprite(&donor, &mask, 0).unwrap();
        assert_eq!(sprite.patch(), &donor);
        assert!(sprite.alpha().values().iter().all(|&a| a == 1.0));
    }

    #[test]
    fn extract_single_pixel_gives_1x1_patch() {
        let donor = Image::filled(5, 5, [0.3; 3]).unwrap();
        let mask = Mask::from_fn(5, 5, |x, y| x == 2 && y == 3);
        let sprite = extract_sprite(&donor, &mask, 0).unwrap();
        assert_eq!(sprite.dimensions(), (1, 1));
    }

    #[test]
    fn extract_empty_mask_is_an_error() {
        let donor = Image::filled(5, 5, [0.3; 3]).unwrap();
        let mask = Mask::filled(5, 5, false).unwrap();
        assert!(extract_sprite(&donor, &mask, 1).is_err());
    }

    /// Unwindowed distance transform used as an independent check of the
    /// windowed feather computation.
    fn feather_oracle(silhouette: &Mask, radius: u32) -> Vec<f32> {
        let (w, h) = silhouette.dimensions();
        let set: Vec<(i64, i64)> = silhouette.iter_set().map(|(x, y)| (x as i64, y as i64)).collect();
        let mut out = Vec::new();
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                if silhouette.get(x as u32, y as u32) {
                    out.push(1.0);
                    continue;
                }
                let d2 = set
                    .iter()
                    .map(|&(sx, sy)| (sx - x) * (sx - x) + (sy - y) * (sy - y))
                    .min()
                    .unwrap();
                let a = 1.0 - (d2 as f64).sqrt() / radius as f64;
                out.push(a.max(0.0) as f32);
            }
        }
        out
    }

    #[test]
    fn feather_ramp_matches_distance_transform_oracle() {
        let silhouette = Mask::from_fn(20, 20, |x, y| (5..15).contains(&x) && (5..15).contains(&y));
        let alpha = feather_alpha(&silhouette, 2);
        let oracle = feather_oracle(&silhouette, 2);
        for (got, want) in alpha.values().iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-6, "got {got}, want {want}");
        }
        // Spot values of the linear ramp: distance 1 and the diagonal
        // sqrt(2) off the square's corner.
        assert_eq!(alpha.get(4, 8), 0.5);
        let diagonal = alpha.get(4, 4);
        assert!((diagonal - (1.0 - 0.5f32 * std::f32::consts::SQRT_2)).abs() < 1e-6);
        assert_eq!(alpha.get(3, 8), 0.0);
    }

    #[test]
    fn paste_opaque_sprite_sets_exact_footprint() {
        let background = Image::filled(10, 10, [0.1; 3]).unwrap();
        let sprite = opaque_sprite(2, 2, [0.9; 3]);
        let placement = Placement {
            anchor_x: 5,
            anchor_y: 5,
            scale: 1.0,
            flip: false,
        };
        let triplet = paste(&background, &sprite, &placement).unwrap();
        assert_eq!(triplet.mask().count_ones(), 4);
        assert_eq!(triplet.target(), &background);
        let mut diffs = 0;
        for y in 0..10 {
            for x in 0..10 {
                if triplet.source().get(x, y) != background.get(x, y) {
                    diffs += 1;
                    assert!(triplet.mask().get(x, y));
                    assert_eq!(triplet.source().get(x, y), [0.9; 3]);
                }
            }
        }
        assert_eq!(diffs, 4);
        // Bottom-center anchor: the 2x2 block ends at row 5, centered on
        // column 5 with the half-width rounding left.
        assert!(triplet.mask().get(4, 4) && triplet.mask().get(5, 5));
    }

    #[test]
    fn paste_transparent_sprite_leaves_background() {
        let background = Image::filled(8, 8, [0.4; 3]).unwrap();
        let sprite = PersonSprite::new(
            Image::filled(3, 3, [0.9; 3]).unwrap(),
            AlphaMap::filled(3, 3, 0.0).unwrap(),
            "ghost".into(),
            0,
        )
        .unwrap();
        let placement = Placement {
            anchor_x: 4,
            anchor_y: 4,
            scale: 1.0,
            flip: false,
        };
        let triplet = paste(&background, &sprite, &placement).unwrap();
        assert_eq!(triplet.source(), &background);
        assert!(triplet.mask().is_empty());
    }

    #[test]
    fn paste_scaling_doubles_the_footprint() {
        assert_eq!(scaled_extent(10, 20, 2.0), (20, 40));
        assert_eq!(scaled_extent(10, 20, 0.5), (5, 10));
        assert_eq!(scaled_extent(3, 3, 0.01), (1, 1));

        let background = Image::filled(60, 60, [0.2; 3]).unwrap();
        let sprite = opaque_sprite(10, 20, [0.8; 3]);
        let placement = Placement {
            anchor_x: 30,
            anchor_y: 50,
            scale: 2.0,
            flip: false,
        };
        let triplet = paste(&background, &sprite, &placement).unwrap();
        assert_eq!(triplet.mask().count_ones(), 20 * 40);
        let (x0, y0, x1, y1) = triplet.mask().bounding_box().unwrap();
        assert_eq!((x1 - x0 + 1, y1 - y0 + 1), (20, 40));
        assert_eq!(y1, 50);
    }

    #[test]
    fn paste_rejects_bad_placements() {
        let background = Image::filled(8, 8, [0.2; 3]).unwrap();
        let sprite = opaque_sprite(2, 2, [0.8; 3]);
        let zero_scale = Placement {
            anchor_x: 4,
            anchor_y: 4,
            scale: 0.0,
            flip: false,
        };
        assert!(matches!(
            paste(&background, &sprite, &zero_scale),
            Err(Error::InvalidArgument(_))
        ));
        let off_screen = Placement {
            anchor_x: -50,
            anchor_y: -50,
            scale: 1.0,
            flip: false,
        };
        assert!(matches!(paste(&background, &sprite, &off_screen), Err(Error::NoOverlap)));
    }

    #[test]
    fn paste_flip_mirrors_horizontally() {
        let mut patch = Image::filled(3, 1, [0.0; 3]).unwrap();
        patch.set(0, 0, [1.0, 0.0, 0.0]);
        patch.set(2, 0, [0.0, 0.0, 1.0]);
        let sprite = PersonSprite::new(patch, AlphaMap::filled(3, 1, 1.0).unwrap(), "s".into(), 0).unwrap();
        let background = Image::filled(7, 3, [0.5; 3]).unwrap();
        let placement = Placement {
            anchor_x: 3,
            anchor_y: 1,
            scale: 1.0,
            flip: true,
        };
        let triplet = paste(&background, &sprite, &placement).unwrap();
        assert_eq!(triplet.source().get(2, 1), [0.0, 0.0, 1.0]);
        assert_eq!(triplet.source().get(4, 1), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn sampled_placement_is_deterministic_and_in_region() {
        let region = Mask::from_fn(9, 9, |x, y| x == 7 && y == 8);
        let sprite = opaque_sprite(2, 3, [0.7; 3]);
        let rule = GroundLineRule::new(1.0, 8.0, 0.05).unwrap();
        let a = sample_placement(&region, &sprite, 42, &rule).unwrap();
        let b = sample_placement(&region, &sprite, 42, &rule).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.anchor_x, a.anchor_y), (7, 8));
        assert_eq!(a.scale, 1.0);
    }

    #[test]
    fn sampled_anchors_are_uniform_over_the_region() {
        let region = Mask::from_fn(4, 1, |x, _| x == 1 || x == 2);
        let sprite = opaque_sprite(1, 1, [0.7; 3]);
        let rule = GroundLineRule::new(1.0, 1.0, 0.05).unwrap();
        let mut first = 0u32;
        for seed in 0..10_000u64 {
            let p = sample_placement(&region, &sprite, seed, &rule).unwrap();
            if p.anchor_x == 1 {
                first += 1;
            }
        }
        // Two equally likely outcomes over 10k draws: expect 5000 with a
        // generous +-300 binomial margin (6 sigma).
        assert!((4700..=5300).contains(&first), "count {first}");
    }

    #[test]
    fn empty_region_is_an_error() {
        let region = Mask::filled(4, 4, false).unwrap();
        let sprite = opaque_sprite(1, 1, [0.7; 3]);
        let rule = GroundLineRule::new(1.0, 1.0, 0.05).unwrap();
        assert!(sample_placement(&region, &sprite, 1, &rule).is_err());
    }

    #[test]
    fn batch_is_deterministic_and_local() {
        let backgrounds = vec![BackgroundAsset {
            id: "bg".into(),
            image: synthetic::gradient_background(48, 48, 5),
            region: synthetic::lower_region(48, 48, 0.5),
        }];
        let (donor, donor_mask) = synthetic::person_donor(24, 32, 7);
        let sprites = vec![extract_sprite(&donor, &donor_mask, 2).unwrap().with_origin_id("p0")];
        let config = MosaicConfig::default();

        let a = synth_mosaic_batch(&backgrounds, &sprites, 4, &config).unwrap();
        let b = synth_mosaic_batch(&backgrounds, &sprites, 4, &config).unwrap();
        assert_eq!(a, b);
        for triplet in &a {
            assert_eq!(triplet.target(), &backgrounds[0].image);
            assert!(!triplet.mask().is_empty());
            let halo = triplet.mask().dilate(2);
            for y in 0..48 {
                for x in 0..48 {
                    if triplet.source().get(x, y) != triplet.target().get(x, y) {
                        assert!(halo.get(x, y), "difference outside the feather halo at ({x},{y})");
                    }
                }
            }
        }
    }

    #[test]
    fn batch_rejects_degenerate_requests() {
        let backgrounds = vec![BackgroundAsset {
            id: "bg".into(),
            image: synthetic::gradient_background(16, 16, 1),
            region: synthetic::lower_region(16, 16, 0.5),
        }];
        let sprites = vec![opaque_sprite(2, 2, [0.9; 3])];
        let config = MosaicConfig::default();
        assert!(synth_mosaic_batch(&backgrounds, &sprites, 0, &config).is_err());
        assert!(synth_mosaic_batch(&[], &sprites, 1, &config).is_err());
        assert!(synth_mosaic_batch(&backgrounds, &[], 1, &config).is_err());
    }
}
