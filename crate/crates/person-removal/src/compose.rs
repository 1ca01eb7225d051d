//! The composition algebra every pipeline stage is built from.
//!
//! Removal is treated as a local degradation that is blended away: a source
//! image is a convex per-pixel mix of the clean target and a degradation
//! layer, and the removal pipelines recombine restorer output with the
//! source through the same binary-mask selection. Keeping masks strictly
//! binary makes the selection semantics exact, so "untouched outside the
//! mask" is a bit-for-bit guarantee rather than an approximation.

use crate::error::Result;
use crate::image::{AlphaMap, Image};
use crate::mask::Mask;

#[inline]
pub(crate) fn blend_channel(target: f32, layer: f32, alpha: f32) -> f32 {
    (alpha * target + (1.0 - alpha) * layer).clamp(0.0, 1.0)
}

/// Per-pixel convex blend `alpha * target + (1 - alpha) * layer`.
///
/// `alpha == 1` returns `target` and `alpha == 0` returns `layer`, both
/// bit-exact.
pub fn alpha_blend(target: &Image, layer: &Image, alpha: &AlphaMap) -> Result<Image> {
    target.ensure_same_size_as(layer)?;
    crate::image::ensure_same_size(alpha.dimensions(), target.dimensions())?;
    let (w, h) = target.dimensions();
    let mut out = target.clone();
    for y in 0..h {
        for x in 0..w {
            let a = alpha.get(x, y);
            let t = target.get(x, y);
            let l = layer.get(x, y);
            out.set(
                x,
                y,
                [
                    blend_channel(t[0], l[0], a),
                    blend_channel(t[1], l[1], a),
                    blend_channel(t[2], l[2], a),
                ],
            );
        }
    }
    Ok(out)
}

/// Binary-mask combiner: takes `prediction` where the mask is set and
/// `source` elsewhere, bit-exact on both sides.
pub fn compose_masked(source: &Image, prediction: &Image, mask: &Mask) -> Result<Image> {
    source.ensure_same_size_as(prediction)?;
    mask.ensure_same_size_as(source)?;
    let (w, h) = source.dimensions();
    let mut out = source.clone();
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                out.set(x, y, prediction.get(x, y));
            }
        }
    }
    Ok(out)
}

/// Punches the masked region out of `source`, filling it with the hole
/// value 0 (black). Unmasked pixels pass through untouched.
pub fn subtract_person(source: &Image, mask: &Mask) -> Result<Image> {
    mask.ensure_same_size_as(source)?;
    let (w, h) = source.dimensions();
    let mut out = source.clone();
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                out.set(x, y, [0.0, 0.0, 0.0]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_image(w: u32, h: u32, salt: f32) -> Image {
        Image::from_fn(w, h, |x, y| {
            [
                ((x as f32 + salt) / (w as f32 + salt)).fract(),
                ((y as f32 * 0.7 + salt) / h as f32).fract(),
                ((x + y) as f32 / (w + h) as f32 + salt).fract(),
            ]
        })
    }

    #[test]
    fn blend_alpha_one_returns_target_bit_exact() {
        let t = sample_image(7, 5, 0.13);
        let l = sample_image(7, 5, 0.71);
        let a = AlphaMap::filled(7, 5, 1.0).unwrap();
        assert_eq!(alpha_blend(&t, &l, &a).unwrap(), t);
    }

    #[test]
    fn blend_alpha_zero_returns_layer_bit_exact() {
        let t = sample_image(7, 5, 0.13);
        let l = sample_image(7, 5, 0.71);
        let a = AlphaMap::filled(7, 5, 0.0).unwrap();
        assert_eq!(alpha_blend(&t, &l, &a).unwrap(), l);
    }

    #[test]
    fn blend_midpoint_arithmetic() {
        let t = Image::filled(2, 2, [0.2; 3]).unwrap();
        let l = Image::filled(2, 2, [0.6; 3]).unwrap();
        let a = AlphaMap::filled(2, 2, 0.5).unwrap();
        let out = alpha_blend(&t, &l, &a).unwrap();
        for px in out.pixels() {
            for c in px {
                assert!((c - 0.4).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn blend_rejects_dimension_mismatch() {
        let t = Image::filled(2, 2, [0.2; 3]).unwrap();
        let l = Image::filled(3, 2, [0.6; 3]).unwrap();
        let a = AlphaMap::filled(2, 2, 0.5).unwrap();
        assert!(alpha_blend(&t, &l, &a).is_err());
    }

    #[test]
    fn compose_full_and_empty_masks() {
        let s = sample_image(6, 4, 0.31);
        let p = sample_image(6, 4, 0.87);
        let empty = Mask::filled(6, 4, false).unwrap();
        let full = Mask::filled(6, 4, true).unwrap();
        assert_eq!(compose_masked(&s, &p, &empty).unwrap(), s);
        assert_eq!(compose_masked(&s, &p, &full).unwrap(), p);
    }

    #[test]
    fn compose_selects_per_pixel() {
        let s = Image::new(2, 1, vec![0.1, 0.1, 0.1, 0.2, 0.2, 0.2]).unwrap();
        let p = Image::new(2, 1, vec![0.3, 0.3, 0.3, 0.4, 0.4, 0.4]).unwrap();
        let m = Mask::new(2, 1, vec![false, true]).unwrap();
        let out = compose_masked(&s, &p, &m).unwrap();
        assert_eq!(out.get(0, 0), [0.1; 3]);
        assert_eq!(out.get(1, 0), [0.4; 3]);
    }

    #[test]
    fn subtract_zeroes_only_masked_pixels() {
        let s = sample_image(5, 5, 0.41);
        let empty = Mask::filled(5, 5, false).unwrap();
        assert_eq!(subtract_person(&s, &empty).unwrap(), s);

        let full = Mask::filled(5, 5, true).unwrap();
        let blank = subtract_person(&s, &full).unwrap();
        assert!(blank.pixels().all(|px| px == [0.0; 3]));

        let single = Mask::from_fn(5, 5, |x, y| x == 2 && y == 3);
        let out = subtract_person(&s, &single).unwrap();
        for y in 0..5 {
            for x in 0..5 {
                if x == 2 && y == 3 {
                    assert_eq!(out.get(x, y), [0.0; 3]);
                } else {
                    assert_eq!(out.get(x, y), s.get(x, y));
                }
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::collection::vec;
        use proptest::prelude::*;

        fn scene() -> impl Strategy<Value = (Image, Image, Mask, AlphaMap)> {
            (1u32..=8, 1u32..=8).prop_flat_map(|(w, h)| {
                let n = (w * h) as usize;
                (
                    vec(0.0f32..=1.0, 3 * n),
                    vec(0.0f32..=1.0, 3 * n),
                    vec(any::<bool>(), n),
                    vec(0.0f32..=1.0, n),
                )
                    .prop_map(move |(s, p, bits, alpha)| {
                        (
                            Image::new(w, h, s).unwrap(),
                            Image::new(w, h, p).unwrap(),
                            Mask::new(w, h, bits).unwrap(),
                            AlphaMap::new(w, h, alpha).unwrap(),
                        )
                    })
            })
        }

        proptest! {
            #[test]
            fn compose_is_a_bit_exact_selection((s, p, m, _a) in scene()) {
                let out = compose_masked(&s, &p, &m).unwrap();
                for y in 0..s.height() {
                    for x in 0..s.width() {
                        let want = if m.get(x, y) { p.get(x, y) } else { s.get(x, y) };
                        prop_assert_eq!(out.get(x, y), want);
                    }
                }
            }

            #[test]
            fn subtraction_round_trips_through_composition((s, _p, m, _a) in scene()) {
                let punched = subtract_person(&s, &m).unwrap();
                for (x, y) in m.iter_set() {
                    prop_assert_eq!(punched.get(x, y), [0.0; 3]);
                }
                prop_assert_eq!(compose_masked(&punched, &s, &m).unwrap(), s.clone());
            }

            #[test]
            fn blend_stays_inside_the_channel_envelope((s, p, _m, a) in scene()) {
                let out = alpha_blend(&s, &p, &a).unwrap();
                for y in 0..s.height() {
                    for x in 0..s.width() {
                        for c in 0..3 {
                            let lo = s.get(x, y)[c].min(p.get(x, y)[c]);
                            let hi = s.get(x, y)[c].max(p.get(x, y)[c]);
                            let v = out.get(x, y)[c];
                            prop_assert!(v >= lo - 1e-6 && v <= hi + 1e-6);
                        }
                    }
                }
            }

            #[test]
            fn binary_alpha_agrees_with_masked_selection((s, p, m, _a) in scene()) {
                let binary = AlphaMap::new(
                    s.width(),
                    s.height(),
                    m.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
                ).unwrap();
                // Alpha 1 keeps the first argument, so blending with the
                // mask as alpha selects `s` inside and `p` outside.
                let blended = alpha_blend(&s, &p, &binary).unwrap();
                let selected = compose_masked(&p, &s, &m).unwrap();
                prop_assert_eq!(blended, selected);
            }
        }
    }
}
