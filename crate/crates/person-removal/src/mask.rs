//! Binary person masks and morphological dilation.

use crate::error::{Error, Result};

/// Row-major binary grid; a set bit marks the person region.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "expected {expected} bits for {width}x{height}, got {}",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: u32, height: u32, value: bool) -> Result<Self> {
        Self::new(
            width,
            height,
            vec![value; width as usize * height as usize],
        )
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// Set-bit coordinates in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| ((i as u32) % w, (i as u32) / w))
    }

    /// Inclusive `(x0, y0, x1, y1)` bounds of the set bits, or `None` when empty.
    pub fn bounding_box(&self) -> Option<(u32, u32, u32, u32)> {
        let mut bounds: Option<(u32, u32, u32, u32)> = None;
        for (x, y) in self.iter_set() {
            bounds = Some(match bounds {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        bounds
    }

    /// Grows the set region by `radius` in Chebyshev distance: an output bit is
    /// set iff some input bit lies within the `(2r+1)`-square around it.
    /// Separable into a horizontal and a vertical 1-D pass.
    pub fn dilate(&self, radius: u32) -> Mask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = (self.width as usize, self.height as usize);
        let r = radius as usize;
        let mut horiz = vec![false; w * h];
        for y in 0..h {
            let row = &self.bits[y * w..(y + 1) * w];
            let out = &mut horiz[y * w..(y + 1) * w];
            for x in 0..w {
                let lo = x.saturating_sub(r);
                let hi = (x + r).min(w - 1);
                out[x] = row[lo..=hi].iter().any(|b| *b);
            }
        }
        let mut bits = vec![false; w * h];
        for x in 0..w {
            for y in 0..h {
                let lo = y.saturating_sub(r);
                let hi = (y + r).min(h - 1);
                bits[y * w + x] = (lo..=hi).any(|yy| horiz[yy * w + x]);
            }
        }
        Mask {
            width: self.width,
            height: self.height,
            bits,
        }
    }

    pub(crate) fn ensure_same_size_as(&self, other: &crate::image::Image) -> Result<()> {
        crate::image::ensure_same_size(self.dimensions(), other.dimensions())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilate_radius_zero_is_identity() {
        let m = Mask::from_fn(5, 5, |x, y| x == 2 && y == 3);
        assert_eq!(m.dilate(0), m);
    }

    #[test]
    fn dilate_empty_stays_empty() {
        let m = Mask::filled(6, 4, false).unwrap();
        assert!(m.dilate(3).is_empty());
    }

    #[test]
    fn dilate_center_bit_gives_square_block() {
        let m = Mask::from_fn(5, 5, |x, y| x == 2 && y == 2);
        let d = m.dilate(1);
        for y in 0..5 {
            for x in 0..5 {
                let expect = (1..=3).contains(&x) && (1..=3).contains(&y);
                assert_eq!(d.get(x, y), expect, "bit at ({x},{y})");
            }
        }
        assert_eq!(d.count_ones(), 9);
    }

    #[test]
    fn dilate_clips_at_borders() {
        let m = Mask::from_fn(4, 4, |x, y| x == 0 && y == 0);
        let d = m.dilate(2);
        assert_eq!(d.count_ones(), 9);
        assert!(d.get(2, 2));
        assert!(!d.get(3, 0));
    }

    #[test]
    fn bounding_box_tracks_extremes() {
        let m = Mask::from_fn(8, 6, |x, y| (x == 2 && y == 1) || (x == 5 && y == 4));
        assert_eq!(m.bounding_box(), Some((2, 1, 5, 4)));
        assert_eq!(Mask::filled(3, 3, false).unwrap().bounding_box(), None);
    }

    #[test]
    fn iter_set_is_row_major() {
        let m = Mask::from_fn(3, 2, |x, y| (x + y) % 2 == 1);
        let coords: Vec<_> = m.iter_set().collect();
        assert_eq!(coords, vec![(1, 0), (0, 1), (2, 1)]);
    }
}
