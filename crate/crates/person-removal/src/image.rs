//! Dense pixel containers: RGB images and per-pixel alpha maps.
//!
//! Channel values live in `[0, 1]` for the whole pipeline; quantization to
//! 8 bits happens only at file boundaries (see [`crate::io`]). All containers
//! are plain values: cheap to clone, safe to share across threads, and never
//! mutated by the operations that consume them.

use crate::error::{Error, Result};

/// RGB raster with row-major interleaved channels, each in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl Image {
    /// Wraps interleaved RGB data. Fails when the length does not match
    /// `3 * width * height`, a dimension is zero, or a channel leaves `[0, 1]`.
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = 3 * width as usize * height as usize;
        if data.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "expected {expected} channel values for {width}x{height}, got {}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "channel value {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Constant-color image.
    pub fn filled(width: u32, height: u32, rgb: [f32; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(3 * width as usize * height as usize);
        for _ in 0..(width as usize * height as usize) {
            data.extend_from_slice(&rgb);
        }
        Self::new(width, height, data)
    }

    /// Builds an image by evaluating `f` at every `(x, y)`. Out-of-range
    /// channel values are clamped into `[0, 1]`.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [f32; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(3 * width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                data.extend(px.iter().map(|v| v.clamp(0.0, 1.0)));
            }
        }
        Self {
            width,
            height,
            data,
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

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        3 * (y as usize * self.width as usize + x as usize)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [f32; 3] {
        let i = self.index(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Stores a pixel, clamping each channel into `[0, 1]`.
    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [f32; 3]) {
        let i = self.index(x, y);
        self.data[i] = rgb[0].clamp(0.0, 1.0);
        self.data[i + 1] = rgb[1].clamp(0.0, 1.0);
        self.data[i + 2] = rgb[2].clamp(0.0, 1.0);
    }

    /// Flat interleaved channel data, row-major.
    pub fn channels(&self) -> &[f32] {
        &self.data
    }

    /// Pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = [f32; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    /// ITU-R 601 luma on the 0-255 scale, row-major.
    pub fn luma255(&self) -> Vec<f64> {
        self.pixels()
            .map(|[r, g, b]| 255.0 * (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64))
            .collect()
    }

    pub(crate) fn ensure_same_size_as(&self, other: &Image) -> Result<()> {
        ensure_same_size(self.dimensions(), other.dimensions())
    }
}

/// Per-pixel blending weights in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaMap {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl AlphaMap {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "alpha map dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "expected {expected} alpha values for {width}x{height}, got {}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha value {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, alpha: f32) -> Result<Self> {
        Self::new(
            width,
            height,
            vec![alpha; width as usize * height as usize],
        )
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
    pub fn get(&self, x: u32, y: u32) -> f32 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, alpha: f32) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y as usize * self.width as usize + x as usize] = alpha.clamp(0.0, 1.0);
    }

    pub fn values(&self) -> &[f32] {
        &self.data
    }
}

pub(crate) fn ensure_same_size(left: (u32, u32), right: (u32, u32)) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch {
            left_width: left.0,
            left_height: left.1,
            right_width: right.0,
            right_height: right.1,
        });
    }
    Ok(())
}
