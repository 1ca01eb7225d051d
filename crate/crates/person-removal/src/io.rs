//! PNG input and output.
//!
//! Pixels live in `[0,1]` inside the library; files are 8-bit PNGs. Loading
//! maps `v / 255` and saving maps `round(v * 255)`, so a load/save round
//! trip is lossless and composition identities survive file boundaries.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::mask::Mask;

/// Loads an 8-bit RGB PNG as an [`Image`], mapping channel values to
/// `v / 255`. Other color layouts are converted to RGB first.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let decoded = image::open(path).map_err(|e| Error::codec(path, e))?;
    let rgb = decoded.to_rgb8();
    let (width, height) = rgb.dimensions();
    let data = rgb.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
    Image::new(width, height, data)
}

/// Saves an [`Image`] as an 8-bit RGB PNG, quantizing each channel to
/// `round(v * 255)`.
pub fn save_image(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = image
        .channels()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect();
    image::save_buffer_with_format(
        path,
        &bytes,
        image.width(),
        image.height(),
        image::ExtendedColorType::Rgb8,
        image::ImageFormat::Png,
    )
    .map_err(|e| Error::codec(path, e))
}

/// Loads a single-channel PNG as a [`Mask`]. Any nonzero sample becomes a
/// set bit; with `strict` set, samples other than 0 and 255 are rejected.
pub fn load_mask(path: impl AsRef<Path>, strict: bool) -> Result<Mask> {
    let path = path.as_ref();
    let decoded = image::open(path).map_err(|e| Error::codec(path, e))?;
    let luma = decoded.to_luma8();
    let (width, height) = luma.dimensions();
    if strict {
        if let Some(&v) = luma.as_raw().iter().find(|&&v| v != 0 && v != 255) {
            return Err(Error::InvalidArgument(format!(
                "mask {} contains sample {v}; strict masks allow only 0 and 255",
                path.display()
            )));
        }
    }
    let bits = luma.as_raw().iter().map(|&v| v != 0).collect();
    Mask::new(width, height, bits)
}

/// Saves a [`Mask`] as a single-channel PNG with bits mapped to 0 and 255.
pub fn save_mask(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    let bytes: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    save_luma(path.as_ref(), mask.width(), mask.height(), &bytes)
}

/// Saves one quantized gray channel as a PNG; shared by mask, alpha, and
/// depth writers.
pub(crate) fn save_luma(path: &Path, width: u32, height: u32, bytes: &[u8]) -> Result<()> {
    image::save_buffer_with_format(
        path,
        bytes,
        width,
        height,
        image::ExtendedColorType::L8,
        image::ImageFormat::Png,
    )
    .map_err(|e| Error::codec(path, e))
}

/// Saves real-valued gray samples in `[0,1]` as an 8-bit PNG.
pub(crate) fn save_luma_real(path: &Path, width: u32, height: u32, values: &[f32]) -> Result<()> {
    let bytes: Vec<u8> = values
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    save_luma(path, width, height, &bytes)
}

/// Saves a [`DepthMap`](crate::render::DepthMap) as an 8-bit PNG with
/// plane values quantized to `round(v * 255)`.
pub fn save_depth(path: impl AsRef<Path>, depth: &crate::render::DepthMap) -> Result<()> {
    save_luma_real(path.as_ref(), depth.width(), depth.height(), depth.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Image;

    #[test]
    fn image_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let original = Image::from_fn(9, 7, |x, y| {
            [
                (x % 256) as f32 / 255.0,
                (y % 256) as f32 / 255.0,
                ((x * y) % 256) as f32 / 255.0,
            ]
        });
        save_image(&path, &original).unwrap();
        assert_eq!(load_image(&path).unwrap(), original);
    }

    #[test]
    fn mask_round_trip_preserves_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.png");
        let mask = Mask::from_fn(8, 6, |x, y| (x + y) % 3 == 0);
        save_mask(&path, &mask).unwrap();
        assert_eq!(load_mask(&path, true).unwrap(), mask);
    }

    #[test]
    fn strict_mask_rejects_gray_samples() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gray.png");
        save_luma(&path, 2, 2, &[0, 255, 97, 0]).unwrap();
        assert!(load_mask(&path, true).is_err());
        let lenient = load_mask(&path, false).unwrap();
        assert_eq!(lenient.bits(), &[false, true, true, false]);
    }

    #[test]
    fn missing_file_reports_path() {
        let err = load_image("/nonexistent/deep/img.png").unwrap_err();
        assert!(err.to_string().contains("img.png"));
    }
}
