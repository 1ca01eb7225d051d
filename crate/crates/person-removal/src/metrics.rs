//! Image-quality metrics and evaluation reports.
//!
//! All metrics treat images as 8-bit content on a 255 scale regardless
//! of the in-memory normalized representation, and accumulate in f64.
//! The masked RMSE variant scores only the pixels a removal run was
//! allowed to change, which keeps small edits from drowning in the
//! unchanged background.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::mask::Mask;

/// Squared-error accumulation shared by the masked and unmasked RMSE so
/// the two are bit-identical on a full mask.
fn squared_error_sum(a: &Image, b: &Image, pixels: impl Iterator<Item = usize>) -> (f64, u64) {
    let left = a.channels();
    let right = b.channels();
    let mut sum = 0.0f64;
    let mut samples = 0u64;
    for p in pixels {
        for c in 0..3 {
            let d = (left[3 * p + c] as f64 - right[3 * p + c] as f64) * 255.0;
            sum += d * d;
        }
        samples += 3;
    }
    (sum, samples)
}

/// Root-mean-square error on the 255 scale.
pub fn rmse(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_size_as(b)?;
    let (sum, samples) = squared_error_sum(a, b, 0..a.pixel_count() as usize);
    Ok((sum / samples as f64).sqrt())
}

/// RMSE restricted to the masked pixels.
pub fn rmse_weighted(a: &Image, b: &Image, mask: &Mask) -> Result<f64> {
    a.ensure_same_size_as(b)?;
    mask.ensure_same_size_as(a)?;
    if mask.is_empty() {
        return Err(Error::EmptySelection("weighted RMSE needs a nonempty mask".into()));
    }
    let w = a.width() as usize;
    let (sum, samples) =
        squared_error_sum(a, b, mask.iter_set().map(|(x, y)| y as usize * w + x as usize));
    Ok((sum / samples as f64).sqrt())
}

/// Peak signal-to-noise ratio in dB against a 255 peak. Identical
/// images would be infinite and are reported as the conventional cap of
/// 99 dB; any nonzero error stays on the exact `20*log10(255/rmse)`
/// curve.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let r = rmse(a, b)?;
    Ok(if r == 0.0 { 99.0 } else { 20.0 * (255.0 / r).log10() })
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut kernel = [0.0; SSIM_WINDOW];
    let center = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, k) in kernel.iter_mut().enumerate() {
        *k = (-((i as f64 - center).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *k;
    }
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

/// Valid-mode separable Gaussian blur: horizontal then vertical, for a
/// result of (w - 10) x (h - 10).
fn blur_valid(values: &[f64], w: usize, h: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let out_w = w - (SSIM_WINDOW - 1);
    let out_h = h - (SSIM_WINDOW - 1);
    let mut horizontal = vec![0.0f64; out_w * h];
    for y in 0..h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                acc += k * values[y * w + x + i];
            }
            horizontal[y * out_w + x] = acc;
        }
    }
    let mut out = vec![0.0f64; out_w * out_h];
    for y in 0..out_h {
        for x in 0..out_w {
            let mut acc = 0.0;
            for (j, k) in kernel.iter().enumerate() {
                acc += k * horizontal[(y + j) * out_w + x];
            }
            out[y * out_w + x] = acc;
        }
    }
    out
}

/// Mean structural similarity over 11x11 Gaussian windows (sigma 1.5)
/// of the 255-scale luma planes. Both dimensions must be at least the
/// window size. Identical images score exactly 1.0.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_size_as(b)?;
    let (w, h) = a.dimensions();
    if (w as usize) < SSIM_WINDOW || (h as usize) < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: SSIM_WINDOW as u32,
        });
    }
    let (wi, hi) = (w as usize, h as usize);
    let lx = a.luma255();
    let ly = b.luma255();
    let xx: Vec<f64> = lx.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = ly.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = lx.iter().zip(&ly).map(|(p, q)| p * q).collect();

    let kernel = gaussian_kernel();
    let mu_x = blur_valid(&lx, wi, hi, &kernel);
    let mu_y = blur_valid(&ly, wi, hi, &kernel);
    let e_xx = blur_valid(&xx, wi, hi, &kernel);
    let e_yy = blur_valid(&yy, wi, hi, &kernel);
    let e_xy = blur_valid(&xy, wi, hi, &kernel);

    let mut total = 0.0f64;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (mx * mx + my * my + SSIM_C1) * (var_x + var_y + SSIM_C2);
        total += num / den;
    }
    Ok(total / mu_x.len() as f64)
}

/// Scores for one evaluated image. LPIPS comes from an external
/// side-file when provided; the toolkit does not compute it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScores {
    pub id: String,
    pub psnr: f64,
    pub ssim: f64,
    pub rmse: f64,
    pub rmsew: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lpips: Option<f64>,
}

/// Arithmetic means over the scored images. The LPIPS mean covers the
/// images that have a value and is absent when none do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateScores {
    pub psnr: f64,
    pub ssim: f64,
    pub rmse: f64,
    pub rmsew: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lpips: Option<f64>,
}

/// An entry that could not be scored; kept out of the aggregate but
/// listed in the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub method: String,
    pub dataset: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub meta: ReportMeta,
    pub per_image: Vec<ImageScores>,
    pub aggregate: AggregateScores,
    pub failures: Vec<EntryFailure>,
}

impl MetricsReport {
    /// Builds a report, computing the aggregate from the per-image
    /// scores. At least one scored image is required.
    pub fn new(
        meta: ReportMeta,
        per_image: Vec<ImageScores>,
        failures: Vec<EntryFailure>,
    ) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::EmptySelection("report has no scored images".into()));
        }
        let n = per_image.len() as f64;
        let lpips_values: Vec<f64> = per_image.iter().filter_map(|s| s.lpips).collect();
        let aggregate = AggregateScores {
            psnr: per_image.iter().map(|s| s.psnr).sum::<f64>() / n,
            ssim: per_image.iter().map(|s| s.ssim).sum::<f64>() / n,
            rmse: per_image.iter().map(|s| s.rmse).sum::<f64>() / n,
            rmsew: per_image.iter().map(|s| s.rmsew).sum::<f64>() / n,
            lpips: if lpips_values.is_empty() {
                None
            } else {
                Some(lpips_values.iter().sum::<f64>() / lpips_values.len() as f64)
            },
        };
        Ok(Self {
            meta,
            per_image,
            aggregate,
            failures,
        })
    }

    /// CSV rendering: a comment line with the run metadata, a header,
    /// one row per image in report order, and a final `mean` row.
    /// Failed entries never appear here.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# method={}, dataset={}, config_hash={}",
            self.meta.method, self.meta.dataset, self.meta.config_hash
        );
        out.push_str("id,psnr,lpips,ssim,rmse,rmsew\n");
        let lpips_cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for s in &self.per_image {
            let _ = writeln!(
                out,
                "{},{:.6},{},{:.6},{:.6},{:.6}",
                s.id,
                s.psnr,
                lpips_cell(s.lpips),
                s.ssim,
                s.rmse,
                s.rmsew
            );
        }
        let a = &self.aggregate;
        let _ = writeln!(
            out,
            "mean,{:.6},{},{:.6},{:.6},{:.6}",
            a.psnr,
            lpips_cell(a.lpips),
            a.ssim,
            a.rmse,
            a.rmsew
        );
        out
    }

    /// Markdown rendering: run metadata, the aggregate row in the usual
    /// comparison-table column order, and the failure list.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# Evaluation report");
        let _ = writeln!(out);
        let _ = writeln!(out, "- method: {}", self.meta.method);
        let _ = writeln!(out, "- dataset: {}", self.meta.dataset);
        let _ = writeln!(out, "- config hash: {}", self.meta.config_hash);
        let _ = writeln!(out, "- images scored: {}", self.per_image.len());
        let _ = writeln!(out, "- failures: {}", self.failures.len());
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "| Method | PSNR (dB) ↑ | LPIPS ↓ | SSIM ↑ | RMSE ↓ | RMSEw ↓ |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|");
        let a = &self.aggregate;
        let lpips = a
            .lpips
            .map(|v| format!("{v:.6}"))
            .unwrap_or_else(|| "n/a".into());
        let _ = writeln!(
            out,
            "| {} | {:.6} | {} | {:.6} | {:.6} | {:.6} |",
            self.meta.method, a.psnr, lpips, a.ssim, a.rmse, a.rmsew
        );
        if !self.failures.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "## Failures");
            let _ = writeln!(out);
            for f in &self.failures {
                let _ = writeln!(out, "- {}: {}", f.id, f.message);
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path.to_path_buf(), e))
    }

    pub fn write_markdown(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_markdown()).map_err(|e| Error::io(path.to_path_buf(), e))
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidArgument(format!("report serialization failed: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path.to_path_buf(), e))
    }
}
