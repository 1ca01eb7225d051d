//! Toolkit for removing people from photographs and for manufacturing
//! the paired training data that removal models need.
//!
//! Real scenes rarely come with a ground-truth "person absent" shot, so
//! the crate builds them instead: cut-and-paste mosaics place a donor
//! silhouette onto a clean background ([`mosaic`]), and the render path
//! additionally relights the person and attaches a depth annotation
//! ([`render`]). The inverse problem of estimating lighting that makes
//! a pasted person plausible lives in [`lightfit`]. Removal itself runs
//! through pluggable hole fillers behind the [`removal::Restorer`]
//! trait, with a coarse-to-fine mask-guided pipeline and a legacy
//! punch-out variant for comparison. [`metrics`] scores predictions
//! against ground truth (PSNR, SSIM, RMSE, and a masked RMSE that only
//! looks at the edited region), and [`harness`] handles dataset
//! manifests, train/test splits, and batch evaluation reports.
//!
//! Images are RGB `f32` in `[0, 1]` ([`Image`]), masks are binary
//! ([`Mask`]), and soft silhouettes are [`AlphaMap`]s. Everything is
//! deterministic: a seed plus an item index fixes each synthesized
//! triplet regardless of worker count.
//!
//! ```
//! use person_removal::compose::compose_masked;
//! use person_removal::removal::{run_removal, RemovalConfig};
//! use person_removal::synthetic::{gradient_background, person_donor};
//!
//! # fn main() -> person_removal::Result<()> {
//! let background = gradient_background(48, 48, 7);
//! let (donor, mask) = person_donor(48, 48, 9);
//! let scene = compose_masked(&background, &donor, &mask)?;
//!
//! let restored = run_removal(&scene, &mask, &RemovalConfig::default())?;
//! assert_eq!(restored.dimensions(), scene.dimensions());
//! # Ok(())
//! # }
//! ```

pub mod cli;
pub mod compose;
pub mod config;
mod error;
pub mod harness;
mod image;
pub mod io;
pub mod lightfit;
mod mask;
pub mod metrics;
pub mod mosaic;
pub mod removal;
pub mod render;
pub mod synthetic;

pub use crate::error::{Error, Result};
pub use crate::image::{AlphaMap, Image};
pub use crate::mask::Mask;
