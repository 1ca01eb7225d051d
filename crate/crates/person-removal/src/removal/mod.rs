//! Person removal pipelines.
//!
//! A removal run hands an image and mask to a [`Restorer`], then splices
//! the restored pixels back into the source so only the masked region
//! can change. Two input conventions are supported: the legacy pipeline
//! zero-fills the person before restoration, while the mask-guided
//! pipeline passes the untouched source through and relies on the mask
//! to say what needs replacing. A coarse-to-fine loop re-runs the
//! mask-guided pipeline on its own output for progressive refinement.

mod diffusion;
mod exemplar;
mod subprocess;

pub use diffusion::{diffusion_restore, DiffusionRestorer};
pub use exemplar::{exemplar_restore, ExemplarOutcome, ExemplarRestorer};
pub use subprocess::SubprocessRestorer;

use serde::{Deserialize, Serialize};

use crate::compose::{compose_masked, subtract_person};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::mask::Mask;

/// A pluggable hole-filling backend. Implementations must return an
/// image of the input's size; what they produce outside the mask is
/// irrelevant because the pipelines splice only masked pixels.
pub trait Restorer: Send + Sync {
    /// Short identifier used in logs and error messages.
    fn name(&self) -> &str;

    /// Produces an image whose masked pixels hold plausible background.
    fn restore(&self, image: &Image, mask: &Mask) -> Result<Image>;
}

/// Runs the restorer and enforces the same-size contract.
fn restored(restorer: &dyn Restorer, input: &Image, mask: &Mask) -> Result<Image> {
    let out = restorer.restore(input, mask)?;
    if out.dimensions() != input.dimensions() {
        return Err(Error::Restorer {
            name: restorer.name().to_string(),
            message: format!(
                "returned a {}x{} image for a {}x{} input",
                out.width(),
                out.height(),
                input.width(),
                input.height()
            ),
        });
    }
    Ok(out)
}

/// Legacy pipeline: the person is zero-filled before the restorer sees
/// the image, so the restorer has no access to the occluded pixels.
pub fn remove_legacy(source: &Image, mask: &Mask, restorer: &dyn Restorer) -> Result<Image> {
    mask.ensure_same_size_as(source)?;
    let holed = subtract_person(source, mask)?;
    let prediction = restored(restorer, &holed, mask)?;
    compose_masked(source, &prediction, mask)
}

/// Mask-guided pipeline: the restorer receives the untouched source and
/// the mask tells it which pixels to replace.
pub fn remove_mask_guided(source: &Image, mask: &Mask, restorer: &dyn Restorer) -> Result<Image> {
    mask.ensure_same_size_as(source)?;
    let prediction = restored(restorer, source, mask)?;
    compose_masked(source, &prediction, mask)
}

/// Iterated mask-guided removal. Each round restores the previous
/// round's output and splices it against the original source, so every
/// stage is bit-identical to the source outside the mask. Returns the
/// final image along with all intermediate stages, one per iteration.
pub fn remove_coarse_to_fine(
    source: &Image,
    mask: &Mask,
    restorer: &dyn Restorer,
    iters: u32,
) -> Result<(Image, Vec<Image>)> {
    if iters == 0 {
        return Err(Error::InvalidArgument(
            "coarse-to-fine removal needs at least one iteration".into(),
        ));
    }
    mask.ensure_same_size_as(source)?;
    let mut stages = Vec::with_capacity(iters as usize);
    let mut current = source.clone();
    for _ in 0..iters {
        let prediction = restored(restorer, &current, mask)?;
        current = compose_masked(source, &prediction, mask)?;
        stages.push(current.clone());
    }
    Ok((current, stages))
}

/// Which input convention a removal run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalMode {
    LegacyInpaint,
    #[default]
    MaskGuided,
}

/// Which hole-filling backend a removal run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestorerKind {
    #[default]
    Diffusion,
    Exemplar,
    Subprocess,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiffusionParams {
    pub iters: u32,
    pub tol: f32,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        Self {
            iters: 2000,
            tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExemplarParams {
    pub patch_size: u32,
    pub search_radius: u32,
}

impl Default for ExemplarParams {
    fn default() -> Self {
        Self {
            patch_size: 9,
            search_radius: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SubprocessParams {
    pub command: String,
    pub args: Vec<String>,
}

/// Complete description of a removal run. Serializes stably, so it can
/// be hashed to fingerprint evaluation reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemovalConfig {
    pub mode: RemovalMode,
    pub restorer: RestorerKind,
    /// Coarse-to-fine rounds for the mask-guided mode. The legacy mode
    /// ignores it.
    pub refine_iters: u32,
    /// Chebyshev dilation applied to the mask before restoration, to
    /// swallow matting halos around the annotation.
    pub mask_dilation: u32,
    pub diffusion: DiffusionParams,
    pub exemplar: ExemplarParams,
    pub subprocess: SubprocessParams,
}

impl Default for RemovalConfig {
    fn default() -> Self {
        Self {
            mode: RemovalMode::MaskGuided,
            restorer: RestorerKind::Diffusion,
            refine_iters: 2,
            mask_dilation: 1,
            diffusion: DiffusionParams::default(),
            exemplar: ExemplarParams::default(),
            subprocess: SubprocessParams::default(),
        }
    }
}

impl RemovalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.refine_iters == 0 {
            return Err(Error::Config("refine_iters must be at least 1".into()));
        }
        if self.diffusion.iters == 0 {
            return Err(Error::Config("diffusion iters must be at least 1".into()));
        }
        if !(self.diffusion.tol >= 0.0) {
            return Err(Error::Config("diffusion tol must be nonnegative".into()));
        }
        if self.exemplar.patch_size < 3 || self.exemplar.patch_size % 2 == 0 {
            return Err(Error::Config("exemplar patch_size must be odd and at least 3".into()));
        }
        if self.exemplar.search_radius < self.exemplar.patch_size {
            return Err(Error::Config(
                "exemplar search_radius must be at least patch_size".into(),
            ));
        }
        if self.restorer == RestorerKind::Subprocess && self.subprocess.command.is_empty() {
            return Err(Error::Config("subprocess restorer needs a command".into()));
        }
        Ok(())
    }
}

/// Instantiates the configured restorer.
pub fn build_restorer(config: &RemovalConfig) -> Result<Box<dyn Restorer>> {
    config.validate()?;
    Ok(match config.restorer {
        RestorerKind::Diffusion => Box::new(DiffusionRestorer::new(config.diffusion)),
        RestorerKind::Exemplar => Box::new(ExemplarRestorer::new(config.exemplar)?),
        RestorerKind::Subprocess => Box::new(SubprocessRestorer::new(
            config.subprocess.command.clone(),
            config.subprocess.args.clone(),
        )?),
    })
}

/// Runs the configured pipeline end to end. An empty mask returns the
/// source unchanged without invoking the restorer.
pub fn run_removal(source: &Image, mask: &Mask, config: &RemovalConfig) -> Result<Image> {
    let restorer = build_restorer(config)?;
    run_removal_with(source, mask, config, restorer.as_ref())
}

/// Like [`run_removal`], but with a caller-provided restorer so one
/// instance can serve many images.
pub fn run_removal_with(
    source: &Image,
    mask: &Mask,
    config: &RemovalConfig,
    restorer: &dyn Restorer,
) -> Result<Image> {
    config.validate()?;
    mask.ensure_same_size_as(source)?;
    if mask.is_empty() {
        return Ok(source.clone());
    }
    let work_mask = if config.mask_dilation > 0 {
        mask.dilate(config.mask_dilation)
    } else {
        mask.clone()
    };
    match config.mode {
        RemovalMode::LegacyInpaint => remove_legacy(source, &work_mask, restorer),
        RemovalMode::MaskGuided => {
            if config.refine_iters == 1 {
                remove_mask_guided(source, &work_mask, restorer)
            } else {
                remove_coarse_to_fine(source, &work_mask, restorer, config.refine_iters)
                    .map(|(finished, _)| finished)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    struct EchoRestorer;

    impl Restorer for EchoRestorer {
        fn name(&self) -> &str {
            "echo"
        }

        fn restore(&self, image: &Image, _mask: &Mask) -> Result<Image> {
            Ok(image.clone())
        }
    }

    struct ConstRestorer([f32; 3]);

    impl Restorer for ConstRestorer {
        fn name(&self) -> &str {
            "const"
        }

        fn restore(&self, image: &Image, _mask: &Mask) -> Result<Image> {
            let (w, h) = image.dimensions();
            Image::filled(w, h, self.0)
        }
    }

    struct ShrinkingRestorer;

    impl Restorer for ShrinkingRestorer {
        fn name(&self) -> &str {
            "shrinking"
        }

        fn restore(&self, _image: &Image, _mask: &Mask) -> Result<Image> {
            Image::filled(1, 1, [0.0; 3])
        }
    }

    fn scene() -> (Image, Mask) {
        let source = synthetic::gradient_background(16, 12, 3);
        let mask = Mask::from_fn(16, 12, |x, y| (4..8).contains(&x) && (3..7).contains(&y));
        (source, mask)
    }

    #[test]
    fn modes_feed_the_restorer_differently() {
        let (source, mask) = scene();

        let guided = remove_mask_guided(&source, &mask, &EchoRestorer).unwrap();
        assert_eq!(guided, source);

        let legacy = remove_legacy(&source, &mask, &EchoRestorer).unwrap();
        for y in 0..12 {
            for x in 0..16 {
                if mask.get(x, y) {
                    assert_eq!(legacy.get(x, y), [0.0; 3]);
                } else {
                    assert_eq!(legacy.get(x, y), source.get(x, y));
                }
            }
        }
    }

    #[test]
    fn pipelines_only_touch_the_mask() {
        let (source, mask) = scene();
        let filled = remove_mask_guided(&source, &mask, &ConstRestorer([0.25, 0.5, 0.75])).unwrap();
        for y in 0..12 {
            for x in 0..16 {
                if mask.get(x, y) {
                    assert_eq!(filled.get(x, y), [0.25, 0.5, 0.75]);
                } else {
                    assert_eq!(filled.get(x, y), source.get(x, y));
                }
            }
        }
    }

    #[test]
    fn wrong_output_size_is_a_restorer_error() {
        let (source, mask) = scene();
        let err = remove_mask_guided(&source, &mask, &ShrinkingRestorer).unwrap_err();
        assert!(matches!(err, Error::Restorer { .. }), "got {err:?}");
    }

    #[test]
    fn one_refinement_round_matches_single_shot() {
        let (source, mask) = scene();
        let restorer = DiffusionRestorer::new(DiffusionParams::default());
        let single = remove_mask_guided(&source, &mask, &restorer).unwrap();
        let (finished, stages) = remove_coarse_to_fine(&source, &mask, &restorer, 1).unwrap();
        assert_eq!(stages.len(), 1);
        assert_eq!(finished, single);
        assert_eq!(stages[0], single);

        assert!(remove_coarse_to_fine(&source, &mask, &restorer, 0).is_err());
    }

    #[test]
    fn every_stage_is_anchored_to_the_source() {
        let (source, mask) = scene();
        let restorer = DiffusionRestorer::new(DiffusionParams::default());
        let (finished, stages) = remove_coarse_to_fine(&source, &mask, &restorer, 3).unwrap();
        assert_eq!(stages.len(), 3);
        assert_eq!(*stages.last().unwrap(), finished);
        for stage in &stages {
            for y in 0..12 {
                for x in 0..16 {
                    if !mask.get(x, y) {
                        assert_eq!(stage.get(x, y), source.get(x, y));
                    }
                }
            }
        }
    }

    #[test]
    fn empty_mask_short_circuits() {
        let source = synthetic::gradient_background(10, 10, 8);
        let empty = Mask::filled(10, 10, false).unwrap();
        let config = RemovalConfig::default();
        let out = run_removal(&source, &empty, &config).unwrap();
        assert_eq!(out, source);
    }

    #[test]
    fn dilation_widens_the_replaced_region() {
        let (source, mask) = scene();
        let config = RemovalConfig {
            mask_dilation: 2,
            refine_iters: 1,
            ..RemovalConfig::default()
        };
        let fill = [0.1, 0.2, 0.3];
        let out = run_removal_with(&source, &mask, &config, &ConstRestorer(fill)).unwrap();
        let dilated = mask.dilate(2);
        assert!(dilated.get(2, 3) && !mask.get(2, 3));
        for y in 0..12 {
            for x in 0..16 {
                if dilated.get(x, y) {
                    assert_eq!(out.get(x, y), fill);
                } else {
                    assert_eq!(out.get(x, y), source.get(x, y));
                }
            }
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let ok = RemovalConfig::default();
        assert!(ok.validate().is_ok());

        let mut bad = ok.clone();
        bad.refine_iters = 0;
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.exemplar.patch_size = 4;
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.exemplar.search_radius = 3;
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.restorer = RestorerKind::Subprocess;
        assert!(bad.validate().is_err());
        bad.subprocess.command = "true".into();
        assert!(bad.validate().is_ok());
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = RemovalConfig {
            mode: RemovalMode::LegacyInpaint,
            restorer: RestorerKind::Exemplar,
            refine_iters: 3,
            ..RemovalConfig::default()
        };
        let text = serde_json::to_string(&config).unwrap();
        let back: RemovalConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
        assert!(text.contains("legacy_inpaint"));
        assert!(text.contains("exemplar"));
    }
}
