//! Toolkit configuration file.
//!
//! One TOML file drives every subcommand. All fields have defaults, so
//! a config may set only what it cares about, and command-line flags
//! override the file. Validation happens eagerly at load so a broken
//! config fails before any work starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightfit::FitObjective;
use crate::mosaic::ScaleRuleSpec;
use crate::removal::RemovalConfig;
use crate::render::LightingRanges;

/// Settings for mosaic and rendered synthesis inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MosaicSection {
    /// Number of triplets to synthesize.
    pub count: u32,
    /// Feather width applied to extracted sprite silhouettes.
    pub feather_radius: u32,
    /// Directory of background PNGs.
    pub backgrounds: Option<PathBuf>,
    /// Directory of donor PNGs with `<stem>.mask.png` silhouettes.
    pub sprites: Option<PathBuf>,
    /// Directory of per-background placement region masks.
    pub regions: Option<PathBuf>,
    /// Without a region mask, placements sample from the band below
    /// this fraction of the frame height.
    pub region_top_fraction: f32,
    pub scale: ScaleRuleSpec,
}

impl Default for MosaicSection {
    fn default() -> Self {
        Self {
            count: 50,
            feather_radius: 2,
            backgrounds: None,
            sprites: None,
            regions: None,
            region_top_fraction: 0.55,
            scale: ScaleRuleSpec::default(),
        }
    }
}

/// Settings specific to rendered synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSection {
    /// Number of enumerated light azimuths; 0 lets each item sample
    /// its angle freely instead.
    pub angle_count: u32,
    pub ranges: LightingRanges,
}

impl RenderSection {
    pub fn enumerated_angles(&self) -> Option<u32> {
        (self.angle_count > 0).then_some(self.angle_count)
    }
}

impl Default for RenderSection {
    fn default() -> Self {
        Self {
            angle_count: 15,
            ranges: LightingRanges::default(),
        }
    }
}

/// Settings for illumination fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LightfitSection {
    /// Loss variant: "masked" or "ring".
    pub objective: String,
    /// Ring width for the "ring" objective.
    pub ring_width: u32,
    /// Evaluation budget for coordinate descent.
    pub budget: u64,
    /// Default grid axes (`param=lo:hi:steps`); empty means descent.
    pub grid: Vec<String>,
}

impl Default for LightfitSection {
    fn default() -> Self {
        Self {
            objective: "masked".into(),
            ring_width: 4,
            budget: 500,
            grid: Vec::new(),
        }
    }
}

impl LightfitSection {
    pub fn objective(&self) -> Result<FitObjective> {
        match self.objective.as_str() {
            "masked" => Ok(FitObjective::Masked),
            "ring" => {
                if self.ring_width == 0 {
                    Err(Error::Config("lightfit ring_width must be at least 1".into()))
                } else {
                    Ok(FitObjective::Ring {
                        width: self.ring_width,
                    })
                }
            }
            other => Err(Error::Config(format!(
                "unknown lightfit objective '{other}' (expected masked or ring)"
            ))),
        }
    }
}

/// Root configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolkitConfig {
    /// Master seed for all randomized operations.
    pub seed: u64,
    /// Worker threads; 0 uses the default pool size.
    pub workers: usize,
    pub mosaic: MosaicSection,
    pub render: RenderSection,
    pub removal: RemovalConfig,
    pub lightfit: LightfitSection,
}

impl ToolkitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mosaic.count == 0 {
            return Err(Error::Config("mosaic count must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.mosaic.region_top_fraction) {
            return Err(Error::Config(
                "mosaic region_top_fraction must be in [0, 1)".into(),
            ));
        }
        self.mosaic
            .scale
            .rule_for_height(256)
            .map_err(|e| Error::Config(format!("mosaic scale rule: {e}")))?;
        self.render.ranges.validate()?;
        self.removal.validate()?;
        self.lightfit.objective()?;
        if self.lightfit.budget == 0 {
            return Err(Error::Config("lightfit budget must be at least 1".into()));
        }
        Ok(())
    }
}

/// Reads and validates a TOML config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ToolkitConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: ToolkitConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}
