//! Hole filling delegated to an external command.
//!
//! The source and mask are materialized as PNGs in a temporary
//! directory and the command is invoked as
//! `command [args..] <source.png> <mask.png> <out.png>`. The command
//! must write its restored image to the third path and exit zero. This
//! is the integration point for external inpainting models without
//! linking against them.

use std::path::PathBuf;
use std::process::Command;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{load_image, save_image, save_mask};
use crate::mask::Mask;

use super::Restorer;

pub struct SubprocessRestorer {
    command: String,
    args: Vec<String>,
}

impl SubprocessRestorer {
    pub fn new(command: impl Into<String>, args: Vec<String>) -> Result<Self> {
        let command = command.into();
        if command.is_empty() {
            return Err(Error::InvalidArgument("subprocess restorer needs a command".into()));
        }
        Ok(Self { command, args })
    }
}

impl Restorer for SubprocessRestorer {
    fn name(&self) -> &str {
        "subprocess"
    }

    fn restore(&self, image: &Image, mask: &Mask) -> Result<Image> {
        mask.ensure_same_size_as(image)?;
        let dir = tempfile::tempdir().map_err(|e| Error::io(PathBuf::from("tempdir"), e))?;
        let source_path = dir.path().join("source.png");
        let mask_path = dir.path().join("mask.png");
        let out_path = dir.path().join("restored.png");
        save_image(&source_path, image)?;
        save_mask(&mask_path, mask)?;

        let output = Command::new(&self.command)
            .args(&self.args)
            .arg(&source_path)
            .arg(&mask_path)
            .arg(&out_path)
            .output()
            .map_err(|e| Error::Restorer {
                name: "subprocess".into(),
                message: format!("failed to launch '{}': {e}", self.command),
            })?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(Error::Restorer {
                name: "subprocess".into(),
                message: format!(
                    "'{}' exited with {}: {}",
                    self.command,
                    output.status,
                    stderr.trim()
                ),
            });
        }
        load_image(&out_path)
    }
}
