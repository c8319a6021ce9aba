use std::path::Path;

use crate::error::{CliError, Result};
use crate::manifest::Manifest;

/// Check every file listed in the manifest in `dir`; returns the file count.
pub fn cmd_verify(dir: &Path) -> Result<usize> {
    let manifest = Manifest::load(dir)?;
    if manifest.samples.len() != manifest.config.count {
        return Err(CliError::Verification(format!(
            "{} entries for count {}",
            manifest.samples.len(),
            manifest.config.count
        )));
    }
    let problems = manifest.check(dir);
    if problems.is_empty() {
        Ok(manifest.samples.len() * 4)
    } else {
        Err(CliError::Verification(problems.join("; ")))
    }
}
