//! Volume files on disk: NIfTI (`.nii`, `.nii.gz`) or raw with a JSON sidecar.

use std::path::{Path, PathBuf};

use tumorsim::volume::nifti::{read_nifti, write_nifti};
use tumorsim::volume::raw::{read_raw, write_raw};
use tumorsim::volume::{BinaryMask, Spacing, Volume};

use crate::error::{CliError, Result};

pub fn is_volume_file(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".nii") || name.ends_with(".nii.gz") || name.ends_with(".raw")
}

/// File name with the volume extension removed, used to pair files.
pub fn stem(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    for ext in [".nii.gz", ".nii", ".raw"] {
        if let Some(s) = name.strip_suffix(ext) {
            return s.to_string();
        }
    }
    name.to_string()
}

fn sidecar_for(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn read_volume(path: &Path) -> Result<Volume> {
    let res = if path.extension().is_some_and(|e| e == "raw") {
        read_raw(path, &sidecar_for(path))
    } else {
        read_nifti(path)
    };
    res.map_err(|source| CliError::Volume {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_volume_with(path: &Path, spacing: Option<Spacing>) -> Result<Volume> {
    let v = read_volume(path)?;
    match spacing {
        Some(s) => v.with_spacing(s).map_err(CliError::from),
        None => Ok(v),
    }
}

pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    BinaryMask::from_volume(&read_volume(path)?).map_err(|source| CliError::Volume {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_volume(v: &Volume, path: &Path) -> Result<()> {
    let res = if path.extension().is_some_and(|e| e == "raw") {
        write_raw(v, path, &sidecar_for(path))
    } else {
        write_nifti(v, path)
    };
    res.map_err(|source| CliError::Volume {
        path: path.to_path_buf(),
        source,
    })
}

/// Volume files directly inside `dir`, sorted by file name.
pub fn list_volumes(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_file() && is_volume_file(&path) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(tumorsim::digest::digest64_hex(&bytes))
}
