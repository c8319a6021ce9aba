//! Little-endian float32 payload plus a JSON sidecar:
//! `{"dims": [nx, ny, nz], "spacing_mm": [sx, sy, sz], "dtype": "float32"}`.

use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::Volume;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    pub dtype: String,
}

fn sidecar_err(path: &Path, field: &'static str, reason: impl Into<String>) -> Error {
    Error::Sidecar {
        path: path.to_path_buf(),
        field,
        reason: reason.into(),
    }
}

fn parse_sidecar(path: &Path, text: &str) -> Result<Sidecar> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| sidecar_err(path, "<document>", e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| sidecar_err(path, "<document>", "expected a JSON object"))?;

    let triple = |field: &'static str| -> Result<&Vec<Value>> {
        let arr = obj
            .get(field)
            .ok_or_else(|| sidecar_err(path, field, "missing"))?
            .as_array()
            .ok_or_else(|| sidecar_err(path, field, "expected an array"))?;
        if arr.len() != 3 {
            return Err(sidecar_err(path, field, format!("expected 3 entries, got {}", arr.len())));
        }
        Ok(arr)
    };

    let mut dims = [0usize; 3];
    for (d, v) in dims.iter_mut().zip(triple("dims")?) {
        *d = v
            .as_u64()
            .filter(|&n| n >= 1)
            .ok_or_else(|| sidecar_err(path, "dims", format!("{v} is not a positive integer")))?
            as usize;
    }
    let mut spacing_mm = [0f64; 3];
    for (s, v) in spacing_mm.iter_mut().zip(triple("spacing_mm")?) {
        *s = v
            .as_f64()
            .filter(|x| x.is_finite() && *x > 0.0)
            .ok_or_else(|| sidecar_err(path, "spacing_mm", format!("{v} is not a positive number")))?;
    }
    let dtype = obj
        .get("dtype")
        .ok_or_else(|| sidecar_err(path, "dtype", "missing"))?
        .as_str()
        .ok_or_else(|| sidecar_err(path, "dtype", "expected a string"))?;
    if dtype != "float32" {
        return Err(sidecar_err(path, "dtype", format!("unsupported dtype `{dtype}`")));
    }
    Ok(Sidecar {
        dims,
        spacing_mm,
        dtype: dtype.to_owned(),
    })
}

pub fn read_raw(path: &Path, sidecar: &Path) -> Result<Volume> {
    let text = std::fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar, e))?;
    let meta = parse_sidecar(sidecar, &text)?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let n = super::check_dims(meta.dims)?;
    let expected = n * 4;
    if bytes.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: bytes.len(),
        });
    }
    let mut data = vec![0f32; n];
    LittleEndian::read_f32_into(&bytes, &mut data);
    Volume::new(meta.dims, meta.spacing_mm, data)
}

pub fn write_raw(v: &Volume, path: &Path, sidecar: &Path) -> Result<()> {
    let mut bytes = vec![0u8; v.len() * 4];
    LittleEndian::write_f32_into(v.data(), &mut bytes);
    std::fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    let meta = Sidecar {
        dims: v.dims(),
        spacing_mm: v.spacing(),
        dtype: "float32".into(),
    };
    let text = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
    std::fs::write(sidecar, text).map_err(|e| Error::io(sidecar, e))
}
