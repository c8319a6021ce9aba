//! Single-file NIfTI-1 (`.nii`, `.nii.gz`), 3D only, float32/int16/uint8.
//!
//! Anything outside that subset is an error rather than a best-effort parse.
//! qform/sform are ignored on read; the writer emits qform_code 1 with an
//! identity quaternion so spacing is the only geometry carried.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use super::Volume;
use crate::error::{Error, Result};

const HEADER_SIZE: usize = 348;
const VOX_OFFSET: usize = 352;

mod offsets {
    pub const SIZEOF_HDR: usize = 0;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const XYZT_UNITS: usize = 123;
    pub const QFORM_CODE: usize = 252;
    pub const MAGIC: usize = 344;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    Float32,
    Int16,
    UInt8,
}

impl DType {
    fn from_code(code: i16) -> Result<Self> {
        match code {
            16 => Ok(DType::Float32),
            4 => Ok(DType::Int16),
            2 => Ok(DType::UInt8),
            other => Err(Error::UnsupportedFormat(format!("NIfTI datatype code {other}"))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::Float32 => 4,
            DType::Int16 => 2,
            DType::UInt8 => 1,
        }
    }
}

/// The header fields this reader honours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub dtype: DType,
    /// Effective intensity scale (a stored slope of 0 reads as 1).
    pub scale: f64,
    pub offset: f64,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&bytes[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

fn parse_header<B: ByteOrder>(h: &[u8]) -> Result<(VolumeHeader, usize)> {
    let magic = &h[offsets::MAGIC..offsets::MAGIC + 4];
    if magic != b"n+1\0" {
        let shown = String::from_utf8_lossy(&magic[..3]).into_owned();
        return Err(Error::UnsupportedFormat(format!(
            "NIfTI magic `{shown}` (only single-file `n+1` is supported)"
        )));
    }
    let dim: Vec<i16> = (0..8).map(|k| B::read_i16(&h[offsets::DIM + 2 * k..])).collect();
    if dim[0] != 3 {
        return Err(Error::UnsupportedFormat(format!("dim[0] = {} (only 3D)", dim[0])));
    }
    let mut dims = [0usize; 3];
    for (d, &v) in dims.iter_mut().zip(&dim[1..4]) {
        if v < 1 {
            return Err(Error::UnsupportedFormat(format!("dim entry {v} < 1")));
        }
        *d = v as usize;
    }
    let dtype = DType::from_code(B::read_i16(&h[offsets::DATATYPE..]))?;
    let bitpix = B::read_i16(&h[offsets::BITPIX..]);
    if bitpix as usize != dtype.size() * 8 {
        return Err(Error::UnsupportedFormat(format!(
            "bitpix {bitpix} inconsistent with {dtype:?}"
        )));
    }
    let mut spacing = [0f64; 3];
    for (k, s) in spacing.iter_mut().enumerate() {
        *s = (B::read_f32(&h[offsets::PIXDIM + 4 * (k + 1)..]) as f64).abs();
    }
    let vox_offset = B::read_f32(&h[offsets::VOX_OFFSET..]);
    if !(vox_offset >= HEADER_SIZE as f32) {
        return Err(Error::UnsupportedFormat(format!("vox_offset {vox_offset}")));
    }
    let slope = B::read_f32(&h[offsets::SCL_SLOPE..]) as f64;
    let inter = B::read_f32(&h[offsets::SCL_INTER..]) as f64;
    let (scale, offset) = if slope == 0.0 || !slope.is_finite() {
        (1.0, 0.0)
    } else {
        (slope, if inter.is_finite() { inter } else { 0.0 })
    };
    Ok((
        VolumeHeader {
            dims,
            spacing,
            dtype,
            scale,
            offset,
        },
        vox_offset as usize,
    ))
}

fn decode<B: ByteOrder>(bytes: &[u8]) -> Result<Volume> {
    let (header, start) = parse_header::<B>(bytes)?;
    let n: usize = header.dims.iter().product();
    let need = n * header.dtype.size();
    let payload = bytes.get(start..).unwrap_or(&[]);
    if payload.len() < need {
        return Err(Error::UnsupportedFormat(format!(
            "truncated payload: expected {need} bytes, found {}",
            payload.len()
        )));
    }
    let payload = &payload[..need];
    let raw: Vec<f64> = match header.dtype {
        DType::Float32 => payload.chunks_exact(4).map(|c| B::read_f32(c) as f64).collect(),
        DType::Int16 => payload.chunks_exact(2).map(|c| B::read_i16(c) as f64).collect(),
        DType::UInt8 => payload.iter().map(|&b| b as f64).collect(),
    };
    let identity = header.scale == 1.0 && header.offset == 0.0;
    let data = raw
        .into_iter()
        .map(|v| if identity { v as f32 } else { (v * header.scale + header.offset) as f32 })
        .collect();
    Volume::new(header.dims, header.spacing, data)
}

fn header_bytes_order(bytes: &[u8]) -> Result<bool> {
    if bytes.len() < HEADER_SIZE {
        return Err(Error::UnsupportedFormat(format!(
            "file shorter than a NIfTI-1 header ({} bytes)",
            bytes.len()
        )));
    }
    match (
        LittleEndian::read_i32(&bytes[offsets::SIZEOF_HDR..]),
        BigEndian::read_i32(&bytes[offsets::SIZEOF_HDR..]),
    ) {
        (348, _) => Ok(true),
        (_, 348) => Ok(false),
        _ => Err(Error::UnsupportedFormat("sizeof_hdr is not 348".into())),
    }
}

pub fn read_nifti(path: &Path) -> Result<Volume> {
    let bytes = read_file(path)?;
    if header_bytes_order(&bytes)? {
        decode::<LittleEndian>(&bytes)
    } else {
        decode::<BigEndian>(&bytes)
    }
}

pub fn read_nifti_header(path: &Path) -> Result<VolumeHeader> {
    let bytes = read_file(path)?;
    if header_bytes_order(&bytes)? {
        parse_header::<LittleEndian>(&bytes).map(|(h, _)| h)
    } else {
        parse_header::<BigEndian>(&bytes).map(|(h, _)| h)
    }
}

/// Encode as little-endian float32 NIfTI-1 bytes (uncompressed).
pub fn encode_nifti(v: &Volume) -> Vec<u8> {
    let mut out = vec![0u8; VOX_OFFSET + v.len() * 4];
    let h = &mut out[..HEADER_SIZE];
    LittleEndian::write_i32(&mut h[offsets::SIZEOF_HDR..], HEADER_SIZE as i32);
    let [nx, ny, nz] = v.dims();
    for (k, d) in [3, nx as i16, ny as i16, nz as i16, 1, 1, 1, 1].into_iter().enumerate() {
        LittleEndian::write_i16(&mut h[offsets::DIM + 2 * k..], d);
    }
    LittleEndian::write_i16(&mut h[offsets::DATATYPE..], 16);
    LittleEndian::write_i16(&mut h[offsets::BITPIX..], 32);
    let [sx, sy, sz] = v.spacing();
    for (k, p) in [1.0, sx as f32, sy as f32, sz as f32, 0.0, 0.0, 0.0, 0.0]
        .into_iter()
        .enumerate()
    {
        LittleEndian::write_f32(&mut h[offsets::PIXDIM + 4 * k..], p);
    }
    LittleEndian::write_f32(&mut h[offsets::VOX_OFFSET..], VOX_OFFSET as f32);
    LittleEndian::write_f32(&mut h[offsets::SCL_SLOPE..], 1.0);
    LittleEndian::write_f32(&mut h[offsets::SCL_INTER..], 0.0);
    h[offsets::XYZT_UNITS] = 2; // millimetres
    LittleEndian::write_i16(&mut h[offsets::QFORM_CODE..], 1);
    h[offsets::MAGIC..offsets::MAGIC + 4].copy_from_slice(b"n+1\0");
    LittleEndian::write_f32_into(v.data(), &mut out[VOX_OFFSET..]);
    out
}

/// Write float32 NIfTI-1; gzip-compressed when the path ends in `.gz`.
pub fn write_nifti(v: &Volume, path: &Path) -> Result<()> {
    if v.dims().iter().any(|&d| d > i16::MAX as usize) {
        return Err(Error::param("dims", "NIfTI-1 dims must fit in i16"));
    }
    let bytes = encode_nifti(v);
    let gz = path.extension().is_some_and(|e| e == "gz");
    let payload = if gz {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?
    } else {
        bytes
    };
    std::fs::write(path, payload).map_err(|e| Error::io(path, e))
}
