//! Dense 3D containers, file formats and basic reductions.
//!
//! Linear order is x-fastest: `i = x + nx * (y + ny * z)`, the same order as a
//! NIfTI payload, so no transposition happens at the IO boundary.

pub mod nifti;
pub mod raw;
mod slice;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub use slice::{render_slice, Axis, SliceImage};

pub type Dims = [usize; 3];
pub type Spacing = [f64; 3];

pub(crate) fn check_dims(dims: Dims) -> Result<usize> {
    if dims.contains(&0) {
        return Err(Error::param("dims", format!("{dims:?} has a zero extent")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::param("dims", format!("{dims:?} overflows")))
}

pub(crate) fn check_spacing(spacing: Spacing) -> Result<()> {
    if spacing.iter().all(|s| s.is_finite() && *s > 0.0) {
        Ok(())
    } else {
        Err(Error::param("spacing", format!("{spacing:?} must be finite and > 0")))
    }
}

pub(crate) fn same_dims(a: Dims, b: Dims) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimsMismatch { left: a, right: b })
    }
}

#[inline]
pub fn linear_index(dims: Dims, x: usize, y: usize, z: usize) -> usize {
    x + dims[0] * (y + dims[1] * z)
}

#[inline]
pub fn coords(dims: Dims, i: usize) -> [usize; 3] {
    let x = i % dims[0];
    let yz = i / dims[0];
    [x, yz % dims[1], yz / dims[1]]
}

/// Voxel geometry shared by volumes and masks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: Dims,
    pub spacing: Spacing,
}

impl Grid {
    pub fn new(dims: Dims, spacing: Spacing) -> Result<Self> {
        check_dims(dims)?;
        check_spacing(spacing)?;
        Ok(Self { dims, spacing })
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Scalar intensity volume with physical voxel spacing (mm).
///
/// Every stored value is finite; constructors reject NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: Dims,
    spacing: Spacing,
    data: Vec<f32>,
}

impl Volume {
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<f32>) -> Result<Self> {
        let n = check_dims(dims)?;
        check_spacing(spacing)?;
        if data.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            dims,
            spacing,
            data,
        })
    }

    pub fn filled(dims: Dims, spacing: Spacing, value: f32) -> Result<Self> {
        let n = check_dims(dims)?;
        Self::new(dims, spacing, vec![value; n])
    }

    /// Build from a function of voxel coordinates.
    pub fn from_fn<F>(dims: Dims, spacing: Spacing, f: F) -> Result<Self>
    where
        F: Fn([usize; 3]) -> f32 + Sync + Send,
    {
        let n = check_dims(dims)?;
        let data = par::map_indexed(n, |i| f(coords(dims, i)));
        Self::new(dims, spacing, data)
    }

    pub(crate) fn from_parts_unchecked(dims: Dims, spacing: Spacing, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), dims.iter().product::<usize>());
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            dims,
            spacing,
            data,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn grid(&self) -> Grid {
        Grid {
            dims: self.dims,
            spacing: self.spacing,
        }
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[linear_index(self.dims, x, y, z)]
    }

    /// Same geometry, new values. Fails if `f` produces a non-finite value.
    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(f32) -> f32 + Sync + Send,
    {
        let data = par::map_indexed(self.len(), |i| f(self.data[i]));
        Self::new(self.dims, self.spacing, data)
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Result<Self> {
        check_spacing(spacing)?;
        self.spacing = spacing;
        Ok(self)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Dense {0, 1} voxel mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    dims: Dims,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(dims: Dims, data: Vec<u8>) -> Result<Self> {
        let n = check_dims(dims)?;
        if data.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|&v| v > 1) {
            return Err(Error::NotBinary {
                index,
                value: data[index] as f32,
            });
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Dims) -> Result<Self> {
        let n = check_dims(dims)?;
        Ok(Self {
            dims,
            data: vec![0; n],
        })
    }

    pub fn ones(dims: Dims) -> Result<Self> {
        let n = check_dims(dims)?;
        Ok(Self {
            dims,
            data: vec![1; n],
        })
    }

    pub fn from_fn<F>(dims: Dims, f: F) -> Result<Self>
    where
        F: Fn([usize; 3]) -> bool + Sync + Send,
    {
        let n = check_dims(dims)?;
        let data = par::map_indexed(n, |i| f(coords(dims, i)) as u8);
        Ok(Self { dims, data })
    }

    pub(crate) fn from_parts_unchecked(dims: Dims, data: Vec<u8>) -> Self {
        debug_assert!(data.iter().all(|&v| v <= 1));
        Self { dims, data }
    }

    /// Interpret a volume as a mask; every value must be exactly 0.0 or 1.0.
    pub fn from_volume(v: &Volume) -> Result<Self> {
        let mut data = Vec::with_capacity(v.len());
        for (index, &value) in v.data().iter().enumerate() {
            match value {
                0.0 => data.push(0),
                1.0 => data.push(1),
                _ => return Err(Error::NotBinary { index, value }),
            }
        }
        Ok(Self {
            dims: v.dims(),
            data,
        })
    }

    /// Voxels strictly above `threshold`.
    pub fn threshold(v: &Volume, threshold: f32) -> Self {
        Self {
            dims: v.dims(),
            data: v.data().iter().map(|&x| (x > threshold) as u8).collect(),
        }
    }

    pub fn to_volume(&self, spacing: Spacing) -> Result<Volume> {
        Volume::new(
            self.dims,
            spacing,
            self.data.iter().map(|&v| v as f32).collect(),
        )
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[linear_index(self.dims, x, y, z)] == 1
    }

    #[inline]
    pub fn get_linear(&self, i: usize) -> bool {
        self.data[i] == 1
    }

    pub fn count(&self) -> usize {
        self.data.iter().map(|&v| v as usize).sum()
    }

    pub fn any(&self) -> bool {
        self.data.contains(&1)
    }

    /// Linear indices of set voxels, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (v == 1).then_some(i))
            .collect()
    }

    pub fn or(&self, other: &BinaryMask) -> Result<Self> {
        same_dims(self.dims, other.dims)?;
        Ok(Self {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a | b)
                .collect(),
        })
    }

    pub fn and(&self, other: &BinaryMask) -> Result<Self> {
        same_dims(self.dims, other.dims)?;
        Ok(Self {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a & b)
                .collect(),
        })
    }

    pub fn complement(&self) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|&v| 1 - v).collect(),
        }
    }
}

/// Arithmetic mean over all voxels, or over the voxels of `region`.
///
/// Accumulates in f64 with a fixed reduction tree.
pub fn mean_intensity(v: &Volume, region: Option<&BinaryMask>) -> Result<f64> {
    match region {
        None => Ok(par::sum_indexed(v.len(), |i| v.data[i] as f64) / v.len() as f64),
        Some(m) => {
            same_dims(v.dims, m.dims)?;
            let count = m.count();
            if count == 0 {
                return Err(Error::EmptyRegion("mean_intensity region has no voxels"));
            }
            let sum = par::sum_indexed(v.len(), |i| {
                if m.data[i] == 1 {
                    v.data[i] as f64
                } else {
                    0.0
                }
            });
            Ok(sum / count as f64)
        }
    }
}

/// Population mean and standard deviation over all voxels.
pub fn mean_std(v: &Volume) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = par::sum_indexed(v.len(), |i| v.data[i] as f64) / n;
    let var = par::sum_indexed(v.len(), |i| {
        let d = v.data[i] as f64 - mean;
        d * d
    }) / n;
    (mean, var.sqrt())
}
