//! Smooth random displacement fields and backward trilinear warping.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::blur::blur_buffer;
use crate::error::{Error, Result};
use crate::par;
use crate::volume::{check_dims, coords, same_dims, Dims, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticParams {
    /// Control-point spacing in voxels.
    pub control_spacing: usize,
    /// Largest offset magnitude in voxels.
    pub max_displacement: f64,
    /// Smoothing applied to control offsets, in voxels.
    pub smoothing_sigma: f64,
}

impl Default for ElasticParams {
    fn default() -> Self {
        Self {
            control_spacing: 8,
            max_displacement: 3.0,
            smoothing_sigma: 2.0,
        }
    }
}

impl ElasticParams {
    pub fn validate(&self) -> Result<()> {
        if self.control_spacing < 4 {
            return Err(Error::param("elastic.control_spacing", "must be >= 4 voxels"));
        }
        if !(self.max_displacement.is_finite() && self.max_displacement >= 0.0) {
            return Err(Error::param("elastic.max_displacement", "must be >= 0"));
        }
        if self.max_displacement >= self.control_spacing as f64 {
            return Err(Error::param(
                "elastic.max_displacement",
                "must be smaller than the control spacing",
            ));
        }
        if !(self.smoothing_sigma.is_finite() && self.smoothing_sigma >= 0.0) {
            return Err(Error::param("elastic.smoothing_sigma", "must be >= 0"));
        }
        Ok(())
    }
}

/// Per-voxel offsets in voxel units, x-fastest like `Volume`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    dims: Dims,
    offsets: Vec<[f64; 3]>,
}

impl DisplacementField {
    pub fn new(dims: Dims, offsets: Vec<[f64; 3]>) -> Result<Self> {
        let n = check_dims(dims)?;
        if offsets.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: offsets.len(),
            });
        }
        if let Some(index) = offsets.iter().position(|o| o.iter().any(|c| !c.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { dims, offsets })
    }

    pub fn zeros(dims: Dims) -> Result<Self> {
        Self::constant(dims, [0.0; 3])
    }

    pub fn constant(dims: Dims, offset: [f64; 3]) -> Result<Self> {
        let n = check_dims(dims)?;
        Self::new(dims, vec![offset; n])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn offsets(&self) -> &[[f64; 3]] {
        &self.offsets
    }

    pub fn max_magnitude(&self) -> f64 {
        self.offsets
            .iter()
            .map(|o| (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]).sqrt())
            .fold(0.0, f64::max)
    }
}

fn trilinear(data: &[f64], dims: Dims, p: [f64; 3]) -> f64 {
    let mut i0 = [0usize; 3];
    let mut i1 = [0usize; 3];
    let mut t = [0.0; 3];
    for k in 0..3 {
        let c = p[k].clamp(0.0, (dims[k] - 1) as f64);
        let f = c.floor();
        i0[k] = f as usize;
        i1[k] = (i0[k] + 1).min(dims[k] - 1);
        t[k] = c - f;
    }
    let at = |x: usize, y: usize, z: usize| data[x + dims[0] * (y + dims[1] * z)];
    // Clamped so rounding never leaves the [a, b] hull.
    let lerp = |a: f64, b: f64, t: f64| (a + t * (b - a)).clamp(a.min(b), a.max(b));
    let c00 = lerp(at(i0[0], i0[1], i0[2]), at(i1[0], i0[1], i0[2]), t[0]);
    let c10 = lerp(at(i0[0], i1[1], i0[2]), at(i1[0], i1[1], i0[2]), t[0]);
    let c01 = lerp(at(i0[0], i0[1], i1[2]), at(i1[0], i0[1], i1[2]), t[0]);
    let c11 = lerp(at(i0[0], i1[1], i1[2]), at(i1[0], i1[1], i1[2]), t[0]);
    lerp(lerp(c00, c10, t[1]), lerp(c01, c11, t[1]), t[2])
}

/// Backward warp: `out(p) = x(p + field(p))`, clamped to the grid.
pub fn elastic_deform(x: &Volume, field: &DisplacementField) -> Result<Volume> {
    same_dims(x.dims(), field.dims)?;
    let dims = x.dims();
    let src = x.to_f64();
    let out = par::map_indexed(x.len(), |i| {
        let p = coords(dims, i);
        let d = field.offsets[i];
        let q = [p[0] as f64 + d[0], p[1] as f64 + d[1], p[2] as f64 + d[2]];
        trilinear(&src, dims, q) as f32
    });
    Ok(Volume::from_parts_unchecked(dims, x.spacing(), out))
}

/// Random smooth field: uniform [-1, 1] control offsets, smoothed, upsampled
/// trilinearly and rescaled so the largest magnitude is `max_displacement`.
pub fn make_displacement<R: Rng + ?Sized>(
    params: &ElasticParams,
    dims: Dims,
    rng: &mut R,
) -> Result<DisplacementField> {
    params.validate()?;
    let n = check_dims(dims)?;
    if params.max_displacement == 0.0 {
        return DisplacementField::zeros(dims);
    }
    let sp = params.control_spacing;
    let cdims: Dims = std::array::from_fn(|k| ((dims[k] - 1).div_ceil(sp) + 1).max(2));
    let cn = cdims[0] * cdims[1] * cdims[2];
    let mut comps = [vec![0.0; cn], vec![0.0; cn], vec![0.0; cn]];
    for i in 0..cn {
        for c in comps.iter_mut() {
            c[i] = rng.random_range(-1.0..=1.0);
        }
    }
    let sigma = params.smoothing_sigma / sp as f64;
    let comps = comps.map(|c| blur_buffer(&c, cdims, [sigma; 3]));

    let mut offsets = par::map_indexed(n, |i| {
        let p = coords(dims, i);
        let q = p.map(|v| v as f64 / sp as f64);
        [
            trilinear(&comps[0], cdims, q),
            trilinear(&comps[1], cdims, q),
            trilinear(&comps[2], cdims, q),
        ]
    });
    let peak = offsets
        .iter()
        .map(|o| (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]).sqrt())
        .fold(0.0, f64::max);
    if peak > 0.0 {
        let s = params.max_displacement / peak;
        for o in offsets.iter_mut() {
            *o = o.map(|c| c * s);
            let m = (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]).sqrt();
            if m > params.max_displacement {
                *o = o.map(|c| c * (params.max_displacement / m));
            }
        }
    }
    DisplacementField::new(dims, offsets)
}
