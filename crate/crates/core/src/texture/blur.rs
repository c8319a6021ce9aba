//! Separable Gaussian smoothing with clamp-to-edge borders.

use crate::error::{Error, Result};
use crate::par;
use crate::volume::{Dims, Volume};

/// Normalized 1D kernel truncated at `ceil(3 sigma)`; `sigma == 0` gives `[1.0]`.
pub fn gaussian_kernel(sigma_vox: f64) -> Vec<f64> {
    if sigma_vox == 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma_vox).ceil() as i64;
    let w: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma_vox * sigma_vox)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

fn convolve_axis(src: &[f64], dims: Dims, axis: usize, kernel: &[f64]) -> Vec<f64> {
    if kernel.len() == 1 {
        return src.to_vec();
    }
    let half = (kernel.len() / 2) as i64;
    let stride = match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    };
    let n = dims[axis] as i64;
    par::map_indexed(src.len(), |i| {
        let pos = ((i / stride) % dims[axis]) as i64;
        let base = i - pos as usize * stride;
        let mut acc = 0.0;
        for (k, w) in kernel.iter().enumerate() {
            let q = (pos + k as i64 - half).clamp(0, n - 1) as usize;
            acc += w * src[base + q * stride];
        }
        acc
    })
}

/// Blur an f64 buffer with per-axis sigmas given in voxels.
pub(crate) fn blur_buffer(data: &[f64], dims: Dims, sigma_vox: [f64; 3]) -> Vec<f64> {
    let mut buf = data.to_vec();
    for axis in 0..3 {
        buf = convolve_axis(&buf, dims, axis, &gaussian_kernel(sigma_vox[axis]));
    }
    buf
}

/// Gaussian blur with `sigma_mm` converted to voxels per axis via the spacing.
pub fn gaussian_blur(x: &Volume, sigma_mm: f64) -> Result<Volume> {
    if !(sigma_mm.is_finite() && sigma_mm >= 0.0) {
        return Err(Error::param("sigma_mm", format!("{sigma_mm} must be >= 0")));
    }
    if sigma_mm == 0.0 {
        return Ok(x.clone());
    }
    let sp = x.spacing();
    let sigma_vox = [sigma_mm / sp[0], sigma_mm / sp[1], sigma_mm / sp[2]];
    let out = blur_buffer(&x.to_f64(), x.dims(), sigma_vox);
    Ok(Volume::from_parts_unchecked(
        x.dims(),
        sp,
        out.into_iter().map(|v| v as f32).collect(),
    ))
}
