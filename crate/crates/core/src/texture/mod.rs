//! Tumor texture: elastic warp, blur and intensity matching of a donor image.

mod blur;
mod elastic;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use blur::{gaussian_blur, gaussian_kernel};
pub use elastic::{elastic_deform, make_displacement, DisplacementField, ElasticParams};

use crate::error::{Error, Result};
use crate::volume::{mean_intensity, same_dims, BinaryMask, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextureParams {
    /// Interval for the intensity ratio r. `(r, r)` fixes it.
    pub ratio_range: (f64, f64),
    pub blur_sigma_mm: (f64, f64),
    pub elastic: ElasticParams,
    pub enable_elastic: bool,
    pub enable_blur: bool,
    pub enable_linear: bool,
}

impl Default for TextureParams {
    fn default() -> Self {
        Self {
            ratio_range: (1.0, 3.0),
            blur_sigma_mm: (0.5, 1.5),
            elastic: ElasticParams::default(),
            enable_elastic: true,
            enable_blur: true,
            enable_linear: true,
        }
    }
}

impl TextureParams {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.ratio_range;
        if !(a.is_finite() && b.is_finite() && a > 0.0 && a <= b) {
            return Err(Error::param("ratio_range", "need 0 < a <= b"));
        }
        let (lo, hi) = self.blur_sigma_mm;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(Error::param("blur_sigma_mm", "need 0 < lo <= hi"));
        }
        self.elastic.validate()
    }

    /// Draw r uniformly on the open interval (a, b).
    pub fn sample_ratio<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (a, b) = self.ratio_range;
        if a == b {
            return a;
        }
        loop {
            let r = rng.random_range(a..b);
            if r != a {
                return r;
            }
        }
    }
}

/// Scalars drawn by one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureRecord {
    pub ratio: Option<f64>,
    pub blur_sigma_mm: Option<f64>,
    pub max_displacement: Option<f64>,
    /// Whether means were taken over a region rather than the whole volume.
    pub region_mean: bool,
    pub source_mean: Option<f64>,
    pub reference_mean: Option<f64>,
}

/// `r * Mean(x_ref) / Mean(x_src) * x_src`, means over `region` when given.
/// Output is rounded to f32 with the rounding residual diffused across the
/// region, so the stored mean matches the 64-bit identity to about one ulp / N.
pub fn linear_transform(
    x_src: &Volume,
    x_ref: &Volume,
    r: f64,
    region: Option<&BinaryMask>,
) -> Result<Volume> {
    Ok(linear_with_means(x_src, x_ref, r, region)?.0)
}

/// The scalar `r * Mean(x_ref) / Mean(x_src)` applied by [`linear_transform`].
pub fn linear_gain(x_src: &Volume, x_ref: &Volume, r: f64, region: Option<&BinaryMask>) -> Result<f64> {
    let (_, src_mean, ref_mean) = gain_parts(x_src, x_ref, r, region)?;
    Ok(r * (ref_mean / src_mean))
}

fn gain_parts(
    x_src: &Volume,
    x_ref: &Volume,
    r: f64,
    region: Option<&BinaryMask>,
) -> Result<(f64, f64, f64)> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::param("r", format!("{r} must be > 0")));
    }
    same_dims(x_src.dims(), x_ref.dims())?;
    let src_mean = mean_intensity(x_src, region)?;
    if src_mean == 0.0 {
        return Err(Error::param("x_src", "mean intensity is zero"));
    }
    let ref_mean = mean_intensity(x_ref, region)?;
    Ok((r * (ref_mean / src_mean), src_mean, ref_mean))
}

fn linear_with_means(
    x_src: &Volume,
    x_ref: &Volume,
    r: f64,
    region: Option<&BinaryMask>,
) -> Result<(Volume, f64, f64)> {
    let (gain, src_mean, ref_mean) = gain_parts(x_src, x_ref, r, region)?;
    // Error-diffusion rounding: carrying each voxel's f32 rounding residual
    // into the next keeps the region sum within one ulp of the f64 products.
    let mut carry = 0.0f64;
    let out = x_src
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let t = gain * v as f64;
            if region.is_some_and(|m| !m.get_linear(i)) {
                return t as f32;
            }
            let y = (t + carry) as f32;
            carry = t + carry - y as f64;
            y
        })
        .collect();
    Ok((
        Volume::from_parts_unchecked(x_src.dims(), x_src.spacing(), out),
        src_mean,
        ref_mean,
    ))
}

/// Elastic warp, then blur, then the linear transform against `x_ref`.
/// Disabled stages pass their input through unchanged.
pub fn transform_pipeline<R: Rng + ?Sized>(
    x_src: &Volume,
    x_ref: &Volume,
    params: &TextureParams,
    region: Option<&BinaryMask>,
    rng: &mut R,
) -> Result<(Volume, TextureRecord)> {
    params.validate()?;
    same_dims(x_src.dims(), x_ref.dims())?;
    let mut record = TextureRecord {
        ratio: None,
        blur_sigma_mm: None,
        max_displacement: None,
        region_mean: region.is_some(),
        source_mean: None,
        reference_mean: None,
    };
    let mut cur = x_src.clone();
    if params.enable_elastic {
        let field = make_displacement(&params.elastic, cur.dims(), rng)?;
        record.max_displacement = Some(field.max_magnitude());
        cur = elastic_deform(&cur, &field)?;
    }
    if params.enable_blur {
        let (lo, hi) = params.blur_sigma_mm;
        let sigma = if lo == hi { lo } else { rng.random_range(lo..hi) };
        record.blur_sigma_mm = Some(sigma);
        cur = gaussian_blur(&cur, sigma)?;
    }
    if params.enable_linear {
        let r = params.sample_ratio(rng);
        let (out, sm, rm) = linear_with_means(&cur, x_ref, r, region)?;
        record.ratio = Some(r);
        record.source_mean = Some(sm);
        record.reference_mean = Some(rm);
        cur = out;
    }
    Ok((cur, record))
}

/// `s = m * tex`: the texture inside the mask, zero elsewhere.
pub fn tumor_texture(m: &BinaryMask, tex: &Volume) -> Result<Volume> {
    same_dims(m.dims(), tex.dims())?;
    let out = m
        .data()
        .iter()
        .zip(tex.data())
        .map(|(&b, &t)| if b == 1 { t } else { 0.0 })
        .collect();
    Ok(Volume::from_parts_unchecked(tex.dims(), tex.spacing(), out))
}
