//! Alpha blending of simulated tumors into normal volumes, and full sample
//! generation from a pool of normal images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::{generate_mask, ShapeParams, ShapeRecord};
use crate::texture::{transform_pipeline, tumor_texture, TextureParams, TextureRecord};
use crate::volume::{same_dims, BinaryMask, Volume};

/// Upper bound on tumors per sample.
pub const MAX_TUMORS: usize = 15;

/// `(1 - alpha m) x_n + alpha m s`, evaluated in f64. Voxels with `m = 0`
/// copy `x_n` bit-for-bit.
pub fn blend(x_n: &Volume, s: &Volume, m: &BinaryMask, alpha: f64) -> Result<Volume> {
    check_alpha(alpha)?;
    same_dims(x_n.dims(), s.dims())?;
    same_dims(x_n.dims(), m.dims())?;
    if alpha == 0.0 {
        return Ok(x_n.clone());
    }
    let out = x_n
        .data()
        .iter()
        .zip(s.data())
        .zip(m.data())
        .map(|((&xn, &sv), &mv)| {
            if mv == 0 {
                xn
            } else {
                ((1.0 - alpha) * xn as f64 + alpha * sv as f64) as f32
            }
        })
        .collect();
    Volume::new(x_n.dims(), x_n.spacing(), out)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("{alpha} outside [0, 1]")));
    }
    Ok(())
}

/// Blend several tumors. Where masks overlap the later tumor wins: the voxel
/// is blended from `x_n` with the last tumor covering it. Returns the blended
/// volume and the union mask.
pub fn compose_multi(
    x_n: &Volume,
    tumors: &[(BinaryMask, Volume)],
    alphas: &[f64],
) -> Result<(Volume, BinaryMask)> {
    if tumors.is_empty() || tumors.len() > MAX_TUMORS {
        return Err(Error::param(
            "tumors",
            format!("count {} outside 1..={MAX_TUMORS}", tumors.len()),
        ));
    }
    if alphas.len() != tumors.len() {
        return Err(Error::SizeMismatch {
            expected: tumors.len(),
            found: alphas.len(),
        });
    }
    for ((m, s), &a) in tumors.iter().zip(alphas) {
        check_alpha(a)?;
        same_dims(x_n.dims(), m.dims())?;
        same_dims(x_n.dims(), s.dims())?;
    }
    let mut out = x_n.data().to_vec();
    let mut union = vec![0u8; x_n.len()];
    for ((m, s), &a) in tumors.iter().zip(alphas) {
        for (i, _) in m.data().iter().enumerate().filter(|(_, &v)| v == 1) {
            out[i] = ((1.0 - a) * x_n.data()[i] as f64 + a * s.data()[i] as f64) as f32;
            union[i] = 1;
        }
    }
    Ok((
        Volume::new(x_n.dims(), x_n.spacing(), out)?,
        BinaryMask::from_parts_unchecked(x_n.dims(), union),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Brain,
    Liver,
    Custom,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brain" => Ok(Self::Brain),
            "liver" => Ok(Self::Liver),
            "custom" => Ok(Self::Custom),
            other => Err(Error::param("preset", format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub preset: Preset,
    pub shape: ShapeParams,
    pub texture: TextureParams,
    /// Inclusive range for the number of tumors K.
    pub tumor_count: (usize, usize),
    /// Uniform law for the per-sample alpha; `(a, a)` fixes it.
    pub alpha_range: (f64, f64),
    pub allow_self_donation: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self::brain()
    }
}

impl GeneratorConfig {
    pub fn brain() -> Self {
        Self {
            preset: Preset::Brain,
            shape: ShapeParams::default(),
            texture: TextureParams {
                ratio_range: (1.0, 3.0),
                ..TextureParams::default()
            },
            tumor_count: (1, 1),
            alpha_range: (0.5, 1.0),
            allow_self_donation: false,
        }
    }

    pub fn liver() -> Self {
        Self {
            preset: Preset::Liver,
            shape: ShapeParams {
                radius_range_mm: (2.0, 10.0),
                ..ShapeParams::default()
            },
            texture: TextureParams {
                ratio_range: (0.125, 0.5),
                ..TextureParams::default()
            },
            tumor_count: (1, MAX_TUMORS),
            ..Self::brain()
        }
    }

    pub fn for_preset(preset: Preset) -> Self {
        match preset {
            Preset::Brain => Self::brain(),
            Preset::Liver => Self::liver(),
            Preset::Custom => Self {
                preset: Preset::Custom,
                ..Self::brain()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        self.texture.validate()?;
        let (k0, k1) = self.tumor_count;
        if k0 < 1 || k0 > k1 || k1 > MAX_TUMORS {
            return Err(Error::param(
                "tumor_count",
                format!("need 1 <= lo <= hi <= {MAX_TUMORS}"),
            ));
        }
        match self.preset {
            Preset::Brain if self.tumor_count != (1, 1) => {
                return Err(Error::param("tumor_count", "brain preset uses exactly one tumor"))
            }
            _ => {}
        }
        let (a0, a1) = self.alpha_range;
        if !(0.0 <= a0 && a0 <= a1 && a1 <= 1.0) {
            return Err(Error::param("alpha_range", "need 0 <= lo <= hi <= 1"));
        }
        Ok(())
    }
}

/// Independent stream for sample `index` under `master_seed`.
pub fn sample_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Per-sample scalars drawn before any tumor is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub target: usize,
    pub donor: usize,
    pub tumor_count: usize,
    pub alpha: f64,
}

pub fn draw_plan<R: Rng + ?Sized>(config: &GeneratorConfig, pool_len: usize, rng: &mut R) -> Result<SamplePlan> {
    let min_pool = if config.allow_self_donation { 1 } else { 2 };
    if pool_len < min_pool {
        return Err(Error::param(
            "pool",
            format!("{pool_len} volumes; at least {min_pool} required"),
        ));
    }
    let target = rng.random_range(0..pool_len);
    let donor = if config.allow_self_donation {
        rng.random_range(0..pool_len)
    } else {
        let d = rng.random_range(0..pool_len - 1);
        if d >= target {
            d + 1
        } else {
            d
        }
    };
    let (k0, k1) = config.tumor_count;
    let tumor_count = rng.random_range(k0..=k1);
    let (a0, a1) = config.alpha_range;
    let alpha = if a0 == a1 { a0 } else { rng.random_range(a0..=a1) };
    Ok(SamplePlan {
        target,
        donor,
        tumor_count,
        alpha,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TumorRecord {
    pub shape: ShapeRecord,
    pub texture: TextureRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub preset: Preset,
    pub plan: SamplePlan,
    pub tumors: Vec<TumorRecord>,
}

/// Blended input, normal image, tumor layer and mask with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub x: Volume,
    pub x_n: Volume,
    pub s: Volume,
    pub m: BinaryMask,
    pub alpha: f64,
    pub record: SampleRecord,
}

/// Draw a target and donor from `pool`, simulate K tumors and blend them.
///
/// Tumor layers combine last-wins into one `s`; `m` is their union.
pub fn generate_sample<R: Rng + ?Sized>(
    pool: &[Volume],
    roi: Option<&BinaryMask>,
    config: &GeneratorConfig,
    rng: &mut R,
) -> Result<SyntheticSample> {
    config.validate()?;
    let plan = draw_plan(config, pool.len(), rng)?;
    let x_n = &pool[plan.target];
    let donor = &pool[plan.donor];
    same_dims(x_n.dims(), donor.dims())?;
    let grid = x_n.grid();
    let full;
    let centers = match roi {
        Some(r) => {
            same_dims(r.dims(), grid.dims)?;
            r
        }
        None => {
            full = BinaryMask::ones(grid.dims)?;
            &full
        }
    };

    let mut s = vec![0f32; x_n.len()];
    let mut m = vec![0u8; x_n.len()];
    let mut tumors = Vec::with_capacity(plan.tumor_count);
    for _ in 0..plan.tumor_count {
        let (mask, shape) = generate_mask(&config.shape, centers, &grid, rng)?;
        let (tex, texture) = transform_pipeline(donor, x_n, &config.texture, roi, rng)?;
        let layer = tumor_texture(&mask, &tex)?;
        for i in mask.indices() {
            s[i] = layer.data()[i];
            m[i] = 1;
        }
        tumors.push(TumorRecord { shape, texture });
    }
    let s = Volume::new(grid.dims, grid.spacing, s)?;
    let m = BinaryMask::from_parts_unchecked(grid.dims, m);
    let x = blend(x_n, &s, &m, plan.alpha)?;
    Ok(SyntheticSample {
        x,
        x_n: x_n.clone(),
        s,
        m,
        alpha: plan.alpha,
        record: SampleRecord {
            preset: config.preset,
            plan,
            tumors,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f32) -> Volume {
        Volume::filled([8; 3], [1.0; 3], v).unwrap()
    }

    #[test]
    fn blend_hand_case() {
        let x = blend(&constant(10.0), &constant(2.0), &BinaryMask::ones([8; 3]).unwrap(), 0.75).unwrap();
        assert!(x.data().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn blend_limits() {
        let xn = constant(10.0);
        let s = constant(2.0);
        let ones = BinaryMask::ones([8; 3]).unwrap();
        assert_eq!(blend(&xn, &s, &ones, 0.0).unwrap(), xn);
        assert_eq!(blend(&xn, &s, &ones, 1.0).unwrap(), s);
        assert_eq!(blend(&xn, &s, &BinaryMask::zeros([8; 3]).unwrap(), 0.6).unwrap(), xn);
        assert!(blend(&xn, &s, &ones, 1.5).is_err());
        assert!(blend(&xn, &s, &ones, -0.1).is_err());
    }

    #[test]
    fn multi_with_one_tumor_is_blend() {
        let xn = constant(3.0);
        let s = constant(7.0);
        let m = BinaryMask::from_fn([8; 3], |[x, _, _]| x < 3).unwrap();
        let (x, u) = compose_multi(&xn, &[(m.clone(), s.clone())], &[0.4]).unwrap();
        assert_eq!(x, blend(&xn, &s, &m, 0.4).unwrap());
        assert_eq!(u, m);
    }

    #[test]
    fn multi_disjoint_patches() {
        let xn = constant(3.0);
        let a = BinaryMask::from_fn([8; 3], |[x, _, _]| x < 3).unwrap();
        let b = BinaryMask::from_fn([8; 3], |[x, _, _]| x > 5).unwrap();
        let (x, u) = compose_multi(&xn, &[(a.clone(), constant(7.0)), (b.clone(), constant(1.0))], &[0.5, 1.0]).unwrap();
        assert_eq!(u.count(), a.count() + b.count());
        let xa = blend(&xn, &constant(7.0), &a, 0.5).unwrap();
        let xb = blend(&xn, &constant(1.0), &b, 1.0).unwrap();
        for i in 0..x.len() {
            let want = if a.get_linear(i) { xa.data()[i] } else { xb.data()[i] };
            assert_eq!(x.data()[i], want);
        }
    }

    #[test]
    fn multi_overlap_last_wins() {
        let xn = constant(3.0);
        let m = BinaryMask::from_fn([8; 3], |[x, y, _]| x < 4 && y < 4).unwrap();
        let (x, _) = compose_multi(&xn, &[(m.clone(), constant(7.0)), (m.clone(), constant(9.0))], &[1.0, 1.0]).unwrap();
        for i in m.indices() {
            assert_eq!(x.data()[i], 9.0);
        }
    }

    #[test]
    fn multi_count_limits() {
        let xn = constant(1.0);
        assert!(compose_multi(&xn, &[], &[]).is_err());
        let t = (BinaryMask::zeros([8; 3]).unwrap(), constant(1.0));
        let many = vec![t; MAX_TUMORS + 1];
        assert!(compose_multi(&xn, &many, &[1.0; MAX_TUMORS + 1]).is_err());
    }

    #[test]
    fn constant_pool_hand_case() {
        let pool = [constant(1.0), constant(3.0)];
        let mut config = GeneratorConfig::brain();
        config.shape.noise.amplitude = 0.0;
        config.alpha_range = (1.0, 1.0);
        config.texture.ratio_range = (2.0, 2.0);
        config.texture.enable_blur = false;
        config.texture.enable_elastic = false;
        for seed in 0..8 {
            let mut rng = sample_rng(seed, 0);
            let sample = generate_sample(&pool, None, &config, &mut rng).unwrap();
            let (inside, outside) = if sample.record.plan.target == 0 { (2.0 * 1.0 / 3.0 * 3.0, 1.0) } else { (2.0 * 3.0 / 1.0 * 1.0, 3.0) };
            assert!(sample.m.any());
            for i in 0..sample.x.len() {
                let v = sample.x.data()[i];
                if sample.m.get_linear(i) {
                    assert!((v as f64 - inside).abs() < 1e-6, "{v}");
                } else {
                    assert_eq!(v, outside);
                }
            }
        }
    }

    #[test]
    fn donor_differs_from_target() {
        let config = GeneratorConfig::brain();
        let mut rng = sample_rng(1, 2);
        for _ in 0..500 {
            let p = draw_plan(&config, 3, &mut rng).unwrap();
            assert_ne!(p.target, p.donor);
            assert!(p.donor < 3);
        }
        assert!(draw_plan(&config, 1, &mut rng).is_err());
        let solo = GeneratorConfig { allow_self_donation: true, ..config };
        assert_eq!(draw_plan(&solo, 1, &mut rng).unwrap().donor, 0);
    }

    #[test]
    fn streams_are_reproducible() {
        let pool = [constant(1.0), constant(2.0)];
        let config = GeneratorConfig::liver();
        let a = generate_sample(&pool, None, &config, &mut sample_rng(9, 4)).unwrap();
        let b = generate_sample(&pool, None, &config, &mut sample_rng(9, 4)).unwrap();
        let c = generate_sample(&pool, None, &config, &mut sample_rng(9, 5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.record, c.record);
    }

    #[test]
    fn brain_preset_rejects_multiple_tumors() {
        let config = GeneratorConfig { tumor_count: (1, 2), ..GeneratorConfig::brain() };
        assert!(config.validate().is_err());
        assert!(GeneratorConfig::liver().validate().is_ok());
    }
}
