//! Tumor shape simulation: icosphere, simplex-noise perturbation, random
//! rotation/scaling, and voxelization into a binary mask.

mod mesh;
pub mod noise;
mod transform;
mod voxelize;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::digest::digest64_hex;
use crate::error::{Error, Result};
use crate::volume::{coords, BinaryMask, Grid};

pub use mesh::{icosphere, TriMesh, Vec3, MAX_LEVEL};
pub use noise::{simplex_noise, NoiseParams, Simplex};
pub use transform::{perturb_mesh, place_mesh, Quaternion};
pub use voxelize::{voxelize, RadialIndex};


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationSpec {
    Random,
    Fixed(Quaternion),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub subdivision_level: u32,
    pub radius_range_mm: (f64, f64),
    /// Per-axis scale factors are drawn independently, log-uniform in this range.
    pub scale_range: (f64, f64),
    pub rotation: RotationSpec,
    /// Surface noise; `seed` is ignored here and drawn per shape.
    pub noise: NoiseParams,
    pub clip_to_roi: bool,
}

impl Default for ShapeParams {
    fn default() -> Self {
        Self {
            subdivision_level: 3,
            radius_range_mm: (4.0, 16.0),
            scale_range: (0.75, 4.0 / 3.0),
            rotation: RotationSpec::Random,
            noise: NoiseParams::default(),
            clip_to_roi: false,
        }
    }
}

impl ShapeParams {
    pub fn validate(&self) -> Result<()> {
        if self.subdivision_level > MAX_LEVEL {
            return Err(Error::param("subdivision_level", format!("must be <= {MAX_LEVEL}")));
        }
        let (r0, r1) = self.radius_range_mm;
        if !(r0 > 0.0 && r0 <= r1 && r1.is_finite()) {
            return Err(Error::param("radius_range_mm", "need 0 < r_min <= r_max"));
        }
        let (s0, s1) = self.scale_range;
        if !(s0 > 0.0 && s0 <= s1 && s1.is_finite()) {
            return Err(Error::param("scale_range", "need 0 < lo <= hi"));
        }
        if let RotationSpec::Fixed(q) = self.rotation {
            if !q.is_unit() {
                return Err(Error::param("rotation", "quaternion must be normalized"));
            }
        }
        self.noise.validate()?;
        if self.noise.amplitude * self.noise.octave_bound() >= 1.0 {
            return Err(Error::param("noise.amplitude", "amplitude x octave bound must be < 1"));
        }
        Ok(())
    }
}

/// Every sampled quantity of one generated shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeRecord {
    pub center_voxel: [usize; 3],
    pub radius_mm: f64,
    pub scale: [f64; 3],
    pub rotation: Quaternion,
    pub subdivision_level: u32,
    pub noise: NoiseParams,
    /// 64-bit digest of the perturbed unit-mesh radii, for drift detection.
    pub radii_digest: String,
    pub voxel_count: usize,
}

/// Uniform draw over the set voxels of `roi`.
pub fn sample_center<R: Rng + ?Sized>(roi: &BinaryMask, rng: &mut R) -> Result<[usize; 3]> {
    let set = roi.indices();
    if set.is_empty() {
        return Err(Error::EmptyRegion("region of interest has no voxels"));
    }
    let pick = set[rng.random_range(0..set.len())];
    Ok(coords(roi.dims(), pick))
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn radii_digest(mesh: &TriMesh) -> String {
    let bytes: Vec<u8> = mesh.radii.iter().flat_map(|r| r.to_le_bytes()).collect();
    digest64_hex(&bytes)
}

/// Centre → icosphere → perturb → rotate/scale/place → voxelize.
pub fn generate_mask<R: Rng + ?Sized>(
    params: &ShapeParams,
    roi: &BinaryMask,
    grid: &Grid,
    rng: &mut R,
) -> Result<(BinaryMask, ShapeRecord)> {
    params.validate()?;
    crate::volume::same_dims(roi.dims(), grid.dims)?;
    let center_voxel = sample_center(roi, rng)?;
    let radius_mm = uniform(rng, params.radius_range_mm);
    let (s0, s1) = params.scale_range;
    let scale: [f64; 3] =
        std::array::from_fn(|_| uniform(rng, (s0.ln(), s1.ln())).exp());
    let rotation = match params.rotation {
        RotationSpec::Random => Quaternion::random(rng),
        RotationSpec::Fixed(q) => q,
    };
    let noise = NoiseParams {
        seed: rng.random(),
        ..params.noise
    };

    let unit = perturb_mesh(&icosphere(params.subdivision_level)?, &noise)?;
    let center_mm = std::array::from_fn(|k| center_voxel[k] as f64 * grid.spacing[k]);
    let placed = place_mesh(&unit, center_mm, radius_mm, scale, rotation)?;
    let mut mask = voxelize(&placed, grid)?;
    if params.clip_to_roi {
        mask = mask.and(roi)?;
    }
    let record = ShapeRecord {
        center_voxel,
        radius_mm,
        scale,
        rotation,
        subdivision_level: params.subdivision_level,
        noise,
        radii_digest: radii_digest(&unit),
        voxel_count: mask.count(),
    };
    Ok((mask, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singleton_roi_always_returns_its_voxel() {
        let roi = BinaryMask::from_fn([5, 4, 3], |p| p == [3, 1, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_center(&roi, &mut rng).unwrap(), [3, 1, 2]);
        }
    }

    #[test]
    fn empty_roi_is_an_error() {
        let roi = BinaryMask::zeros([4; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(sample_center(&roi, &mut rng), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn center_sampling_is_uniform() {
        // 10 000 draws over 512 voxels: expected 19.53 per voxel, binomial
        // sigma sqrt(n p (1 - p)) = 4.415; every count must sit within 5 sigma.
        let roi = BinaryMask::ones([8; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = vec![0usize; 512];
        for _ in 0..10_000 {
            let [x, y, z] = sample_center(&roi, &mut rng).unwrap();
            counts[crate::volume::linear_index([8; 3], x, y, z)] += 1;
        }
        let p: f64 = 1.0 / 512.0;
        let mean = 10_000.0 * p;
        let sigma = (10_000.0 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!((c as f64 - mean).abs() <= 5.0 * sigma, "{c}");
        }
    }

    #[test]
    fn two_millimetre_sphere_volume() {
        let params = ShapeParams {
            radius_range_mm: (2.0, 2.0),
            scale_range: (1.0, 1.0),
            noise: NoiseParams { amplitude: 0.0, ..Default::default() },
            subdivision_level: 4,
            ..Default::default()
        };
        let grid = Grid::new([16; 3], [1.0; 3]).unwrap();
        let roi = BinaryMask::from_fn([16; 3], |[x, y, z]| (6..10).contains(&x) && (6..10).contains(&y) && (6..10).contains(&z)).unwrap();
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * 8.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let (mask, rec) = generate_mask(&params, &roi, &grid, &mut rng).unwrap();
            // The centre sits on a voxel centre, so the six axis neighbours at
            // exactly 2 mm lie on or outside the inscribed polyhedron: the
            // 27 lattice points with |p| < 2 remain.
            assert_eq!(mask.count(), 27);
            assert!((mask.count() as f64 - analytic).abs() <= 0.2 * analytic);
            assert!(mask.get(rec.center_voxel[0], rec.center_voxel[1], rec.center_voxel[2]));
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let params = ShapeParams { radius_range_mm: (2.0, 5.0), ..Default::default() };
        let grid = Grid::new([20; 3], [1.0, 1.2, 0.8]).unwrap();
        let roi = BinaryMask::ones(grid.dims).unwrap();
        let run = || generate_mask(&params, &roi, &grid, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        let (a, ra) = run();
        let (b, rb) = run();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        let (c, _) = crate::par::with_workers(1, run);
        assert_eq!(a, c);
    }

    #[test]
    fn clip_to_roi_restricts_mask() {
        let params = ShapeParams { radius_range_mm: (5.0, 5.0), clip_to_roi: true, ..Default::default() };
        let grid = Grid::new([16; 3], [1.0; 3]).unwrap();
        let roi = BinaryMask::from_fn(grid.dims, |[x, _, _]| x < 8).unwrap();
        let (mask, _) = generate_mask(&params, &roi, &grid, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert!(mask.indices().iter().all(|&i| roi.get_linear(i)));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let bad = [
            ShapeParams { radius_range_mm: (3.0, 2.0), ..Default::default() },
            ShapeParams { radius_range_mm: (0.0, 2.0), ..Default::default() },
            ShapeParams { scale_range: (0.0, 1.0), ..Default::default() },
            ShapeParams { subdivision_level: 7, ..Default::default() },
            ShapeParams {
                rotation: RotationSpec::Fixed(Quaternion { w: 2.0, x: 0.0, y: 0.0, z: 0.0 }),
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }
}
