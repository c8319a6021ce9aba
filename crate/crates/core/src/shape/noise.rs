//! Seeded 3D gradient simplex noise with fractal octave sums.
//!
//! The kernel radius² is 0.5, so each lattice contribution vanishes on the
//! faces of the simplices that own it and the field is continuous everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SKEW: f64 = 1.0 / 3.0;
const UNSKEW: f64 = 1.0 / 6.0;
const RADIUS_SQ: f64 = 0.5;
/// Maps the raw kernel sum onto roughly [-1, 1]; the result is clamped.
pub(crate) const SCALE: f64 = 76.0;

const GRADIENTS: [[f64; 3]; 12] = [
    [1.0, 1.0, 0.0],
    [-1.0, 1.0, 0.0],
    [1.0, -1.0, 0.0],
    [-1.0, -1.0, 0.0],
    [1.0, 0.0, 1.0],
    [-1.0, 0.0, 1.0],
    [1.0, 0.0, -1.0],
    [-1.0, 0.0, -1.0],
    [0.0, 1.0, 1.0],
    [0.0, -1.0, 1.0],
    [0.0, 1.0, -1.0],
    [0.0, -1.0, -1.0],
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub seed: u64,
    /// Cycles per unit length of the base octave.
    pub frequency: f64,
    /// Radial displacement as a fraction of the radius.
    pub amplitude: f64,
    pub octaves: u32,
    pub persistence: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            seed: 0,
            frequency: 2.0,
            amplitude: 0.35,
            octaves: 3,
            persistence: 0.5,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::param("noise.frequency", "must be > 0"));
        }
        if !(0.0..=0.9).contains(&self.amplitude) {
            return Err(Error::param("noise.amplitude", "must lie in [0, 0.9]"));
        }
        if !(1..=8).contains(&self.octaves) {
            return Err(Error::param("noise.octaves", "must lie in 1..=8"));
        }
        if !(self.persistence > 0.0 && self.persistence <= 1.0) {
            return Err(Error::param("noise.persistence", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Upper bound on |fractal noise|: the sum of octave weights.
    pub fn octave_bound(&self) -> f64 {
        (0..self.octaves).map(|k| self.persistence.powi(k as i32)).sum()
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Permutation-table simplex noise for one seed.
#[derive(Clone)]
pub struct Simplex {
    perm: [u8; 512],
}

impl std::fmt::Debug for Simplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simplex").finish_non_exhaustive()
    }
}

impl Simplex {
    pub fn new(seed: u64) -> Self {
        let mut table: [u8; 256] = std::array::from_fn(|i| i as u8);
        let mut state = seed;
        for i in (1..256).rev() {
            let j = (splitmix64(&mut state) % (i as u64 + 1)) as usize;
            table.swap(i, j);
        }
        let mut perm = [0u8; 512];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = table[i & 255];
        }
        Self { perm }
    }

    #[inline]
    fn gradient(&self, i: i64, j: i64, k: i64) -> &'static [f64; 3] {
        let (i, j, k) = ((i & 255) as usize, (j & 255) as usize, (k & 255) as usize);
        let h = self.perm[i + self.perm[j + self.perm[k] as usize] as usize];
        &GRADIENTS[h as usize % 12]
    }

    /// Single-octave noise in [-1, 1].
    pub fn sample(&self, p: [f64; 3]) -> f64 {
        let [x, y, z] = p;
        let s = (x + y + z) * SKEW;
        let (i, j, k) = ((x + s).floor(), (y + s).floor(), (z + s).floor());
        let t = (i + j + k) * UNSKEW;
        let d0 = [x - (i - t), y - (j - t), z - (k - t)];

        // Traversal order of the cube diagonal picks the containing simplex.
        let (o1, o2) = if d0[0] >= d0[1] {
            if d0[1] >= d0[2] {
                ([1, 0, 0], [1, 1, 0])
            } else if d0[0] >= d0[2] {
                ([1, 0, 0], [1, 0, 1])
            } else {
                ([0, 0, 1], [1, 0, 1])
            }
        } else if d0[1] < d0[2] {
            ([0, 0, 1], [0, 1, 1])
        } else if d0[0] < d0[2] {
            ([0, 1, 0], [0, 1, 1])
        } else {
            ([0, 1, 0], [1, 1, 0])
        };

        let (i, j, k) = (i as i64, j as i64, k as i64);
        let corners = [
            ([0i64, 0, 0], 0.0),
            (o1.map(|v| v as i64), UNSKEW),
            (o2.map(|v| v as i64), 2.0 * UNSKEW),
            ([1, 1, 1], 3.0 * UNSKEW),
        ];
        let mut sum = 0.0;
        for (off, shift) in corners {
            let d = [
                d0[0] - off[0] as f64 + shift,
                d0[1] - off[1] as f64 + shift,
                d0[2] - off[2] as f64 + shift,
            ];
            let falloff = RADIUS_SQ - (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
            if falloff > 0.0 {
                let g = self.gradient(i + off[0], j + off[1], k + off[2]);
                let f2 = falloff * falloff;
                sum += f2 * f2 * (g[0] * d[0] + g[1] * d[1] + g[2] * d[2]);
            }
        }
        (SCALE * sum).clamp(-1.0, 1.0)
    }

    /// Persistence-weighted octave sum at `frequency * 2^k`.
    pub fn fractal(&self, p: [f64; 3], params: &NoiseParams) -> f64 {
        let mut total = 0.0;
        let mut freq = params.frequency;
        let mut weight = 1.0;
        for _ in 0..params.octaves {
            total += weight * self.sample([p[0] * freq, p[1] * freq, p[2] * freq]);
            freq *= 2.0;
            weight *= params.persistence;
        }
        total
    }
}

/// Fractal noise at `p` for `params.seed`.
pub fn simplex_noise(p: [f64; 3], params: &NoiseParams) -> f64 {
    Simplex::new(params.seed).fractal(p, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(seed: u64) -> NoiseParams {
        NoiseParams {
            seed,
            frequency: 1.0,
            octaves: 1,
            ..NoiseParams::default()
        }
    }

    #[test]
    fn deterministic_in_point_and_seed() {
        let p = [0.3, -1.7, 2.25];
        let a = simplex_noise(p, &single(9));
        assert_eq!(a.to_bits(), simplex_noise(p, &single(9)).to_bits());
        assert_ne!(a, simplex_noise(p, &single(10)));
    }

    #[test]
    fn single_octave_within_unit_range() {
        let noise = Simplex::new(1234);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let p = [
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
            ];
            let v = noise.sample(p);
            assert!((-1.0..=1.0).contains(&v), "{v} at {p:?}");
        }
    }

    #[test]
    fn fractal_bounded_by_octave_weights() {
        let params = NoiseParams {
            seed: 3,
            octaves: 5,
            persistence: 0.7,
            ..NoiseParams::default()
        };
        let noise = Simplex::new(params.seed);
        let bound = params.octave_bound();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5_000 {
            let p = [rng.random(), rng.random(), rng.random::<f64>()].map(|v| v * 20.0 - 10.0);
            assert!(noise.fractal(p, &params).abs() <= bound);
        }
    }

    #[test]
    fn validation() {
        assert!(NoiseParams::default().validate().is_ok());
        for bad in [
            NoiseParams { frequency: 0.0, ..Default::default() },
            NoiseParams { amplitude: 0.95, ..Default::default() },
            NoiseParams { octaves: 0, ..Default::default() },
            NoiseParams { octaves: 9, ..Default::default() },
            NoiseParams { persistence: 0.0, ..Default::default() },
            NoiseParams { persistence: 1.5, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
