//! Smooth synthetic "normal" volumes for demos and tests.

use crate::error::Result;
use crate::shape::Simplex;
use crate::volume::{Dims, Spacing, Volume};

/// Ellipsoidal organ of intensity about 1.0 on a 0.2 background, with
/// low-frequency texture. Strictly positive; deterministic in `seed`.
pub fn phantom(dims: Dims, spacing: Spacing, seed: u64) -> Result<Volume> {
    let noise = Simplex::new(seed);
    let half = dims.map(|n| (n as f64 - 1.0) / 2.0);
    Volume::from_fn(dims, spacing, |[x, y, z]| {
        let p = [x as f64, y as f64, z as f64];
        let r2: f64 = (0..3)
            .map(|k| {
                let d = (p[k] - half[k]) / (0.45 * dims[k] as f64).max(0.5);
                d * d
            })
            .sum();
        let organ = 0.8 / (1.0 + (8.0 * (r2.sqrt() - 1.0)).exp());
        let q = [p[0] * 0.15, p[1] * 0.15, p[2] * 0.15];
        (0.2 + organ + 0.08 * noise.sample(q) + 0.1) as f32
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_and_deterministic() {
        let a = phantom([12, 10, 8], [1.0; 3], 3).unwrap();
        assert_eq!(a, phantom([12, 10, 8], [1.0; 3], 3).unwrap());
        assert_ne!(a, phantom([12, 10, 8], [1.0; 3], 4).unwrap());
        let (lo, hi) = a.min_max();
        assert!(lo > 0.0 && hi < 1.5);
        assert!(a.get(6, 5, 4) > a.get(0, 0, 0));
    }
}
