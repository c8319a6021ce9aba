//! Brute-force reference implementations used by tests.
//!
//! Each routine here is written independently of the production path it
//! checks: no shared helpers beyond the container types.

use crate::shape::TriMesh;
use crate::volume::{BinaryMask, Grid, Volume};

/// Straight-line simplex noise: sums the radius²-0.5 kernel of every lattice
/// point in the surrounding 4x4x4 skewed block, with its own permutation.
pub fn noise_lattice_sum(p: [f64; 3], seed: u64) -> f64 {
    let mut state = seed;
    let mut next = || {
        state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    };
    let mut table: Vec<usize> = (0..256).collect();
    for i in (1..256usize).rev() {
        let j = (next() % (i as u64 + 1)) as usize;
        table.swap(i, j);
    }
    let grads: [[f64; 3]; 12] = [
        [1., 1., 0.], [-1., 1., 0.], [1., -1., 0.], [-1., -1., 0.],
        [1., 0., 1.], [-1., 0., 1.], [1., 0., -1.], [-1., 0., -1.],
        [0., 1., 1.], [0., -1., 1.], [0., 1., -1.], [0., -1., -1.],
    ];
    let skew = (p[0] + p[1] + p[2]) / 3.0;
    let base = [(p[0] + skew).floor(), (p[1] + skew).floor(), (p[2] + skew).floor()];
    let mut total = 0.0;
    for a in -1..=2 {
        for b in -1..=2 {
            for c in -1..=2 {
                let l = [base[0] + a as f64, base[1] + b as f64, base[2] + c as f64];
                let unskew = (l[0] + l[1] + l[2]) / 6.0;
                let d = [p[0] - (l[0] - unskew), p[1] - (l[1] - unskew), p[2] - (l[2] - unskew)];
                let w = 0.5 - (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
                if w <= 0.0 {
                    continue;
                }
                let li = l.map(|v| (v as i64).rem_euclid(256) as usize);
                let h = table[(li[0] + table[(li[1] + table[li[2]]) % 256]) % 256] % 12;
                let g = grads[h];
                total += w.powi(4) * (g[0] * d[0] + g[1] * d[1] + g[2] * d[2]);
            }
        }
    }
    (76.0 * total).clamp(-1.0, 1.0)
}

/// Octave sum matching `Simplex::fractal` semantics, on top of the lattice sum.
pub fn fractal_lattice_sum(p: [f64; 3], seed: u64, frequency: f64, octaves: u32, persistence: f64) -> f64 {
    (0..octaves)
        .map(|k| {
            let f = frequency * 2f64.powi(k as i32);
            persistence.powi(k as i32) * noise_lattice_sum([p[0] * f, p[1] * f, p[2] * f], seed)
        })
        .sum()
}

/// Inside/outside by crossing parity along a fixed skew ray, against every face.
pub fn voxelize_ray_parity(mesh: &TriMesh, grid: &Grid) -> BinaryMask {
    let dir = {
        let d: [f64; 3] = [0.8127, 0.4389, 0.3835];
        let n = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let n = n.sqrt();
        [d[0] / n, d[1] / n, d[2] / n]
    };
    let tris: Vec<[[f64; 3]; 3]> = mesh
        .faces
        .iter()
        .map(|f| f.map(|i| mesh.vertices[i as usize]))
        .collect();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in &mesh.vertices {
        for k in 0..3 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    BinaryMask::from_fn(grid.dims, |[x, y, z]| {
        let o = [
            x as f64 * grid.spacing[0],
            y as f64 * grid.spacing[1],
            z as f64 * grid.spacing[2],
        ];
        // Outside the box every ray crossing count is even.
        if (0..3).any(|k| o[k] < lo[k] || o[k] > hi[k]) {
            return false;
        }
        let mut crossings = 0usize;
        for [a, b, c] in &tris {
            // Plane hit, then same-side tests against the three edges.
            let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let ac = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [
                ab[1] * ac[2] - ab[2] * ac[1],
                ab[2] * ac[0] - ab[0] * ac[2],
                ab[0] * ac[1] - ab[1] * ac[0],
            ];
            let denom = n[0] * dir[0] + n[1] * dir[1] + n[2] * dir[2];
            if denom == 0.0 {
                continue;
            }
            let t = (n[0] * (a[0] - o[0]) + n[1] * (a[1] - o[1]) + n[2] * (a[2] - o[2])) / denom;
            if t <= 0.0 {
                continue;
            }
            let q = [o[0] + t * dir[0], o[1] + t * dir[1], o[2] + t * dir[2]];
            let edge_ok = |u: &[f64; 3], v: &[f64; 3]| {
                let e = [v[0] - u[0], v[1] - u[1], v[2] - u[2]];
                let w = [q[0] - u[0], q[1] - u[1], q[2] - u[2]];
                let cr = [
                    e[1] * w[2] - e[2] * w[1],
                    e[2] * w[0] - e[0] * w[2],
                    e[0] * w[1] - e[1] * w[0],
                ];
                cr[0] * n[0] + cr[1] * n[1] + cr[2] * n[2] >= 0.0
            };
            if edge_ok(a, b) && edge_ok(b, c) && edge_ok(c, a) {
                crossings += 1;
            }
        }
        crossings % 2 == 1
    })
    .expect("grid dims are valid")
}

/// (tp, fp, tn, fn) by visiting every coordinate.
pub fn confusion_exhaustive(pred: &BinaryMask, gt: &BinaryMask) -> (usize, usize, usize, usize) {
    let [nx, ny, nz] = pred.dims();
    let (mut tp, mut fp, mut tn, mut fnn) = (0, 0, 0, 0);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                match (pred.get(x, y, z), gt.get(x, y, z)) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, false) => tn += 1,
                    (false, true) => fnn += 1,
                }
            }
        }
    }
    (tp, fp, tn, fnn)
}

fn surface_points(m: &BinaryMask) -> Vec<[usize; 3]> {
    let [nx, ny, nz] = m.dims();
    let mut out = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if !m.get(x, y, z) {
                    continue;
                }
                let border = x == 0 || y == 0 || z == 0 || x + 1 == nx || y + 1 == ny || z + 1 == nz;
                let open = border
                    || !m.get(x - 1, y, z)
                    || !m.get(x + 1, y, z)
                    || !m.get(x, y - 1, z)
                    || !m.get(x, y + 1, z)
                    || !m.get(x, y, z - 1)
                    || !m.get(x, y, z + 1);
                if open {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

/// Percentile Hausdorff distance by scanning all surface pairs.
/// `percent` uses the nearest-rank rule per direction; `None` if a surface is empty.
pub fn hausdorff_all_pairs(pred: &BinaryMask, gt: &BinaryMask, spacing: [f64; 3], percent: u32) -> Option<f64> {
    let a = surface_points(pred);
    let b = surface_points(gt);
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let directed = |from: &[[usize; 3]], to: &[[usize; 3]]| -> f64 {
        let mut d: Vec<f64> = from
            .iter()
            .map(|p| {
                to.iter()
                    .map(|q| {
                        let dx = (p[0] as f64 - q[0] as f64) * spacing[0];
                        let dy = (p[1] as f64 - q[1] as f64) * spacing[1];
                        let dz = (p[2] as f64 - q[2] as f64) * spacing[2];
                        dx * dx + dy * dy + dz * dz
                    })
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .collect();
        d.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let rank = (percent as usize * d.len()).div_ceil(100).max(1);
        d[rank - 1]
    };
    Some(directed(&a, &b).max(directed(&b, &a)))
}

/// Dense 3D convolution with clamp-to-edge sampling; `kernel` is odd-sized,
/// indexed x-fastest, centred.
pub fn dense_convolve(x: &Volume, kernel: &[f64], ksize: [usize; 3]) -> Vec<f64> {
    let [nx, ny, nz] = x.dims();
    let half = ksize.map(|k| (k / 2) as i64);
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut out = Vec::with_capacity(x.len());
    for z in 0..nz as i64 {
        for y in 0..ny as i64 {
            for xx in 0..nx as i64 {
                let mut acc = 0.0;
                for kz in 0..ksize[2] as i64 {
                    for ky in 0..ksize[1] as i64 {
                        for kx in 0..ksize[0] as i64 {
                            let w = kernel[(kx + ksize[0] as i64 * (ky + ksize[1] as i64 * kz)) as usize];
                            let v = x.get(
                                clamp(xx + kx - half[0], nx),
                                clamp(y + ky - half[1], ny),
                                clamp(z + kz - half[2], nz),
                            );
                            acc += w * v as f64;
                        }
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

/// Central difference `(f(x + h e_i) - f(x - h e_i)) / 2h` for coordinate `i`.
pub fn central_difference<F>(f: F, x: &[f64], i: usize, h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let mut xp = x.to_vec();
    xp[i] += h;
    let mut xm = x.to_vec();
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}
