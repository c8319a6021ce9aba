//! Radial voxelization of star-shaped meshes.
//!
//! A voxel centre `p` is inside when `|p - c|` does not exceed the distance from
//! `c` to the surface along the ray `c -> p`. Candidate faces for a ray come
//! from a cube-map over directions; each cell lists every face whose angular
//! cap overlaps the cell's cap.

use super::mesh::{cross, dot, norm, normalize, scale, sub, TriMesh, Vec3};
use crate::error::{Error, Result};
use crate::par;
use crate::volume::{BinaryMask, Grid};

/// Cells per cube-map face edge.
const CELLS: usize = 8;
const BARY_EPS: f64 = 1e-12;
const NUDGE: f64 = 1e-7;

/// Ray from `origin` along `dir` against triangle `(a, b, c)`; returns the
/// ray parameter of the hit, boundaries inclusive up to `eps`.
#[inline]
pub(crate) fn ray_triangle(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3, eps: f64) -> Option<f64> {
    let e1 = sub(b, a);
    let e2 = sub(c, a);
    let pvec = cross(dir, e2);
    let det = dot(e1, pvec);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = sub(origin, a);
    let u = dot(tvec, pvec) * inv;
    if u < -eps || u > 1.0 + eps {
        return None;
    }
    let qvec = cross(tvec, e1);
    let v = dot(dir, qvec) * inv;
    if v < -eps || u + v > 1.0 + eps {
        return None;
    }
    let t = dot(e2, qvec) * inv;
    (t > 0.0).then_some(t)
}

fn cell_of(d: Vec3) -> usize {
    let ax = [d[0].abs(), d[1].abs(), d[2].abs()];
    let major = if ax[0] >= ax[1] && ax[0] >= ax[2] {
        0
    } else if ax[1] >= ax[2] {
        1
    } else {
        2
    };
    let face = major * 2 + (d[major] < 0.0) as usize;
    let (ua, va) = ((major + 1) % 3, (major + 2) % 3);
    let to_cell = |c: f64| (((c / ax[major] + 1.0) * 0.5 * CELLS as f64) as usize).min(CELLS - 1);
    (face * CELLS + to_cell(d[ua])) * CELLS + to_cell(d[va])
}

/// Direction-bucketed face index of a star-shaped mesh.
pub struct RadialIndex<'a> {
    mesh: &'a TriMesh,
    buckets: Vec<Vec<u32>>,
    /// Lower bound on the surface distance in every direction.
    inner_radius: f64,
    outer_radius: f64,
}

impl<'a> RadialIndex<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let c = mesh.center;
        let n_cells = 6 * CELLS * CELLS;

        // Angular caps of the cube-map cells.
        let mut cell_caps = Vec::with_capacity(n_cells);
        for face in 0..6 {
            let (major, sign) = (face / 2, if face % 2 == 0 { 1.0 } else { -1.0 });
            let (ua, va) = ((major + 1) % 3, (major + 2) % 3);
            for iu in 0..CELLS {
                for iv in 0..CELLS {
                    let at = |fu: f64, fv: f64| {
                        let mut p = [0.0; 3];
                        p[major] = sign;
                        p[ua] = (iu as f64 + fu) / CELLS as f64 * 2.0 - 1.0;
                        p[va] = (iv as f64 + fv) / CELLS as f64 * 2.0 - 1.0;
                        normalize(p)
                    };
                    let centre = at(0.5, 0.5);
                    let spread = [at(0.0, 0.0), at(1.0, 0.0), at(0.0, 1.0), at(1.0, 1.0)]
                        .iter()
                        .map(|&k| dot(centre, k).clamp(-1.0, 1.0).acos())
                        .fold(0.0, f64::max);
                    cell_caps.push((centre, spread));
                }
            }
        }

        let mut buckets = vec![Vec::new(); n_cells];
        let mut inner_radius = f64::INFINITY;
        for (fi, f) in mesh.faces.iter().enumerate() {
            let [a, b, cc] = f.map(|i| sub(mesh.vertices[i as usize], c));
            let n = cross(sub(b, a), sub(cc, a));
            let nn = norm(n);
            if nn > 0.0 {
                inner_radius = inner_radius.min(dot(n, a).abs() / nn);
            } else {
                inner_radius = 0.0;
            }
            let dirs = [a, b, cc].map(normalize);
            let sum = [
                dirs[0][0] + dirs[1][0] + dirs[2][0],
                dirs[0][1] + dirs[1][1] + dirs[2][1],
                dirs[0][2] + dirs[1][2] + dirs[2][2],
            ];
            let sn = norm(sum);
            let cap = (sn > 1e-9).then(|| {
                let centre = scale(sum, 1.0 / sn);
                let spread = dirs
                    .iter()
                    .map(|&d| dot(centre, d).clamp(-1.0, 1.0).acos())
                    .fold(0.0, f64::max);
                (centre, spread)
            });
            for (cell, &(cc_dir, cc_spread)) in cell_caps.iter().enumerate() {
                let hit = match cap {
                    Some((centre, spread)) if spread < std::f64::consts::FRAC_PI_2 => {
                        dot(centre, cc_dir).clamp(-1.0, 1.0).acos() <= spread + cc_spread + 1e-9
                    }
                    _ => true,
                };
                if hit {
                    buckets[cell].push(fi as u32);
                }
            }
        }
        if !inner_radius.is_finite() {
            inner_radius = 0.0;
        }
        Self {
            mesh,
            buckets,
            inner_radius,
            outer_radius: mesh.max_radius(),
        }
    }

    fn cast(&self, dir: Vec3) -> Option<f64> {
        let c = self.mesh.center;
        self.buckets[cell_of(dir)]
            .iter()
            .filter_map(|&fi| {
                let f = self.mesh.faces[fi as usize];
                let [a, b, cc] = f.map(|i| self.mesh.vertices[i as usize]);
                ray_triangle(c, dir, a, b, cc, BARY_EPS)
            })
            .reduce(f64::min)
    }

    /// Distance from the centre to the surface along unit direction `dir`.
    pub fn surface_radius(&self, dir: Vec3) -> Result<f64> {
        if let Some(t) = self.cast(dir) {
            return Ok(t);
        }
        // Ray grazes a degenerate triangle or a crack: nudge it and retry.
        let perp = normalize(if dir[0].abs() < 0.9 {
            cross(dir, [1.0, 0.0, 0.0])
        } else {
            cross(dir, [0.0, 1.0, 0.0])
        });
        let other = cross(dir, perp);
        for offset in [perp, other, scale(perp, -1.0), scale(other, -1.0)] {
            let nudged = normalize([
                dir[0] + NUDGE * offset[0],
                dir[1] + NUDGE * offset[1],
                dir[2] + NUDGE * offset[2],
            ]);
            if let Some(t) = self.cast(nudged) {
                return Ok(t);
            }
        }
        Err(Error::DegenerateMesh { direction: dir })
    }

    /// Whether physical point `p` lies inside the surface.
    pub fn contains(&self, p: Vec3) -> Result<bool> {
        let d = sub(p, self.mesh.center);
        let r = norm(d);
        if r < self.inner_radius || r == 0.0 {
            return Ok(true);
        }
        if r > self.outer_radius {
            return Ok(false);
        }
        Ok(r <= self.surface_radius(scale(d, 1.0 / r))?)
    }
}

/// Voxel-index range `[lo, hi]` per axis covering the mesh, clipped to the grid.
fn voxel_bounds(mesh: &TriMesh, grid: &Grid) -> Option<([usize; 3], [usize; 3])> {
    let (lo, hi) = mesh.bounds();
    let mut a = [0usize; 3];
    let mut b = [0usize; 3];
    for k in 0..3 {
        let first = (lo[k] / grid.spacing[k]).ceil();
        let last = (hi[k] / grid.spacing[k]).floor();
        if last < 0.0 || first > (grid.dims[k] - 1) as f64 || first > last {
            return None;
        }
        a[k] = first.max(0.0) as usize;
        b[k] = (last as usize).min(grid.dims[k] - 1);
    }
    Some((a, b))
}

/// Binary mask of voxel centres (`index * spacing`, mm) inside the mesh.
/// Parts of the shape outside the grid are dropped.
pub fn voxelize(mesh: &TriMesh, grid: &Grid) -> Result<BinaryMask> {
    let Some((lo, hi)) = voxel_bounds(mesh, grid) else {
        return BinaryMask::zeros(grid.dims);
    };
    let index = RadialIndex::new(mesh);
    let ext = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
    let inside: Vec<Result<bool>> = par::map_indexed(ext[0] * ext[1] * ext[2], |i| {
        let [x, y, z] = crate::volume::coords(ext, i);
        let p = [
            (lo[0] + x) as f64 * grid.spacing[0],
            (lo[1] + y) as f64 * grid.spacing[1],
            (lo[2] + z) as f64 * grid.spacing[2],
        ];
        index.contains(p)
    });
    let mut data = vec![0u8; grid.len()];
    for (i, hit) in inside.into_iter().enumerate() {
        if hit? {
            let [x, y, z] = crate::volume::coords(ext, i);
            data[crate::volume::linear_index(grid.dims, lo[0] + x, lo[1] + y, lo[2] + z)] = 1;
        }
    }
    Ok(BinaryMask::from_parts_unchecked(grid.dims, data))
}

#[cfg(test)]
mod tests {
    use super::super::mesh::icosphere;
    use super::super::transform::{place_mesh, Quaternion};
    use super::*;

    #[test]
    fn cube_map_cells_cover_all_directions() {
        for d in [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.3, 0.3, -0.9], [-1.0, 1.0, 1.0]] {
            assert!(cell_of(normalize(d)) < 6 * CELLS * CELLS);
        }
    }

    #[test]
    fn sphere_volume_close_to_analytic() {
        let grid = Grid::new([16; 3], [1.0; 3]).unwrap();
        let mesh = place_mesh(&icosphere(4).unwrap(), [7.5; 3], 4.0, [1.0; 3], Quaternion::IDENTITY).unwrap();
        let count = voxelize(&mesh, &grid).unwrap().count() as f64;
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * 64.0;
        assert!((count - analytic).abs() <= 0.06 * analytic, "{count} vs {analytic}");
    }

    #[test]
    fn outside_grid_is_empty_and_result_is_idempotent() {
        let grid = Grid::new([8; 3], [1.0; 3]).unwrap();
        let far = place_mesh(&icosphere(2).unwrap(), [100.0; 3], 3.0, [1.0; 3], Quaternion::IDENTITY).unwrap();
        assert_eq!(voxelize(&far, &grid).unwrap().count(), 0);
        let near = place_mesh(&icosphere(2).unwrap(), [0.0; 3], 3.0, [1.0; 3], Quaternion::IDENTITY).unwrap();
        let a = voxelize(&near, &grid).unwrap();
        assert!(a.count() > 0 && a.count() < 8 * 8 * 8);
        assert_eq!(a, voxelize(&near, &grid).unwrap());
    }

    #[test]
    fn surface_radius_of_unit_sphere() {
        let mesh = icosphere(3).unwrap();
        let idx = RadialIndex::new(&mesh);
        for v in mesh.vertices.iter().take(50) {
            let r = idx.surface_radius(*v).unwrap();
            assert!((r - 1.0).abs() < 1e-9);
        }
        let r = idx.surface_radius(normalize([0.2, -0.7, 0.4])).unwrap();
        assert!(r <= 1.0 && r > 0.98);
    }
}
