//! Triangle meshes: geodesic icosphere construction and topology checks.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

/// Closed triangle mesh, star-shaped about `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    /// Counter-clockwise seen from outside.
    pub faces: Vec<[u32; 3]>,
    pub center: Vec3,
    /// Distance of each vertex from `center`.
    pub radii: Vec<f64>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>, center: Vec3) -> Self {
        let radii = vertices.iter().map(|&v| norm(sub(v, center))).collect();
        Self {
            vertices,
            faces,
            center,
            radii,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Undirected edge count.
    pub fn edge_count(&self) -> usize {
        let mut edges = std::collections::HashSet::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    /// Every directed edge appears once and its reverse once: closed,
    /// consistently oriented 2-manifold.
    pub fn is_closed_manifold(&self) -> bool {
        let mut directed: HashMap<(u32, u32), usize> = HashMap::new();
        for f in &self.faces {
            if f.iter().any(|&i| i as usize >= self.vertices.len()) {
                return false;
            }
            for k in 0..3 {
                *directed.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
            }
        }
        directed
            .iter()
            .all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
    }

    /// Every face normal points away from `center`.
    pub fn is_outward(&self) -> bool {
        self.faces.iter().all(|f| {
            let [a, b, c] = f.map(|i| self.vertices[i as usize]);
            let n = cross(sub(b, a), sub(c, a));
            dot(n, sub(a, self.center)) > 0.0
        })
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    /// Largest pairwise vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, &a) in self.vertices.iter().enumerate() {
            for &b in &self.vertices[i + 1..] {
                best = best.max(norm(sub(a, b)));
            }
        }
        best
    }

    /// Axis-aligned bounding box (min, max).
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }
}

pub const MAX_LEVEL: u32 = 6;

fn icosahedron() -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let vertices = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .map(normalize)
    .to_vec();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (vertices, faces)
}

/// Unit geodesic sphere: the icosahedron with every triangle split four ways
/// `level` times and new vertices projected onto the unit sphere.
pub fn icosphere(level: u32) -> Result<TriMesh> {
    if level > MAX_LEVEL {
        return Err(Error::param(
            "subdivision_level",
            format!("{level} exceeds {MAX_LEVEL}"),
        ));
    }
    let (mut vertices, mut faces) = icosahedron();
    for _ in 0..level {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = normalize(add(vertices[a as usize], vertices[b as usize]));
                vertices.push(m);
                (vertices.len() - 1) as u32
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    Ok(TriMesh::new(vertices, faces, [0.0; 3]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_and_first_subdivisions() {
        let m0 = icosphere(0).unwrap();
        assert_eq!((m0.vertex_count(), m0.face_count()), (12, 20));
        let m1 = icosphere(1).unwrap();
        assert_eq!((m1.vertex_count(), m1.face_count()), (42, 80));
        assert!(icosphere(MAX_LEVEL + 1).is_err());
    }

    #[test]
    fn counts_euler_and_orientation() {
        for level in 0..=4 {
            let m = icosphere(level).unwrap();
            let p = 4usize.pow(level);
            assert_eq!(m.vertex_count(), 10 * p + 2);
            assert_eq!(m.face_count(), 20 * p);
            assert_eq!(m.edge_count(), 30 * p);
            assert_eq!(m.euler_characteristic(), 2);
            assert!(m.is_closed_manifold());
            assert!(m.is_outward());
            assert!(m.radii.iter().all(|r| (r - 1.0).abs() <= 1e-6));
        }
    }

    #[test]
    fn manifold_check_rejects_open_mesh() {
        let mut m = icosphere(0).unwrap();
        m.faces.pop();
        assert!(!m.is_closed_manifold());
    }
}
