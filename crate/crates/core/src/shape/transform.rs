use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mesh::{add, scale, sub, TriMesh, Vec3};
use super::noise::{NoiseParams, Simplex};
use crate::error::{Error, Result};

/// Rotation quaternion `w + xi + yj + zk`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-6
    }

    /// Uniform on SO(3): a normalized 4D standard Gaussian.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let q = Quaternion {
                w: rng.sample(StandardNormal),
                x: rng.sample(StandardNormal),
                y: rng.sample(StandardNormal),
                z: rng.sample(StandardNormal),
            };
            let n = q.norm();
            if n > 1e-9 {
                return Quaternion {
                    w: q.w / n,
                    x: q.x / n,
                    y: q.y / n,
                    z: q.z / n,
                };
            }
        }
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let Quaternion { w, x, y, z } = *self;
        // v + 2w(u × v) + 2u × (u × v), u = (x, y, z)
        let u = [x, y, z];
        let t = scale(super::mesh::cross(u, v), 2.0);
        add(add(v, scale(t, w)), super::mesh::cross(u, t))
    }
}

/// Radial displacement `v -> v * (1 + amplitude * n(v))` about the mesh center.
///
/// Requires `amplitude * octave_bound < 1` so every radius stays positive.
pub fn perturb_mesh(mesh: &TriMesh, noise: &NoiseParams) -> Result<TriMesh> {
    noise.validate()?;
    let reach = noise.amplitude * noise.octave_bound();
    if reach >= 1.0 {
        return Err(Error::param(
            "noise.amplitude",
            format!("amplitude x octave bound = {reach} must stay below 1"),
        ));
    }
    if noise.amplitude == 0.0 {
        return Ok(mesh.clone());
    }
    let field = Simplex::new(noise.seed);
    let vertices = mesh
        .vertices
        .iter()
        .map(|&v| {
            let d = sub(v, mesh.center);
            let n = field.fractal(d, noise);
            add(mesh.center, scale(d, 1.0 + noise.amplitude * n))
        })
        .collect();
    Ok(TriMesh::new(vertices, mesh.faces.clone(), mesh.center))
}

/// Map `v -> center + R (diag(axis_scale) * radius * v)`, all in millimetres.
pub fn place_mesh(
    mesh: &TriMesh,
    center_mm: Vec3,
    radius_mm: f64,
    axis_scale: Vec3,
    rotation: Quaternion,
) -> Result<TriMesh> {
    if !rotation.is_unit() {
        return Err(Error::param(
            "rotation",
            format!("quaternion norm {} is not 1", rotation.norm()),
        ));
    }
    if !(radius_mm.is_finite() && radius_mm > 0.0) {
        return Err(Error::param("radius_mm", "must be > 0"));
    }
    if axis_scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::param("scale", "components must be > 0"));
    }
    let vertices = mesh
        .vertices
        .iter()
        .map(|&v| {
            let d = sub(v, mesh.center);
            let s = [
                d[0] * axis_scale[0] * radius_mm,
                d[1] * axis_scale[1] * radius_mm,
                d[2] * axis_scale[2] * radius_mm,
            ];
            add(center_mm, rotation.rotate(s))
        })
        .collect();
    Ok(TriMesh::new(vertices, mesh.faces.clone(), center_mm))
}
