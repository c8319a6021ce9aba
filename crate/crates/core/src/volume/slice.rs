use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Volume;
use crate::error::{Error, Result};

/// Slice orientation. Axial fixes z, coronal fixes y, sagittal fixes x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Axial,
    Coronal,
    Sagittal,
}

impl Axis {
    /// Index of the fixed volume axis.
    pub fn normal(self) -> usize {
        match self {
            Axis::Axial => 2,
            Axis::Coronal => 1,
            Axis::Sagittal => 0,
        }
    }

    /// Volume axes mapped to image (column, row).
    pub fn in_plane(self) -> (usize, usize) {
        match self {
            Axis::Axial => (0, 1),
            Axis::Coronal => (0, 2),
            Axis::Sagittal => (1, 2),
        }
    }

    /// Volume coordinates of image pixel (col, row) on slice `index`.
    pub fn voxel(self, index: usize, col: usize, row: usize) -> [usize; 3] {
        let (c, r) = self.in_plane();
        let mut p = [0; 3];
        p[self.normal()] = index;
        p[c] = col;
        p[r] = row;
        p
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axial" => Ok(Axis::Axial),
            "coronal" => Ok(Axis::Coronal),
            "sagittal" => Ok(Axis::Sagittal),
            other => Err(Error::param("axis", format!("unknown axis `{other}`"))),
        }
    }
}

/// 8-bit grayscale slice rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceImage {
    pub width: usize,
    pub height: usize,
    pub axis: Axis,
    pub index: usize,
    /// Row-major, `width * height` bytes.
    pub pixels: Vec<u8>,
}

impl SliceImage {
    pub fn pixel(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn set_pixel(&mut self, col: usize, row: usize, value: u8) {
        self.pixels[row * self.width + col] = value;
    }

    /// Binary PGM (P5, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_pgm()).map_err(|e| Error::io(path, e))
    }
}

/// Map `[lo, hi]` linearly onto `[0, 255]`, clamp, round half to even.
pub fn render_slice(v: &Volume, axis: Axis, index: usize, window: (f64, f64)) -> Result<SliceImage> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::param("window", format!("need lo < hi, got ({lo}, {hi})")));
    }
    let dims = v.dims();
    let depth = dims[axis.normal()];
    if index >= depth {
        return Err(Error::param(
            "index",
            format!("slice {index} out of range for {axis:?} extent {depth}"),
        ));
    }
    let (c, r) = axis.in_plane();
    let (width, height) = (dims[c], dims[r]);
    let scale = 255.0 / (hi - lo);
    let mut pixels = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let [x, y, z] = axis.voxel(index, col, row);
            let t = ((v.get(x, y, z) as f64 - lo) * scale).clamp(0.0, 255.0);
            pixels.push(t.round_ties_even() as u8);
        }
    }
    Ok(SliceImage {
        width,
        height,
        axis,
        index,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(value: f32) -> Volume {
        Volume::filled([4, 3, 2], [1.0; 3], value).unwrap()
    }

    #[test]
    fn window_floor_and_ceiling() {
        let img = render_slice(&constant(-5.0), Axis::Axial, 1, (-5.0, 5.0)).unwrap();
        assert!(img.pixels.iter().all(|&p| p == 0));
        let img = render_slice(&constant(5.0), Axis::Axial, 1, (-5.0, 5.0)).unwrap();
        assert!(img.pixels.iter().all(|&p| p == 255));
        assert_eq!((img.width, img.height), (4, 3));
    }

    #[test]
    fn midpoint_rounds_half_to_even() {
        let img = render_slice(&constant(1.0), Axis::Sagittal, 0, (0.0, 2.0)).unwrap();
        assert!(img.pixels.iter().all(|&p| p == 128));
        assert_eq!((img.width, img.height), (3, 2));
    }

    #[test]
    fn rejects_bad_window_and_index() {
        assert!(render_slice(&constant(0.0), Axis::Axial, 2, (0.0, 1.0)).is_err());
        assert!(render_slice(&constant(0.0), Axis::Axial, 0, (1.0, 1.0)).is_err());
        assert!(render_slice(&constant(0.0), Axis::Coronal, 3, (0.0, 1.0)).is_err());
    }

    #[test]
    fn monotone_in_intensity() {
        let v = Volume::from_fn([64, 1, 1], [1.0; 3], |[x, _, _]| x as f32 * 0.1 - 1.0).unwrap();
        let img = render_slice(&v, Axis::Axial, 0, (0.0, 3.0)).unwrap();
        assert!(img.pixels.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn pgm_layout() {
        let img = render_slice(&constant(1.0), Axis::Axial, 0, (0.0, 1.0)).unwrap();
        let pgm = img.to_pgm();
        assert!(pgm.starts_with(b"P5\n4 3\n255\n"));
        assert_eq!(pgm.len(), 11 + 12);
    }
}
