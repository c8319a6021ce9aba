use std::path::PathBuf;

use tumorsim::volume::{render_slice, Axis, BinaryMask, SliceImage, Volume};

use crate::error::{CliError, Result};
use crate::io::{read_mask, read_volume};

#[derive(Debug, Clone)]
pub struct RenderOptions {
    pub volume: PathBuf,
    pub axis: Axis,
    pub index: usize,
    /// Intensity window; defaults to the volume's min and max.
    pub window: Option<(f64, f64)>,
    pub overlay: Option<PathBuf>,
    pub out: PathBuf,
}

pub fn cmd_render(opts: &RenderOptions) -> Result<SliceImage> {
    let v = read_volume(&opts.volume)?;
    let overlay = match &opts.overlay {
        Some(p) => Some(read_mask(p)?),
        None => None,
    };
    let img = render(&v, overlay.as_ref(), opts.axis, opts.index, opts.window)?;
    img.write_pgm(&opts.out).map_err(|source| CliError::Volume {
        path: opts.out.clone(),
        source,
    })?;
    Ok(img)
}

pub fn default_window(v: &Volume) -> (f64, f64) {
    let (lo, hi) = v.min_max();
    let (lo, hi) = (lo as f64, hi as f64);
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

pub fn render(
    v: &Volume,
    overlay: Option<&BinaryMask>,
    axis: Axis,
    index: usize,
    window: Option<(f64, f64)>,
) -> Result<SliceImage> {
    let window = window.unwrap_or_else(|| default_window(v));
    let mut img = render_slice(v, axis, index, window)?;
    if let Some(mask) = overlay {
        if mask.dims() != v.dims() {
            return Err(tumorsim::Error::DimsMismatch {
                left: mask.dims(),
                right: v.dims(),
            }
            .into());
        }
        for (col, row) in boundary(mask, axis, index) {
            img.set_pixel(col, row, 255);
        }
    }
    Ok(img)
}

/// In-slice mask pixels with a 4-neighbour outside the mask or the slice.
pub fn boundary(mask: &BinaryMask, axis: Axis, index: usize) -> Vec<(usize, usize)> {
    let dims = mask.dims();
    let (c, r) = axis.in_plane();
    let (w, h) = (dims[c], dims[r]);
    let on = |col: usize, row: usize| {
        let [x, y, z] = axis.voxel(index, col, row);
        mask.get(x, y, z)
    };
    let mut out = Vec::new();
    for row in 0..h {
        for col in 0..w {
            if !on(col, row) {
                continue;
            }
            let edge = col == 0
                || row == 0
                || col + 1 == w
                || row + 1 == h
                || !on(col - 1, row)
                || !on(col + 1, row)
                || !on(col, row - 1)
                || !on(col, row + 1);
            if edge {
                out.push((col, row));
            }
        }
    }
    out
}
