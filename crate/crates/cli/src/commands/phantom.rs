use std::path::PathBuf;

use tumorsim::phantom::phantom;
use tumorsim::volume::{Dims, Spacing};

use crate::error::Result;
use crate::io::{create_dir, write_volume};

#[derive(Debug, Clone)]
pub struct PhantomOptions {
    pub out: PathBuf,
    pub count: usize,
    pub seed: u64,
    pub dims: Dims,
    pub spacing: Spacing,
}

/// Write `count` synthetic organ volumes, usable as a generation pool.
pub fn cmd_phantom(opts: &PhantomOptions) -> Result<Vec<PathBuf>> {
    create_dir(&opts.out)?;
    let mut written = Vec::with_capacity(opts.count);
    for i in 0..opts.count {
        let v = phantom(opts.dims, opts.spacing, opts.seed.wrapping_add(i as u64))?;
        let path = opts.out.join(format!("phantom_{i:03}.nii.gz"));
        write_volume(&v, &path)?;
        written.push(path);
    }
    Ok(written)
}
