#![allow(dead_code)]

use std::path::{Path, PathBuf};

use tumorsim::compose::{GeneratorConfig, Preset};
use tumorsim_cli::commands::{cmd_generate, cmd_phantom, GenerateOptions, PhantomOptions};
use tumorsim_cli::manifest::Manifest;

pub fn pool(dir: &Path, n: usize, size: usize, seed: u64) -> PathBuf {
    let out = dir.join(format!("pool_{size}_{seed}"));
    cmd_phantom(&PhantomOptions {
        out: out.clone(),
        count: n,
        seed,
        dims: [size; 3],
        spacing: [1.0; 3],
    })
    .unwrap();
    out
}

pub fn generate_opts(pool: &Path, out: &Path, preset: Preset, count: usize, seed: u64, workers: usize) -> GenerateOptions {
    GenerateOptions {
        pool: pool.to_path_buf(),
        out: out.to_path_buf(),
        seed,
        count,
        workers,
        spacing: None,
        roi: None,
        generator: GeneratorConfig::for_preset(preset),
    }
}

pub fn generate(pool: &Path, out: &Path, preset: Preset, count: usize, seed: u64, workers: usize) -> Manifest {
    cmd_generate(&generate_opts(pool, out, preset, count, seed, workers)).unwrap()
}

pub fn digests(m: &Manifest) -> Vec<String> {
    m.samples
        .iter()
        .flat_map(|e| e.files().map(|f| format!("{} {}", f.path, f.digest)))
        .collect()
}
