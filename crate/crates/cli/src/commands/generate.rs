use std::path::{Path, PathBuf};

use tumorsim::compose::{generate_sample, sample_rng, GeneratorConfig};
use tumorsim::par;
use tumorsim::volume::{BinaryMask, Spacing, Volume};

use crate::error::{CliError, Result};
use crate::io::{create_dir, file_digest, list_volumes, read_mask, read_volume_with, write_text, write_volume};
use crate::manifest::{sample_dir_name, ConfigSnapshot, FileEntry, Manifest, PoolEntry, SampleEntry, SampleFile, RECORD_FILE};

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub pool: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub count: usize,
    pub workers: usize,
    pub spacing: Option<Spacing>,
    pub roi: Option<PathBuf>,
    pub generator: GeneratorConfig,
}

fn pool_entry(path: &Path) -> Result<PoolEntry> {
    Ok(PoolEntry {
        name: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        digest: file_digest(path)?,
    })
}

pub fn cmd_generate(opts: &GenerateOptions) -> Result<Manifest> {
    opts.generator.validate()?;
    let paths = list_volumes(&opts.pool)?;
    if paths.is_empty() {
        return Err(CliError::Usage(format!(
            "pool {} contains no volume files",
            opts.pool.display()
        )));
    }
    let pool = paths
        .iter()
        .map(|p| read_volume_with(p, opts.spacing))
        .collect::<Result<Vec<Volume>>>()?;
    let roi = match &opts.roi {
        Some(p) => Some(read_mask(p)?),
        None => None,
    };
    let snapshot = ConfigSnapshot {
        seed: opts.seed,
        count: opts.count,
        spacing: opts.spacing,
        roi: opts.roi.as_deref().map(pool_entry).transpose()?,
        pool: paths.iter().map(|p| pool_entry(p)).collect::<Result<_>>()?,
        generator: opts.generator.clone(),
    };
    create_dir(&opts.out)?;

    let results = par::with_workers(opts.workers, || {
        par::map_indexed(opts.count, |i| {
            write_sample(&pool, roi.as_ref(), opts, i).map_err(|e| CliError::Sample {
                index: i,
                source: Box::new(e),
            })
        })
    });
    let samples = results.into_iter().collect::<Result<Vec<_>>>()?;

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: snapshot,
        samples,
    };
    manifest.save(&opts.out)?;
    Ok(manifest)
}

fn write_sample(pool: &[Volume], roi: Option<&BinaryMask>, opts: &GenerateOptions, index: usize) -> Result<SampleEntry> {
    let stream = index as u64;
    let mut rng = sample_rng(opts.seed, stream);
    let sample = generate_sample(pool, roi, &opts.generator, &mut rng)?;
    let dir_name = sample_dir_name(index);
    let dir = opts.out.join(&dir_name);
    create_dir(&dir)?;

    let m = sample.m.to_volume(sample.x.spacing())?;
    let mut files = Vec::with_capacity(4);
    for (name, v) in [("x", &sample.x), ("x_n", &sample.x_n), ("s", &sample.s), ("m", &m)] {
        let rel = format!("{dir_name}/{name}.nii.gz");
        let path = opts.out.join(&rel);
        write_volume(v, &path)?;
        files.push(FileEntry {
            digest: file_digest(&path)?,
            path: rel,
        });
    }
    let record = SampleFile {
        alpha: sample.alpha,
        record: sample.record,
    };
    let text = serde_json::to_string_pretty(&record).expect("record serializes");
    write_text(&dir.join(RECORD_FILE), &(text + "\n"))?;

    let mut files = files.into_iter();
    let mut next = || files.next().expect("four files");
    Ok(SampleEntry {
        index,
        dir: dir_name,
        stream,
        alpha: record.alpha,
        x: next(),
        x_n: next(),
        s: next(),
        m: next(),
        record: record.record,
    })
}
