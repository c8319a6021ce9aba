use std::path::{Path, PathBuf};

use serde::Serialize;
use tumorsim::loss::{total_loss, Decomposition, LossReport, LossTarget, LossWeights};
use tumorsim::par;
use tumorsim::volume::Volume;

use crate::config::AlphaMode;
use crate::error::{CliError, Result};
use crate::io::{create_dir, read_volume, write_text};
use crate::manifest::{Manifest, SampleFile};

use super::metrics::jsonl;

#[derive(Debug, Clone)]
pub struct LossesOptions {
    pub samples: PathBuf,
    pub decomp: PathBuf,
    pub weights: [f64; 4],
    pub alpha_mode: AlphaMode,
    pub out: Option<PathBuf>,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossRow {
    pub case: String,
    #[serde(flatten)]
    pub report: LossReport,
}

fn field(dir: &Path, name: &str) -> Result<Volume> {
    let path = dir.join(format!("{name}.nii.gz"));
    if !path.is_file() {
        return Err(CliError::Usage(format!("missing field file {}", path.display())));
    }
    read_volume(&path)
}

/// Full supervised target from a sample directory.
pub fn load_target(dir: &Path) -> Result<LossTarget> {
    let x = field(dir, "x")?;
    let alpha = SampleFile::load(dir)?.alpha;
    Ok(LossTarget {
        dims: x.dims(),
        x: x.to_f64(),
        x_n: Some(field(dir, "x_n")?.to_f64()),
        s: Some(field(dir, "s")?.to_f64()),
        m: Some(field(dir, "m")?.to_f64()),
        alpha: Some(alpha),
    })
}

pub fn load_decomposition(dir: &Path) -> Result<Decomposition> {
    let x_hat = field(dir, "x_hat")?;
    let s_hat = field(dir, "s_hat")?;
    let m_hat = field(dir, "m_hat")?;
    Ok(Decomposition::from_volumes(&x_hat, &s_hat, &m_hat)?)
}

pub fn loss_weights(weights: [f64; 4], mode: AlphaMode) -> LossWeights {
    LossWeights {
        lambda: weights,
        alpha: match mode {
            AlphaMode::Stored => None,
            AlphaMode::Unit => Some(1.0),
        },
    }
}

pub fn cmd_losses(opts: &LossesOptions) -> Result<Vec<LossRow>> {
    let manifest = Manifest::load(&opts.samples)?;
    let weights = loss_weights(opts.weights, opts.alpha_mode);
    weights.validate()?;
    let entries = &manifest.samples;
    let results = par::with_workers(opts.workers, || {
        par::map_indexed(entries.len(), |i| -> Result<LossReport> {
            let case = &entries[i].dir;
            let target = load_target(&opts.samples.join(case))?;
            let d = load_decomposition(&opts.decomp.join(case))?;
            total_loss(&d, &target, &weights).map_err(|e| CliError::Sample {
                index: i,
                source: Box::new(e.into()),
            })
        })
    });
    let mut rows = Vec::with_capacity(entries.len());
    for (e, r) in entries.iter().zip(results) {
        rows.push(LossRow {
            case: e.dir.clone(),
            report: r?,
        });
    }
    if let Some(dir) = &opts.out {
        create_dir(dir)?;
        write_text(&dir.join("losses.jsonl"), &jsonl(&rows))?;
        write_text(&dir.join("losses.csv"), &losses_csv(&rows))?;
    }
    Ok(rows)
}

pub fn losses_csv(rows: &[LossRow]) -> String {
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["case", "l0", "l1", "l2", "l3", "total"])
        .expect("in-memory write");
    for r in rows {
        let p = &r.report;
        w.write_record([
            r.case.clone(),
            cell(p.l0),
            cell(p.l1),
            cell(p.l2),
            cell(p.l3),
            p.total.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}
