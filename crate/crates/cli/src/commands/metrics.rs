use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tumorsim::metrics::{evaluate, summarize, MetricReport, MetricSummary};
use tumorsim::par;
use tumorsim::volume::Spacing;

use crate::error::{CliError, Result};
use crate::io::{create_dir, list_volumes, read_mask, read_volume, stem, write_text};

#[derive(Debug, Clone)]
pub struct MetricsOptions {
    pub pred: PathBuf,
    pub gt: PathBuf,
    pub spacing: Option<Spacing>,
    pub out: Option<PathBuf>,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub case: String,
    #[serde(flatten)]
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsOutput {
    pub rows: Vec<MetricRow>,
    pub summary: MetricSummary,
}

/// Pair volume files in two directories by name (extension ignored).
pub fn pair_files(a: &Path, b: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let index = |dir: &Path| -> Result<BTreeMap<String, PathBuf>> {
        Ok(list_volumes(dir)?.into_iter().map(|p| (stem(&p), p)).collect())
    };
    let left = index(a)?;
    let mut right = index(b)?;
    let mut pairs = Vec::with_capacity(left.len());
    for (name, lp) in left {
        match right.remove(&name) {
            Some(rp) => pairs.push((name, lp, rp)),
            None => return Err(CliError::Usage(format!("unpaired file {}", lp.display()))),
        }
    }
    if let Some(rp) = right.into_values().next() {
        return Err(CliError::Usage(format!("unpaired file {}", rp.display())));
    }
    Ok(pairs)
}

fn eval_pair(pred: &Path, gt: &Path, spacing: Option<Spacing>) -> Result<MetricReport> {
    let gt_vol = read_volume(gt)?;
    let spacing = spacing.unwrap_or(gt_vol.spacing());
    let gt_mask = read_mask(gt)?;
    let pred_mask = read_mask(pred)?;
    evaluate(&pred_mask, &gt_mask, spacing).map_err(|source| CliError::Volume {
        path: pred.to_path_buf(),
        source,
    })
}

pub fn cmd_metrics(opts: &MetricsOptions) -> Result<MetricsOutput> {
    let pairs = pair_files(&opts.pred, &opts.gt)?;
    let results = par::with_workers(opts.workers, || {
        par::map_indexed(pairs.len(), |i| eval_pair(&pairs[i].1, &pairs[i].2, opts.spacing))
    });
    let mut rows = Vec::with_capacity(pairs.len());
    for ((case, _, _), report) in pairs.into_iter().zip(results) {
        rows.push(MetricRow { case, report: report? });
    }
    let reports: Vec<MetricReport> = rows.iter().map(|r| r.report).collect();
    let out = MetricsOutput {
        summary: summarize(&reports),
        rows,
    };
    if let Some(dir) = &opts.out {
        write_reports(dir, &out)?;
    }
    Ok(out)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["dice", "sensitivity", "specificity", "hd95_mm"])
        .expect("in-memory write");
    for r in rows {
        let rep = &r.report;
        w.write_record([
            rep.dice.to_string(),
            cell(rep.sensitivity),
            cell(rep.specificity),
            cell(rep.hd95_mm),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

pub fn jsonl<T: Serialize>(rows: &[T]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("row serializes") + "\n")
        .collect()
}

fn write_reports(dir: &Path, out: &MetricsOutput) -> Result<()> {
    create_dir(dir)?;
    write_text(&dir.join("metrics.jsonl"), &jsonl(&out.rows))?;
    write_text(&dir.join("metrics.csv"), &metrics_csv(&out.rows))?;
    let summary = serde_json::to_string_pretty(&out.summary).expect("summary serializes");
    write_text(&dir.join("summary.json"), &(summary + "\n"))
}
