//! Overlap and surface-distance metrics for binary segmentations.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::par;
use crate::volume::{same_dims, BinaryMask, Dims, Spacing};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(pred: &BinaryMask, gt: &BinaryMask) -> Result<ConfusionCounts> {
    same_dims(pred.dims(), gt.dims())?;
    let (p, g) = (pred.data(), gt.data());
    let parts = par::partials(p.len(), |range| {
        let mut c = ConfusionCounts::default();
        for i in range {
            match (p[i], g[i]) {
                (1, 1) => c.tp += 1,
                (1, _) => c.fp += 1,
                (_, 1) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        c
    });
    Ok(parts.into_iter().fold(ConfusionCounts::default(), |a, b| ConfusionCounts {
        tp: a.tp + b.tp,
        fp: a.fp + b.fp,
        tn: a.tn + b.tn,
        fn_: a.fn_ + b.fn_,
    }))
}

/// `2TP / (FP + 2TP + FN)`; two empty masks score 1.0.
pub fn dice(c: &ConfusionCounts) -> f64 {
    let denom = c.fp + 2 * c.tp + c.fn_;
    if denom == 0 {
        return 1.0;
    }
    (2 * c.tp) as f64 / denom as f64
}

/// `TP / (TP + FN)`, `None` without positives in the ground truth.
pub fn sensitivity(c: &ConfusionCounts) -> Option<f64> {
    let denom = c.tp + c.fn_;
    (denom > 0).then(|| c.tp as f64 / denom as f64)
}

/// `TN / (TN + FP)`, `None` without negatives in the ground truth.
pub fn specificity(c: &ConfusionCounts) -> Option<f64> {
    let denom = c.tn + c.fp;
    (denom > 0).then(|| c.tn as f64 / denom as f64)
}

fn is_surface(m: &BinaryMask, [x, y, z]: [usize; 3]) -> bool {
    let [nx, ny, nz] = m.dims();
    if !m.get(x, y, z) {
        return false;
    }
    if x == 0 || y == 0 || z == 0 || x + 1 == nx || y + 1 == ny || z + 1 == nz {
        return true;
    }
    !(m.get(x - 1, y, z)
        && m.get(x + 1, y, z)
        && m.get(x, y - 1, z)
        && m.get(x, y + 1, z)
        && m.get(x, y, z - 1)
        && m.get(x, y, z + 1))
}

/// Foreground voxels with a background 6-neighbour or on the grid boundary.
pub fn surface_voxels(m: &BinaryMask) -> Vec<[usize; 3]> {
    surface_mask(m)
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(i, _)| crate::volume::coords(m.dims(), i))
        .collect()
}

fn surface_mask(m: &BinaryMask) -> Vec<bool> {
    let dims = m.dims();
    par::map_indexed(m.len(), |i| is_surface(m, crate::volume::coords(dims, i)))
}

/// One lower-envelope pass along a line (Felzenszwalb & Huttenlocher).
/// `f` holds squared distances, `INFINITY` where no site is reachable.
fn edt_line(f: &[f64], step: f64, out: &mut [f64]) {
    let n = f.len();
    let pos = |q: usize| q as f64 * step;
    let mut v: Vec<usize> = Vec::with_capacity(n);
    let mut z: Vec<f64> = Vec::with_capacity(n + 1);
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.clear();
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let s = ((f[q] + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p))) / (2.0 * (pos(q) - pos(p)));
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    if v.is_empty() {
        out.fill(f64::INFINITY);
        return;
    }
    let eval = |k: usize, p: usize| {
        let d = (p as f64 - v[k] as f64) * step;
        f[v[k]] + d * d
    };
    let mut k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < pos(p) {
            k += 1;
        }
        // Rounded breakpoints can misplace a tie by one segment.
        let mut best = eval(k, p);
        if k > 0 {
            best = best.min(eval(k - 1, p));
        }
        if k + 1 < v.len() {
            best = best.min(eval(k + 1, p));
        }
        *o = best;
    }
}

/// Exact squared Euclidean distance (mm²) from every voxel to the nearest site.
pub fn distance_transform_sq(sites: &[bool], dims: Dims, spacing: Spacing) -> Vec<f64> {
    let mut d: Vec<f64> = sites.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    let [nx, ny, nz] = dims;
    // x lines are contiguous.
    par::for_each_line_mut(&mut d, nx, |_, line| {
        let f = line.to_vec();
        edt_line(&f, spacing[0], line);
    });
    // y and z passes gather strided lines, one output line per closure call.
    let pass = |d: &[f64], axis: usize| -> Vec<f64> {
        let (n, stride) = if axis == 1 { (ny, nx) } else { (nz, nx * ny) };
        let lines = d.len() / n;
        let base = |l: usize| {
            if axis == 1 {
                (l % nx) + (l / nx) * nx * ny
            } else {
                l
            }
        };
        let results: Vec<Vec<f64>> = par::map_indexed(lines, |l| {
            let b = base(l);
            let f: Vec<f64> = (0..n).map(|q| d[b + q * stride]).collect();
            let mut out = vec![0.0; n];
            edt_line(&f, spacing[axis], &mut out);
            out
        });
        let mut next = vec![0.0; d.len()];
        for (l, line) in results.into_iter().enumerate() {
            let b = base(l);
            for (q, v) in line.into_iter().enumerate() {
                next[b + q * stride] = v;
            }
        }
        next
    };
    let d = pass(&d, 1);
    pass(&d, 2)
}

fn directed(from: &[bool], to_dt: &[f64], percent: u32) -> f64 {
    let mut d: Vec<f64> = from
        .iter()
        .zip(to_dt)
        .filter(|(&s, _)| s)
        .map(|(_, &v)| v.sqrt())
        .collect();
    d.sort_by(f64::total_cmp);
    let rank = (percent as usize * d.len()).div_ceil(100).max(1);
    d[rank - 1]
}

/// Percentile Hausdorff distance in mm between the two mask surfaces.
///
/// Each directed distance set is reduced by the nearest-rank `percent`-th
/// percentile; the result is the larger of the two. `None` if either surface
/// is empty.
pub fn hausdorff(pred: &BinaryMask, gt: &BinaryMask, spacing: Spacing, percent: u32) -> Result<Option<f64>> {
    same_dims(pred.dims(), gt.dims())?;
    if !(1..=100).contains(&percent) {
        return Err(crate::Error::param("percent", "must lie in 1..=100"));
    }
    let sa = surface_mask(pred);
    let sb = surface_mask(gt);
    if !sa.iter().any(|&s| s) || !sb.iter().any(|&s| s) {
        return Ok(None);
    }
    let da = distance_transform_sq(&sa, pred.dims(), spacing);
    let db = distance_transform_sq(&sb, gt.dims(), spacing);
    Ok(Some(directed(&sa, &db, percent).max(directed(&sb, &da, percent))))
}

pub fn hd95(pred: &BinaryMask, gt: &BinaryMask, spacing: Spacing) -> Result<Option<f64>> {
    hausdorff(pred, gt, spacing, 95)
}

/// One evaluation row; `None` marks an undefined value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub dice: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub hd95_mm: Option<f64>,
}

pub fn evaluate(pred: &BinaryMask, gt: &BinaryMask, spacing: Spacing) -> Result<MetricReport> {
    let c = confusion(pred, gt)?;
    Ok(MetricReport {
        dice: dice(&c),
        sensitivity: sensitivity(&c),
        specificity: specificity(&c),
        hd95_mm: hd95(pred, gt, spacing)?,
    })
}

/// Mean and sample standard deviation over the defined values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub dice: Option<Stat>,
    pub sensitivity: Option<Stat>,
    pub specificity: Option<Stat>,
    pub hd95_mm: Option<Stat>,
}

fn stat(values: impl Iterator<Item = f64>) -> Option<Stat> {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(Stat { mean, std, n })
}

pub fn summarize(reports: &[MetricReport]) -> MetricSummary {
    MetricSummary {
        dice: stat(reports.iter().map(|r| r.dice)),
        sensitivity: stat(reports.iter().filter_map(|r| r.sensitivity)),
        specificity: stat(reports.iter().filter_map(|r| r.specificity)),
        hd95_mm: stat(reports.iter().filter_map(|r| r.hd95_mm)),
    }
}
