use std::path::{Path, PathBuf};

use serde::Serialize;
use tumorsim::loss::{Decomposition, LossReport, LossTarget};
use tumorsim::metrics::{confusion, dice};
use tumorsim::par;
use tumorsim::solver::{solve, SolverConfig};
use tumorsim::volume::{BinaryMask, Volume};

use crate::config::Mode;
use crate::error::{CliError, Result};
use crate::io::{create_dir, read_volume, write_text, write_volume};
use crate::manifest::{Manifest, MANIFEST_FILE};

use super::losses::load_target;
use super::metrics::jsonl;

/// Binary mask threshold on the continuous mask estimate.
pub const MASK_THRESHOLD: f32 = 0.5;

#[derive(Debug, Clone)]
pub struct DecomposeOptions {
    /// A generated set (with a manifest), one sample directory, or a volume file.
    pub input: PathBuf,
    pub out: PathBuf,
    pub mode: Mode,
    pub solver: SolverConfig,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecomposeOutcome {
    pub case: String,
    pub iterations: usize,
    pub report: LossReport,
    /// Dice of the thresholded mask against the stored mask, when known.
    pub dice: Option<f64>,
}

struct Job {
    case: String,
    input: PathBuf,
    out: PathBuf,
}

fn jobs(opts: &DecomposeOptions) -> Result<Vec<Job>> {
    let input = &opts.input;
    if input.is_file() {
        if opts.mode == Mode::Supervised {
            return Err(CliError::Usage(format!(
                "supervised mode needs a sample directory, got file {}",
                input.display()
            )));
        }
        let case = crate::io::stem(input);
        return Ok(vec![Job {
            case,
            input: input.clone(),
            out: opts.out.clone(),
        }]);
    }
    if input.join(MANIFEST_FILE).is_file() {
        let manifest = Manifest::load(input)?;
        return Ok(manifest
            .samples
            .into_iter()
            .map(|e| Job {
                input: input.join(&e.dir),
                out: opts.out.join(&e.dir),
                case: e.dir,
            })
            .collect());
    }
    if input.is_dir() {
        let case = input
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        return Ok(vec![Job {
            case,
            input: input.clone(),
            out: opts.out.clone(),
        }]);
    }
    Err(CliError::Usage(format!("input {} does not exist", input.display())))
}

pub fn cmd_decompose(opts: &DecomposeOptions) -> Result<Vec<DecomposeOutcome>> {
    opts.solver.validate()?;
    let jobs = jobs(opts)?;
    let results = par::with_workers(opts.workers, || {
        par::map_indexed(jobs.len(), |i| {
            run(&jobs[i], opts).map_err(|e| CliError::Sample {
                index: i,
                source: Box::new(e),
            })
        })
    });
    results.into_iter().collect()
}

fn run(job: &Job, opts: &DecomposeOptions) -> Result<DecomposeOutcome> {
    let x_path = if job.input.is_file() {
        job.input.clone()
    } else {
        job.input.join("x.nii.gz")
    };
    let x = read_volume(&x_path)?;
    let target = match opts.mode {
        Mode::Supervised => load_target(&job.input)?,
        Mode::Real => LossTarget::observed(&x),
    };
    let state = solve(&target, &opts.solver)?;
    let mask = write_fields(&job.out, &x, &state.decomposition, &state.history)?;
    let dice = match &target.m {
        Some(m) => {
            let gt = BinaryMask::new(x.dims(), m.iter().map(|&v| (v > 0.5) as u8).collect())?;
            Some(dice(&confusion(&mask, &gt)?))
        }
        None => None,
    };
    let outcome = DecomposeOutcome {
        case: job.case.clone(),
        iterations: state.iteration,
        report: state.report,
        dice,
    };
    let text = serde_json::to_string_pretty(&outcome).expect("outcome serializes");
    write_text(&job.out.join("report.json"), &(text + "\n"))?;
    Ok(outcome)
}

fn write_fields<T: Serialize>(
    dir: &Path,
    x: &Volume,
    d: &Decomposition,
    trace: &[T],
) -> Result<BinaryMask> {
    create_dir(dir)?;
    let (x_hat, s_hat, m_hat) = d.to_volumes(x.spacing())?;
    let mask = BinaryMask::threshold(&m_hat, MASK_THRESHOLD);
    write_volume(&x_hat, &dir.join("x_hat.nii.gz"))?;
    write_volume(&s_hat, &dir.join("s_hat.nii.gz"))?;
    write_volume(&m_hat, &dir.join("m_hat.nii.gz"))?;
    write_volume(&mask.to_volume(x.spacing())?, &dir.join("mask.nii.gz"))?;
    write_text(&dir.join("trace.jsonl"), &jsonl(trace))?;
    Ok(mask)
}
