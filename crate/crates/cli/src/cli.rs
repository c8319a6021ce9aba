use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tumorsim::compose::Preset;
use tumorsim::loss::LossWeights;
use tumorsim::solver::MaskInit;
use tumorsim::volume::{Axis, Spacing};

use crate::commands::*;
use crate::config::{parse_dims, parse_spacing, parse_weights, parse_window, AlphaMode, FileConfig, Mode};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "tumorsim", version, about = "Synthetic tumor generation and layer decomposition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded set of synthetic samples from a pool of normal volumes.
    Generate(GenerateArgs),
    /// Dice, sensitivity, specificity and HD95 for paired mask directories.
    Metrics(MetricsArgs),
    /// Loss terms of stored decompositions against generated samples.
    Losses(LossesArgs),
    /// Recover (x_hat, s_hat, m_hat) by gradient descent.
    Decompose(DecomposeArgs),
    /// Render one slice as a PGM image, optionally with a mask contour.
    Render(RenderArgs),
    /// Recompute the digests listed in a manifest.
    Verify(VerifyArgs),
    /// Write synthetic organ volumes for use as a pool.
    Phantom(PhantomArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_parser = parse_spacing)]
    pub spacing: Option<Spacing>,
    /// Mask restricting tumor centers.
    #[arg(long)]
    pub roi: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, value_parser = parse_spacing)]
    pub spacing: Option<Spacing>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LossesArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory of `generate`.
    #[arg(long)]
    pub samples: PathBuf,
    /// Directory with `<sample>/{x_hat,s_hat,m_hat}.nii.gz`.
    #[arg(long)]
    pub decomp: PathBuf,
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<[f64; 4]>,
    #[arg(long, value_enum)]
    pub alpha_mode: Option<AlphaMode>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Generated set, sample directory or (real mode) a volume file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Seed for a normal mask initialisation (std 1).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<[f64; 4]>,
    #[arg(long, value_enum)]
    pub alpha_mode: Option<AlphaMode>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub volume: PathBuf,
    #[arg(long, default_value = "axial")]
    pub axis: Axis,
    #[arg(long)]
    pub index: usize,
    /// `lo,hi`; defaults to the volume range.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Directory containing manifest.json.
    pub dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_dims, default_value = "32,32,32")]
    pub dims: [usize; 3],
    #[arg(long, value_parser = parse_spacing, default_value = "1,1,1")]
    pub spacing: Spacing,
}

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T> {
    flag.or(file)
        .ok_or_else(|| CliError::Usage(format!("--{name} is required (flag or config key)")))
}

impl GenerateArgs {
    pub fn resolve(&self) -> Result<GenerateOptions> {
        let file = FileConfig::load(self.config.as_deref())?;
        let preset = self.preset.or(file.preset).unwrap_or(Preset::Brain);
        Ok(GenerateOptions {
            pool: required(self.pool.clone(), file.pool.clone(), "pool")?,
            out: required(self.out.clone(), file.out.clone(), "out")?,
            seed: self.seed.or(file.seed).unwrap_or(0),
            count: self.count.or(file.count).unwrap_or(1),
            workers: self.workers.or(file.workers).unwrap_or(0),
            spacing: self.spacing.or(file.spacing),
            roi: self.roi.clone().or(file.roi.clone()),
            generator: file.generator(preset)?,
        })
    }
}

impl MetricsArgs {
    pub fn resolve(&self) -> Result<MetricsOptions> {
        let file = FileConfig::load(self.config.as_deref())?;
        Ok(MetricsOptions {
            pred: self.pred.clone(),
            gt: self.gt.clone(),
            spacing: self.spacing.or(file.spacing),
            out: self.out.clone().or(file.out),
            workers: self.workers.or(file.workers).unwrap_or(0),
        })
    }
}

impl LossesArgs {
    pub fn resolve(&self) -> Result<LossesOptions> {
        let file = FileConfig::load(self.config.as_deref())?;
        Ok(LossesOptions {
            samples: self.samples.clone(),
            decomp: self.decomp.clone(),
            weights: self.weights.or(file.weights).unwrap_or([1.0; 4]),
            alpha_mode: self.alpha_mode.or(file.alpha_mode).unwrap_or_default(),
            out: self.out.clone().or(file.out),
            workers: self.workers.or(file.workers).unwrap_or(0),
        })
    }
}

impl DecomposeArgs {
    pub fn resolve(&self) -> Result<DecomposeOptions> {
        let file = FileConfig::load(self.config.as_deref())?;
        let mode = self.mode.or(file.mode).unwrap_or_default();
        let mut solver = file.solver()?;
        if mode == Mode::Real && file.solver.as_ref().and_then(|s| s.get("weights")).is_none() {
            solver.weights = LossWeights::real_data();
        }
        if let Some(lambda) = self.weights.or(file.weights) {
            solver.weights.lambda = lambda;
        }
        match self.alpha_mode.or(file.alpha_mode) {
            Some(AlphaMode::Unit) => solver.weights.alpha = Some(1.0),
            Some(AlphaMode::Stored) => solver.weights.alpha = None,
            None => {}
        }
        if let Some(n) = self.max_iters {
            solver.max_iters = n;
        }
        if let Some(t) = self.tolerance {
            solver.tolerance = t;
        }
        if let Some(seed) = self.seed.or(file.seed) {
            let std = match solver.init {
                MaskInit::Normal { std, .. } => std,
                MaskInit::Zero => 1.0,
            };
            solver.init = MaskInit::Normal { std, seed };
        }
        Ok(DecomposeOptions {
            input: self.input.clone(),
            out: required(self.out.clone(), file.out, "out")?,
            mode,
            solver,
            workers: self.workers.or(file.workers).unwrap_or(0),
        })
    }
}

/// Run one parsed command, printing a short summary to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let opts = a.resolve()?;
            let m = cmd_generate(&opts)?;
            println!("wrote {} samples to {}", m.samples.len(), opts.out.display());
        }
        Command::Metrics(a) => {
            let out = cmd_metrics(&a.resolve()?)?;
            print!("{}", jsonl(&out.rows));
            println!(
                "{}",
                serde_json::to_string(&out.summary).expect("summary serializes")
            );
        }
        Command::Losses(a) => {
            let rows = cmd_losses(&a.resolve()?)?;
            print!("{}", losses_csv(&rows));
        }
        Command::Decompose(a) => {
            for o in cmd_decompose(&a.resolve()?)? {
                println!("{}", serde_json::to_string(&o).expect("outcome serializes"));
            }
        }
        Command::Render(a) => {
            let img = cmd_render(&RenderOptions {
                volume: a.volume,
                axis: a.axis,
                index: a.index,
                window: a.window,
                overlay: a.overlay,
                out: a.out.clone(),
            })?;
            println!("{}x{} slice written to {}", img.width, img.height, a.out.display());
        }
        Command::Verify(a) => {
            let n = cmd_verify(&a.dir)?;
            println!("{n} files ok");
        }
        Command::Phantom(a) => {
            let paths = cmd_phantom(&PhantomOptions {
                out: a.out,
                count: a.count,
                seed: a.seed,
                dims: a.dims,
                spacing: a.spacing,
            })?;
            println!("wrote {} volumes", paths.len());
        }
    }
    Ok(())
}
