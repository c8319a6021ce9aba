mod decompose;
mod generate;
mod losses;
mod metrics;
mod phantom;
mod render;
mod verify;

pub use decompose::{cmd_decompose, DecomposeOptions, DecomposeOutcome, MASK_THRESHOLD};
pub use generate::{cmd_generate, GenerateOptions};
pub use losses::{cmd_losses, load_decomposition, load_target, loss_weights, losses_csv, LossRow, LossesOptions};
pub use metrics::{cmd_metrics, jsonl, metrics_csv, pair_files, MetricRow, MetricsOptions, MetricsOutput};
pub use phantom::{cmd_phantom, PhantomOptions};
pub use render::{boundary, cmd_render, default_window, render, RenderOptions};
pub use verify::cmd_verify;
