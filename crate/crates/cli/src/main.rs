mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optforge_core::metrics::PerfMode;
use optforge_core::optim::OptimizerId;
use optforge_core::render::WritingStyle;

use crate::config::{DegenerateMode, PipelineConfig};

/// Synthetic optimization problems, optimizer benchmarking and
/// instruction-dataset construction.
#[derive(Parser, Debug)]
#[command(name = "optforge", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Master seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML pipeline configuration
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Benchmark worker threads (0 = all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overwrite existing outputs
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the problem set
    Synth(SynthArgs),
    /// Grid-search the optimizer pool on every problem
    Bench(BenchArgs),
    /// Render prompt/answer pairs
    Build(BuildArgs),
    /// Split the dataset into train and eval sets by instance
    Split(SplitArgs),
    /// Compute sampling weights and draw training batches
    Plan(PlanArgs),
    /// Score evaluation outcomes
    Metrics(MetricsArgs),
    /// Print the prompt for one instance and style
    Render(RenderArgs),
}

#[derive(Args, Debug, Default)]
pub struct SynthArgs {
    #[arg(long)]
    pub count_nc: Option<usize>,
    #[arg(long)]
    pub count_c: Option<usize>,
    #[arg(long)]
    pub dmin: Option<usize>,
    #[arg(long)]
    pub dmax: Option<usize>,
    #[arg(long)]
    pub kmin: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub fe_budget: Option<u64>,
    /// Disable rotations
    #[arg(long)]
    pub no_rotate: bool,
}

#[derive(Args, Debug, Default)]
pub struct BenchArgs {
    /// Independent runs per configuration
    #[arg(long)]
    pub runs: Option<usize>,
    /// Maximum configurations per optimizer
    #[arg(long)]
    pub cap: Option<usize>,
    /// Optimizer pool, comma separated
    #[arg(long, value_delimiter = ',')]
    pub optimizers: Option<Vec<OptimizerId>>,
    /// Also write the per-configuration records sidecar
    #[arg(long)]
    pub records: bool,
}

#[derive(Args, Debug, Default)]
pub struct BuildArgs {
    /// Writing styles, comma separated
    #[arg(long, value_delimiter = ',')]
    pub styles: Option<Vec<WritingStyle>>,
    #[arg(long)]
    pub styles_per_instance: Option<usize>,
    #[arg(long, value_enum)]
    pub degenerate: Option<DegenerateMode>,
}

#[derive(Args, Debug, Default)]
pub struct SplitArgs {
    /// Share of pairs in the training set
    #[arg(long)]
    pub fraction: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct PlanArgs {
    /// Instruction set to plan over (default: the training split)
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub n_batches: Option<usize>,
    /// Fill each batch from one instance
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub homogeneous: Option<bool>,
}

#[derive(Args, Debug, Default)]
pub struct MetricsArgs {
    #[arg(long)]
    pub outcomes: Option<PathBuf>,
    /// Repair records (original/repaired program pairs)
    #[arg(long)]
    pub repairs: Option<PathBuf>,
    /// Instruction pairs whose prompts and answers are token-counted
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Runs per instance (inferred from the outcomes when absent)
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long, value_enum, default_value = "descent")]
    pub perf_mode: PerfModeArg,
}

#[derive(Clone, Copy, Debug, Default, clap::ValueEnum)]
pub enum PerfModeArg {
    #[default]
    Descent,
    Gap,
}

impl From<PerfModeArg> for PerfMode {
    fn from(m: PerfModeArg) -> Self {
        match m {
            PerfModeArg::Descent => PerfMode::Descent,
            PerfModeArg::Gap => PerfMode::Gap,
        }
    }
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub instance: String,
    #[arg(long, default_value = "PY_LOOP")]
    pub style: WritingStyle,
    /// Also print the answer program from the knowledge file
    #[arg(long)]
    pub answer: bool,
}

fn effective_config(g: &Global) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &g.out {
        cfg.paths.out_dir = o.clone();
    }
    if let Some(j) = g.jobs {
        cfg.parallelism = j;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OPT_FORGE_LOG", "info")).init();
    let cli = Cli::parse();
    let result = effective_config(&cli.global).and_then(|cfg| commands::run(cfg, cli.global.force, cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
