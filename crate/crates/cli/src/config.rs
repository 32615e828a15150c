//! Pipeline configuration file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use optforge_core::dataset::DegeneratePolicy;
use optforge_core::optim::{Configuration, OptimizerId};
use optforge_core::problem::DEFAULT_FE_BUDGET;
use optforge_core::render::WritingStyle;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub master_seed: u64,
    pub n_unconstrained: usize,
    pub n_constrained: usize,
    pub dim_range: (usize, usize),
    pub k_range: (usize, usize),
    pub fe_budget: u64,
    pub rotate: bool,
    pub runs: usize,
    pub config_cap: usize,
    /// Optimizer pool; empty means every optimizer.
    pub optimizers: Vec<OptimizerId>,
    pub styles: Vec<WritingStyle>,
    /// `0` renders every style for every instance.
    pub styles_per_instance: usize,
    pub degenerate: DegenerateMode,
    pub split_fraction: f64,
    pub batch_size: usize,
    pub n_batches: usize,
    pub homogeneous: bool,
    pub margin: f64,
    /// Worker threads for benchmarking; `0` uses every core.
    pub parallelism: usize,
    pub paths: Paths,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateMode {
    Fail,
    Skip,
    /// Label degenerate instances with default-configured random search.
    Fallback,
}

impl DegenerateMode {
    pub fn policy(self) -> DegeneratePolicy {
        match self {
            DegenerateMode::Fail => DegeneratePolicy::Fail,
            DegenerateMode::Skip => DegeneratePolicy::Skip,
            DegenerateMode::Fallback => DegeneratePolicy::Fallback {
                optimizer: OptimizerId::RandomSearch,
                config: Configuration::default(),
            },
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            master_seed: 0,
            n_unconstrained: 3000,
            n_constrained: 3000,
            dim_range: (2, 50),
            k_range: (1, 5),
            fe_budget: DEFAULT_FE_BUDGET,
            rotate: true,
            runs: 5,
            config_cap: 64,
            optimizers: Vec::new(),
            styles: WritingStyle::ALL.to_vec(),
            styles_per_instance: 0,
            degenerate: DegenerateMode::Fail,
            split_fraction: 0.92,
            batch_size: 4,
            n_batches: 1000,
            homogeneous: true,
            margin: 0.3,
            parallelism: 0,
            paths: Paths::default(),
        }
    }
}

/// Artifact locations; relative entries are resolved against `out_dir`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub out_dir: PathBuf,
    pub problems: PathBuf,
    pub knowledge: PathBuf,
    pub records: PathBuf,
    pub dataset: PathBuf,
    pub train: PathBuf,
    pub eval: PathBuf,
    pub plan: PathBuf,
    pub batches: PathBuf,
    pub outcomes: PathBuf,
    pub repairs: PathBuf,
    pub report: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            out_dir: PathBuf::from("out"),
            problems: "problems.jsonl".into(),
            knowledge: "knowledge.jsonl".into(),
            records: "records.jsonl".into(),
            dataset: "dataset.jsonl".into(),
            train: "train.jsonl".into(),
            eval: "eval.jsonl".into(),
            plan: "plan.json".into(),
            batches: "batches.jsonl".into(),
            outcomes: "outcomes.jsonl".into(),
            repairs: "repairs.jsonl".into(),
            report: "report.json".into(),
        }
    }
}

impl Paths {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn pool_ids(&self) -> Vec<OptimizerId> {
        if self.optimizers.is_empty() {
            OptimizerId::ALL.to_vec()
        } else {
            self.optimizers.clone()
        }
    }
}
