//! Grid-search benchmarking that labels each instance with its best
//! configured optimizer.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::error::{invalid, Error, Result};
use crate::optim::{
    self, config_grid, enumerate_configs, ConfigGrid, Configuration, OptimizerId, RunResult,
};
use crate::problem::ProblemInstance;

/// One optimizer and the grid it is tuned over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub optimizer: OptimizerId,
    pub grid: ConfigGrid,
}

impl PoolEntry {
    pub fn full(optimizer: OptimizerId) -> Self {
        PoolEntry {
            optimizer,
            grid: config_grid(optimizer),
        }
    }
}

/// The optimizers under comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    pub entries: Vec<PoolEntry>,
}

impl Pool {
    pub fn new(entries: Vec<PoolEntry>) -> Self {
        Pool { entries }
    }

    /// Every optimizer with its full grid.
    pub fn full() -> Self {
        Self::from_ids(&OptimizerId::ALL)
    }

    pub fn from_ids(ids: &[OptimizerId]) -> Self {
        Pool::new(ids.iter().map(|&id| PoolEntry::full(id)).collect())
    }

    /// The configurations benchmarked for each entry under `cap`.
    ///
    /// The subsample for an optimizer depends only on `(master_seed, optimizer)`,
    /// so every instance of a set sees the same configurations.
    pub fn configurations(&self, cap: usize, master_seed: u64) -> Result<Vec<Vec<Configuration>>> {
        self.entries
            .iter()
            .map(|e| enumerate_configs(&e.grid, cap, derive_seed!(master_seed, "configs", e.optimizer.name())))
            .collect()
    }
}

/// Per-instance benchmarking settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSettings {
    pub cap: usize,
    pub runs: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings { cap: 64, runs: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub instance_id: String,
    pub optimizer: OptimizerId,
    pub config_index: usize,
    pub config: Configuration,
    pub per_run: Vec<RunResult>,
    pub evals: Vec<f64>,
    pub mean_eval: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeEntry {
    pub instance_id: String,
    pub best_optimizer: OptimizerId,
    pub best_config: Configuration,
    pub best_config_index: usize,
    /// Best objective found while benchmarking (feasible points only).
    pub f_star: Option<f64>,
    pub mean_eval_of_best: f64,
    #[serde(default)]
    pub degenerate: bool,
}

impl KnowledgeEntry {
    fn degenerate(instance_id: &str) -> Self {
        KnowledgeEntry {
            instance_id: instance_id.to_string(),
            best_optimizer: OptimizerId::RandomSearch,
            best_config: Configuration::default(),
            best_config_index: 0,
            f_star: None,
            mean_eval_of_best: 0.0,
            degenerate: true,
        }
    }
}

/// Normalized descent of one run towards `f_star`.
///
/// `f0` must not be below `f_star`; equal values count as a full descent.
pub fn descent(f0: f64, f_best: f64, f_star: f64) -> f64 {
    if f0 == f_star {
        return 1.0;
    }
    ((f0 - f_best) / (f0 - f_star)).clamp(0.0, 1.0)
}

/// Scores every run of one instance against the best feasible value found.
///
/// Failed runs and runs that end infeasible score 0. A feasible run whose
/// initial sample held no feasible point is measured from the worst feasible
/// final value observed on the instance.
pub fn score_runs(runs: &[&RunResult]) -> (Option<f64>, Vec<f64>) {
    let feasible: Vec<f64> = runs
        .iter()
        .filter(|r| r.is_ok() && r.best_feasible())
        .map(|r| r.best_f.unwrap())
        .collect();
    let Some(f_star) = feasible.iter().copied().min_by(f64::total_cmp) else {
        return (None, vec![0.0; runs.len()]);
    };
    let worst = feasible.iter().copied().max_by(f64::total_cmp).unwrap();
    let evals = runs
        .iter()
        .map(|r| {
            if !r.is_ok() || !r.best_feasible() {
                return 0.0;
            }
            let f0 = if r.f0_feasible() {
                r.f0.unwrap()
            } else {
                worst
            };
            descent(f0.max(f_star), r.best_f.unwrap(), f_star)
        })
        .collect();
    (Some(f_star), evals)
}

struct Task {
    inst: usize,
    entry: usize,
    config: usize,
    run: usize,
}

fn run_seed(master: u64, inst: &ProblemInstance, opt: OptimizerId, config: usize, run: usize) -> u64 {
    derive_seed!(master, inst.id.as_str(), opt.name(), config, run)
}

fn execute(
    instances: &[ProblemInstance],
    pool: &Pool,
    configs: &[Vec<Configuration>],
    t: &Task,
    master: u64,
) -> RunResult {
    let inst = &instances[t.inst];
    let opt = pool.entries[t.entry].optimizer;
    let cfg = &configs[t.entry][t.config];
    let seed = run_seed(master, inst, opt, t.config, t.run);
    let mut r = match optim::run_unchecked(opt, cfg, inst, inst.fe_budget, seed) {
        Ok(r) => r,
        Err(e) => RunResult {
            status: optim::RunStatus::Failed,
            best_f: None,
            best_violation: 0.0,
            best_x: Vec::new(),
            f0: None,
            f0_violation: 0.0,
            fe_used: 0,
            trace: Vec::new(),
            error: Some(e.to_string()),
        },
    };
    r.trace.clear();
    r
}

/// Argmax of mean eval; ties go to the smaller `(optimizer name, config index)`.
fn select(records: &[BenchmarkRecord]) -> Option<&BenchmarkRecord> {
    records.iter().min_by(|a, b| rank_records(a, b))
}

fn aggregate(
    inst: &ProblemInstance,
    pool: &Pool,
    configs: &[Vec<Configuration>],
    mut results: impl Iterator<Item = RunResult>,
    runs: usize,
) -> (KnowledgeEntry, Vec<BenchmarkRecord>) {
    let mut records = Vec::new();
    for (e, entry) in pool.entries.iter().enumerate() {
        for (c, cfg) in configs[e].iter().enumerate() {
            let per_run: Vec<RunResult> = results.by_ref().take(runs).collect();
            records.push(BenchmarkRecord {
                instance_id: inst.id.clone(),
                optimizer: entry.optimizer,
                config_index: c,
                config: cfg.clone(),
                per_run,
                evals: Vec::new(),
                mean_eval: 0.0,
            });
        }
    }
    let all: Vec<&RunResult> = records.iter().flat_map(|r| r.per_run.iter()).collect();
    let (f_star, evals) = score_runs(&all);
    let mut it = evals.into_iter();
    for rec in &mut records {
        rec.evals = it.by_ref().take(rec.per_run.len()).collect();
        rec.mean_eval = rec.evals.iter().sum::<f64>() / rec.evals.len().max(1) as f64;
    }
    let entry = match (f_star, select(&records)) {
        (Some(f_star), Some(best)) => KnowledgeEntry {
            instance_id: inst.id.clone(),
            best_optimizer: best.optimizer,
            best_config: best.config.clone(),
            best_config_index: best.config_index,
            f_star: Some(f_star),
            mean_eval_of_best: best.mean_eval,
            degenerate: false,
        },
        _ => KnowledgeEntry::degenerate(&inst.id),
    };
    (entry, records)
}

/// Benchmarks one instance: every pooled configuration (capped) times `runs`.
pub fn benchmark_instance(
    instance: &ProblemInstance,
    pool: &Pool,
    settings: BenchSettings,
    master_seed: u64,
) -> Result<(KnowledgeEntry, Vec<BenchmarkRecord>)> {
    let kb = benchmark_set(std::slice::from_ref(instance), pool, settings, master_seed, 1)?;
    let entry = kb.entries.into_iter().next().expect("one instance in, one entry out");
    Ok((entry, kb.records))
}

/// Knowledge entries for a problem set, plus the audit records.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub entries: Vec<KnowledgeEntry>,
    pub records: Vec<BenchmarkRecord>,
}

impl KnowledgeBase {
    /// Winner counts per optimizer name (degenerate entries excluded).
    pub fn winner_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for e in self.entries.iter().filter(|e| !e.degenerate) {
            *m.entry(e.best_optimizer.name().to_string()).or_insert(0) += 1;
        }
        m
    }

    pub fn degenerate_ids(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.degenerate)
            .map(|e| e.instance_id.as_str())
            .collect()
    }
}

/// Benchmarks every instance with `parallelism` worker threads.
///
/// Each (instance, optimizer, config, run) task has its own seed, so the
/// output does not depend on `parallelism`.
pub fn benchmark_set(
    instances: &[ProblemInstance],
    pool: &Pool,
    settings: BenchSettings,
    master_seed: u64,
    parallelism: usize,
) -> Result<KnowledgeBase> {
    if pool.entries.is_empty() {
        return Err(invalid("optimizer pool is empty"));
    }
    if settings.runs == 0 {
        return Err(invalid("runs must be at least 1"));
    }
    let configs = pool.configurations(settings.cap, master_seed)?;
    let per_instance: usize = configs.iter().map(|c| c.len()).sum::<usize>() * settings.runs;
    let mut tasks = Vec::with_capacity(instances.len() * per_instance);
    for i in 0..instances.len() {
        for (e, cs) in configs.iter().enumerate() {
            for c in 0..cs.len() {
                for r in 0..settings.runs {
                    tasks.push(Task {
                        inst: i,
                        entry: e,
                        config: c,
                        run: r,
                    });
                }
            }
        }
    }
    let threads = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let done = AtomicUsize::new(0);
    let step = (per_instance * 10).max(1);
    let results: Vec<RunResult> = threads.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let r = execute(instances, pool, &configs, t, master_seed);
                let n = done.fetch_add(1, AtomicOrdering::Relaxed) + 1;
                if n.is_multiple_of(step) {
                    info!("benchmark progress: {n}/{} runs", tasks.len());
                }
                r
            })
            .collect()
    });
    let mut kb = KnowledgeBase::default();
    let mut it = results.into_iter();
    for inst in instances {
        let (entry, records) = aggregate(inst, pool, &configs, it.by_ref().take(per_instance), settings.runs);
        if entry.degenerate {
            warn!("instance {} is degenerate: no feasible successful run", inst.id);
        }
        kb.entries.push(entry);
        kb.records.extend(records);
    }
    info!("winner counts: {:?}", kb.winner_counts());
    Ok(kb)
}

/// Best-first order of records: higher mean eval, then smaller
/// `(optimizer name, config index)`.
pub fn rank_records(a: &BenchmarkRecord, b: &BenchmarkRecord) -> Ordering {
    b.mean_eval
        .total_cmp(&a.mean_eval)
        .then_with(|| a.optimizer.name().cmp(b.optimizer.name()))
        .then_with(|| a.config_index.cmp(&b.config_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{ParamValue, RunStatus};
    use crate::problem::{synthesize_instance, BasicFunction, SynthParams, TransformSpec};

    fn result(status: RunStatus, f0: f64, fb: f64, v0: f64, vb: f64) -> RunResult {
        RunResult {
            status,
            best_f: Some(fb),
            best_violation: vb,
            best_x: vec![0.0],
            f0: Some(f0),
            f0_violation: v0,
            fe_used: 10,
            trace: Vec::new(),
            error: None,
        }
    }

    #[test]
    fn descent_endpoints() {
        assert_eq!(descent(100.0, 1.0, 0.0), 0.99);
        assert_eq!(descent(5.0, 5.0, 0.0), 0.0);
        assert_eq!(descent(5.0, 0.0, 0.0), 1.0);
        assert_eq!(descent(2.0, 2.0, 2.0), 1.0);
    }

    #[test]
    fn scoring_rules() {
        let ok = RunStatus::Ok;
        let rs = [
            result(ok, 10.0, 2.0, 0.0, 0.0),
            result(ok, 10.0, 0.0, 0.0, 0.0),
            result(RunStatus::Failed, 10.0, -5.0, 0.0, 0.0),
            result(ok, 4.0, 1.0, 0.5, 0.0),
            result(ok, 4.0, 1.0, 0.5, 0.25),
        ];
        let refs: Vec<&RunResult> = rs.iter().collect();
        let (f_star, ev) = score_runs(&refs);
        assert_eq!(f_star, Some(0.0));
        assert_eq!(ev[0], 0.8);
        assert_eq!(ev[1], 1.0);
        assert_eq!(ev[2], 0.0);
        assert_eq!(ev[3], 0.5);
        assert_eq!(ev[4], 0.0);
        let none = [result(ok, 1.0, 1.0, 1.0, 1.0)];
        assert_eq!(score_runs(&[&none[0]]), (None, vec![0.0]));
    }

    fn tiny_pool() -> Pool {
        let de = config_grid(OptimizerId::VanillaDe)
            .restrict("NP", &[ParamValue::Int(10)])
            .unwrap()
            .restrict("F", &[ParamValue::Real(0.5), ParamValue::Real(0.9)])
            .unwrap()
            .restrict("Cr", &[ParamValue::Real(0.5), ParamValue::Real(0.9)])
            .unwrap()
            .restrict("mutation", &[ParamValue::Cat("best1".into())])
            .unwrap()
            .restrict("bound", &[ParamValue::Cat("clip".into())])
            .unwrap();
        Pool::new(vec![
            PoolEntry::full(OptimizerId::RandomSearch),
            PoolEntry {
                optimizer: OptimizerId::VanillaDe,
                grid: de,
            },
        ])
    }

    fn small_set(n: usize) -> Vec<ProblemInstance> {
        (0..n)
            .map(|i| {
                let mut inst = synthesize_instance(SynthParams::new(2 + i % 4, 1 + i % 2, i % 3 == 2), 40 + i as u64).unwrap();
                inst.fe_budget = 600;
                inst.id = format!("t{i}");
                inst
            })
            .collect()
    }

    #[test]
    fn singleton_pool_wins() {
        let inst = small_set(1).remove(0);
        let pool = Pool::from_ids(&[OptimizerId::RandomSearch]);
        let (entry, records) = benchmark_instance(&inst, &pool, BenchSettings { cap: 4, runs: 2 }, 3).unwrap();
        assert_eq!(entry.best_optimizer, OptimizerId::RandomSearch);
        assert_eq!(records.len(), 1);
        assert!(records[0].evals.iter().any(|&e| e == 1.0) || entry.degenerate);
    }

    #[test]
    fn empty_inputs() {
        assert!(benchmark_set(&[], &Pool::new(vec![]), BenchSettings::default(), 0, 1).is_err());
        let kb = benchmark_set(&[], &Pool::full(), BenchSettings::default(), 0, 1).unwrap();
        assert!(kb.entries.is_empty());
    }

    #[test]
    fn records_are_consistent() {
        let set = small_set(6);
        let pool = tiny_pool();
        let kb = benchmark_set(&set, &pool, BenchSettings { cap: 8, runs: 3 }, 11, 2).unwrap();
        assert_eq!(kb.entries.len(), 6);
        assert_eq!(kb.records.len(), 6 * 5);
        for e in &kb.entries {
            let recs: Vec<_> = kb.records.iter().filter(|r| r.instance_id == e.instance_id).collect();
            for r in &recs {
                assert!(r.evals.iter().all(|v| (0.0..=1.0).contains(v)));
                for (run, ev) in r.per_run.iter().zip(&r.evals) {
                    if !run.is_ok() {
                        assert_eq!(*ev, 0.0);
                    }
                    if let (Some(fs), true) = (e.f_star, run.is_ok() && run.best_feasible()) {
                        assert!(fs <= run.best_f.unwrap());
                    }
                }
            }
            if !e.degenerate {
                let top = recs.iter().map(|r| r.mean_eval).fold(0.0, f64::max);
                assert_eq!(e.mean_eval_of_best, top);
                assert!(recs.iter().any(|r| r.evals.contains(&1.0)));
            }
        }
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let set = small_set(5);
        let pool = tiny_pool();
        let s = BenchSettings { cap: 8, runs: 2 };
        let a = benchmark_set(&set, &pool, s, 5, 1).unwrap();
        let b = benchmark_set(&set, &pool, s, 5, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_failed_is_degenerate() {
        let mut t = TransformSpec::identity(3);
        t.shift = vec![1.0; 3];
        let mut inst = ProblemInstance::single("s", BasicFunction::Sphere, t, 5).unwrap();
        inst.fe_budget = 5;
        let pool = Pool::from_ids(&[OptimizerId::DeapDe]);
        let (entry, _) = benchmark_instance(&inst, &pool, BenchSettings { cap: 2, runs: 1 }, 0).unwrap();
        assert!(entry.degenerate);
        assert_eq!(entry.best_optimizer, OptimizerId::RandomSearch);
    }
}
