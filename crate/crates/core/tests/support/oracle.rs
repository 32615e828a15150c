//! Exhaustive reference loop for the benchmarking winner, written without
//! the engine's task flattening, thread pool or record aggregation.

use optforge::derive_seed;
use optforge::optim::{run_unchecked, ConfigGrid, OptimizerId, RunResult};
use optforge::problem::ProblemInstance;

pub struct Winner {
    pub optimizer: OptimizerId,
    pub config_index: usize,
    pub mean: f64,
    pub f_star: Option<f64>,
}

/// Plays every configuration of every grid `runs` times and returns the
/// winner. Grids must be small enough to be enumerated in full.
pub fn reference_winner(inst: &ProblemInstance, grids: &[ConfigGrid], runs: usize, master: u64) -> Option<Winner> {
    let mut table: Vec<(OptimizerId, usize, Vec<Option<RunResult>>)> = Vec::new();
    for grid in grids {
        for ci in 0..grid.size() {
            let cfg = grid.at(ci);
            let mut rs = Vec::new();
            for r in 0..runs {
                let seed = derive_seed!(master, inst.id.as_str(), grid.optimizer.name(), ci, r);
                rs.push(run_unchecked(grid.optimizer, &cfg, inst, inst.fe_budget, seed).ok());
            }
            table.push((grid.optimizer, ci, rs));
        }
    }
    let usable = |r: &Option<RunResult>| -> Option<f64> {
        let r = r.as_ref()?;
        if r.error.is_none() && r.best_violation == 0.0 {
            r.best_f
        } else {
            None
        }
    };
    let mut f_star = f64::INFINITY;
    let mut worst = f64::NEG_INFINITY;
    let mut any = false;
    for (_, _, rs) in &table {
        for r in rs {
            if let Some(b) = usable(r) {
                any = true;
                f_star = f_star.min(b);
                worst = worst.max(b);
            }
        }
    }
    if !any {
        return None;
    }
    let mut best: Option<Winner> = None;
    for (opt, ci, rs) in &table {
        let mut total = 0.0;
        for r in rs {
            let Some(fb) = usable(r) else { continue };
            let run = r.as_ref().unwrap();
            let mut f0 = if run.f0_violation == 0.0 { run.f0.unwrap() } else { worst };
            if f0 < f_star {
                f0 = f_star;
            }
            let d = if f0 == f_star { 1.0 } else { ((f0 - fb) / (f0 - f_star)).max(0.0).min(1.0) };
            total += d;
        }
        let mean = total / rs.len() as f64;
        let replace = match &best {
            None => true,
            Some(w) => {
                mean > w.mean
                    || (mean == w.mean && (opt.name(), *ci) < (w.optimizer.name(), w.config_index))
            }
        };
        if replace {
            best = Some(Winner { optimizer: *opt, config_index: *ci, mean, f_star: Some(f_star) });
        }
    }
    best
}
