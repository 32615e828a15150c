mod support;

use optforge::bench::{benchmark_instance, benchmark_set, BenchSettings, Pool, PoolEntry};
use optforge::optim::{config_grid, ConfigGrid, OptimizerId, ParamValue};
use optforge::problem::{synthesize_instance, ProblemInstance, SynthParams};

use support::oracle::reference_winner;

fn small_grids() -> Vec<ConfigGrid> {
    let de = config_grid(OptimizerId::VanillaDe)
        .restrict("NP", &[ParamValue::Int(10)])
        .and_then(|g| g.restrict("F", &[ParamValue::Real(0.5)]))
        .and_then(|g| g.restrict("Cr", &[ParamValue::Real(0.9)]))
        .and_then(|g| g.restrict("mutation", &[ParamValue::Cat("best1".into()), ParamValue::Cat("rand2".into())]))
        .and_then(|g| g.restrict("bound", &[ParamValue::Cat("clip".into()), ParamValue::Cat("reflect".into())]))
        .unwrap();
    vec![config_grid(OptimizerId::RandomSearch), de]
}

fn pool(grids: &[ConfigGrid]) -> Pool {
    Pool::new(grids.iter().map(|g| PoolEntry { optimizer: g.optimizer, grid: g.clone() }).collect())
}

fn instances(n: u64) -> Vec<ProblemInstance> {
    (0..n)
        .map(|i| {
            let mut p = SynthParams::new(2 + (i as usize % 4), 1 + (i as usize % 2), i % 3 == 0);
            p.fe_budget = 400;
            let mut inst = synthesize_instance(p, 900 + i).unwrap();
            inst.id = format!("inst-{i}");
            inst
        })
        .collect()
}

#[test]
fn engine_winner_matches_reference_loop() {
    let grids = small_grids();
    assert_eq!(grids[1].size(), 4);
    let pool = pool(&grids);
    let settings = BenchSettings { cap: 64, runs: 3 };
    for inst in instances(8) {
        let (entry, _) = benchmark_instance(&inst, &pool, settings, 5).unwrap();
        let want = reference_winner(&inst, &grids, 3, 5).expect("some feasible run");
        assert_eq!((entry.best_optimizer, entry.best_config_index), (want.optimizer, want.config_index), "{}", inst.id);
        assert_eq!(entry.f_star, want.f_star);
        assert_eq!(entry.mean_eval_of_best, want.mean);
    }
}

#[test]
fn winners_do_not_depend_on_thread_count() {
    let grids = small_grids();
    let pool = pool(&grids);
    let insts = instances(6);
    let settings = BenchSettings { cap: 64, runs: 2 };
    let base = benchmark_set(&insts, &pool, settings, 1, 1).unwrap();
    for jobs in [2, 8] {
        assert_eq!(base, benchmark_set(&insts, &pool, settings, 1, jobs).unwrap());
    }
}

#[test]
fn more_runs_never_raise_f_star() {
    let grids = small_grids();
    let pool = pool(&grids);
    for inst in instances(5) {
        let (few, _) = benchmark_instance(&inst, &pool, BenchSettings { cap: 64, runs: 2 }, 3).unwrap();
        let (many, _) = benchmark_instance(&inst, &pool, BenchSettings { cap: 64, runs: 4 }, 3).unwrap();
        if let (Some(a), Some(b)) = (few.f_star, many.f_star) {
            assert!(b <= a, "{}: {b} > {a}", inst.id);
        }
    }
}
