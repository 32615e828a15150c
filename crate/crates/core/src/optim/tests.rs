use rand::seq::IndexedRandom;
use rand::Rng;

use super::*;
use crate::problem::{synthesize_instance, BasicFunction, SynthParams, TransformSpec};

fn sphere(dim: usize, shift: f64) -> ProblemInstance {
    let mut t = TransformSpec::identity(dim);
    t.shift = (0..dim).map(|i| shift * (1.0 + i as f64 / dim as f64)).collect();
    ProblemInstance::single("sphere", BasicFunction::Sphere, t, 20_000).unwrap()
}

fn de_best1() -> Configuration {
    Configuration::default()
        .set("NP", ParamValue::Int(50))
        .set("F", ParamValue::Real(0.5))
        .set("Cr", ParamValue::Real(0.9))
        .set("mutation", ParamValue::Cat("best1".into()))
        .set("bound", ParamValue::Cat("clip".into()))
}

fn in_bounds(inst: &ProblemInstance, x: &[f64]) -> bool {
    x.len() == inst.dim && x.iter().zip(&inst.bounds).all(|(v, (lo, hi))| lo <= v && v <= hi)
}

fn check_trace(r: &RunResult) {
    for w in r.trace.windows(2) {
        let a = Fitness { f: w[0].f, violation: w[0].violation };
        let b = Fitness { f: w[1].f, violation: w[1].violation };
        assert!(b.better_than(&a), "trace not improving: {w:?}");
        assert!(w[0].fe < w[1].fe);
    }
    if let (Some(last), Some(f)) = (r.trace.last(), r.best_f) {
        assert_eq!(last.f, f);
    }
}

#[test]
fn ids_round_trip_and_have_grids() {
    for id in OptimizerId::ALL {
        assert_eq!(id.name().parse::<OptimizerId>().unwrap(), id);
        let json = serde_json::to_string(&id).unwrap();
        assert_eq!(json, format!("\"{}\"", id.name()));
        assert!(config_grid(id).size() >= 1);
    }
    assert!(matches!("lbfgs".parse::<OptimizerId>(), Err(Error::NotFound(_))));
}

#[test]
fn every_optimizer_runs_and_improves() {
    let inst = sphere(3, 20.0);
    for id in OptimizerId::ALL {
        let cfg = config_grid(id).at(0);
        let r = run(id, &cfg, &inst, 2_000, 11).unwrap();
        assert!(r.is_ok(), "{id}: {:?}", r.error);
        assert!(r.fe_used <= 2_000, "{id}");
        assert!(in_bounds(&inst, &r.best_x), "{id}");
        let (b, f0) = (r.best_f.unwrap(), r.f0.unwrap());
        assert!(b <= f0, "{id}");
        check_trace(&r);
        assert_eq!(r, run(id, &cfg, &inst, 2_000, 11).unwrap(), "{id} not deterministic");
    }
}

#[test]
fn zero_budget_fails_without_evaluating() {
    let inst = sphere(4, 0.0);
    for id in OptimizerId::ALL {
        let r = run(id, &config_grid(id).at(0), &inst, 0, 1).unwrap();
        assert_eq!(r.status, RunStatus::Failed, "{id}");
        assert_eq!(r.fe_used, 0);
        assert!(r.best_f.is_none() && r.f0.is_none());
    }
}

#[test]
fn budget_below_population_fails() {
    let inst = sphere(4, 0.0);
    let r = run(OptimizerId::VanillaDe, &de_best1(), &inst, 49, 1).unwrap();
    assert_eq!(r.status, RunStatus::Failed);
    assert_eq!(r.fe_used, 0);
    let r = run(OptimizerId::VanillaDe, &de_best1(), &inst, 50, 1).unwrap();
    assert!(r.is_ok());
    assert_eq!(r.fe_used, 50);
    assert_eq!(r.f0, r.best_f);
}

#[test]
fn config_mismatch_is_an_error() {
    let inst = sphere(2, 0.0);
    let de_cfg = de_best1();
    assert!(matches!(
        run(OptimizerId::DeapDe, &de_cfg, &inst, 100, 0),
        Err(Error::InvalidArgument(_))
    ));
    let off_grid = de_best1().set("NP", ParamValue::Int(7));
    assert!(run(OptimizerId::VanillaDe, &off_grid, &inst, 100, 0).is_err());
    assert!(run_unchecked(OptimizerId::VanillaDe, &off_grid, &inst, 100, 0).unwrap().is_ok());
}

#[test]
fn heavy_tailed_visit_outside_range_fails_cleanly() {
    let inst = sphere(2, 0.0);
    let cfg = config_grid(OptimizerId::DualAnnealing)
        .iter()
        .find(|c| c.real("visit").unwrap() > 3.0)
        .unwrap();
    let r = run(OptimizerId::DualAnnealing, &cfg, &inst, 500, 0).unwrap();
    assert_eq!(r.status, RunStatus::Failed);
    assert!(r.error.unwrap().contains("visiting"));
}

#[test]
fn budget_and_bounds_on_random_instances() {
    let mut rng = seed::rng(77);
    for i in 0..100u64 {
        let dim = rng.random_range(2..=8);
        let k = rng.random_range(1..=3).min(dim);
        let inst = synthesize_instance(SynthParams::new(dim, k, i % 2 == 1), 1000 + i).unwrap();
        let id = *OptimizerId::ALL.choose(&mut rng).unwrap();
        let grid = config_grid(id);
        let cfg = grid.at(rng.random_range(0..grid.size()));
        let budget = rng.random_range(0..1_500);
        let r = run(id, &cfg, &inst, budget, i).unwrap();
        assert!(r.fe_used <= budget, "{id} used {} of {budget}", r.fe_used);
        if r.fe_used > 0 {
            assert!(in_bounds(&inst, &r.best_x), "{id} left the box");
            let b = Fitness { f: r.best_f.unwrap(), violation: r.best_violation };
            let f0 = Fitness { f: r.f0.unwrap(), violation: r.f0_violation };
            assert!(compare(&b, &f0) != std::cmp::Ordering::Greater, "{id}");
            let e = inst.evaluate(&r.best_x).unwrap();
            assert_eq!(e.f, r.best_f.unwrap());
            assert_eq!(e.violation, r.best_violation);
        }
        check_trace(&r);
    }
}

/// Plain DE/best/1/bin written with scalar loops in the raw box.
fn reference_de_best1(inst: &ProblemInstance, budget: usize, seed: u64) -> f64 {
    let mut rng = seed::rng(seed ^ 0x5eed);
    let (np, f, cr, d) = (50usize, 0.5, 0.9, inst.dim);
    let (lo, hi) = inst.bounds[0];
    let mut pop = vec![vec![0.0; d]; np];
    let mut fit = vec![0.0; np];
    for i in 0..np {
        for j in 0..d {
            pop[i][j] = rng.random_range(lo..=hi);
        }
        fit[i] = inst.objective(&pop[i]);
    }
    let mut used = np;
    let mut b = 0;
    for i in 1..np {
        if fit[i] < fit[b] {
            b = i;
        }
    }
    while used + np <= budget {
        for i in 0..np {
            let mut r1 = rng.random_range(0..np);
            while r1 == i {
                r1 = rng.random_range(0..np);
            }
            let mut r2 = rng.random_range(0..np);
            while r2 == i || r2 == r1 {
                r2 = rng.random_range(0..np);
            }
            let jrand = rng.random_range(0..d);
            let mut trial = pop[i].clone();
            for j in 0..d {
                if j == jrand || rng.random::<f64>() < cr {
                    let v = pop[b][j] + f * (pop[r1][j] - pop[r2][j]);
                    trial[j] = v.clamp(lo, hi);
                }
            }
            let ft = inst.objective(&trial);
            used += 1;
            if ft <= fit[i] {
                pop[i] = trial;
                fit[i] = ft;
                if ft < fit[b] {
                    b = i;
                }
            }
        }
    }
    fit.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[test]
fn de_best1_matches_reference_on_shifted_sphere() {
    let inst = sphere(10, 30.0);
    let mut ours = 0;
    let mut reference = 0;
    for s in 0..5 {
        let r = run(OptimizerId::VanillaDe, &de_best1(), &inst, 20_000, s).unwrap();
        if r.best_f.unwrap() <= 1e-3 {
            ours += 1;
        }
        if reference_de_best1(&inst, 20_000, s) <= 1e-3 {
            reference += 1;
        }
    }
    assert!(reference >= 4, "reference solved {reference}/5");
    assert!(ours >= 4, "solved {ours}/5");
}

#[test]
fn bipop_converges_on_sphere() {
    let inst = sphere(10, 30.0);
    let cfg = Configuration::default()
        .set("NP", ParamValue::Int(20))
        .set("elite_ratio", ParamValue::Real(0.5))
        .set("sigma_init", ParamValue::Real(1.0))
        .set("mean_decay", ParamValue::Real(0.0))
        .set("min_num_gens", ParamValue::Int(30))
        .set("popsize_multiplier", ParamValue::Int(2));
    for s in 0..3 {
        let r = run(OptimizerId::BipopCmaEs, &cfg, &inst, 20_000, s).unwrap();
        assert!(r.best_f.unwrap() < 1e-6, "seed {s}: {:?}", r.best_f);
    }
}

#[test]
fn constrained_runs_prefer_feasible_points() {
    let inst = synthesize_instance(SynthParams::new(4, 2, true), 5).unwrap();
    let r = run(OptimizerId::VanillaDe, &de_best1(), &inst, 5_000, 3).unwrap();
    assert!(r.is_ok());
    let e = inst.evaluate(&r.best_x).unwrap();
    assert_eq!(e.violation, r.best_violation);
    if !r.f0_feasible() {
        assert!(r.best_violation <= r.f0_violation);
    }
}

