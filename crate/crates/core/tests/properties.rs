use std::collections::BTreeSet;

use proptest::prelude::*;

use optforge::bench::descent;
use optforge::dataset::{
    contrastive_loss, cosine_distance, sampling_weights, split, InstructionPair, InstructionSet,
};
use optforge::metrics::{
    error_rate, line_diff, optimization_performance, EvalOutcome, OutcomeStatus, PerfMode,
};
use optforge::optim::{compare, Fitness, OptimizerId};
use optforge::problem::{synthesize_instance, BasicFunction, Paradigm, SynthParams, TransformSpec};
use optforge::problem::{make_rotation, ProblemInstance};
use optforge::render::WritingStyle;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hybrid_segments_partition(d in 2usize..30, k in 1usize..6, seed in any::<u64>()) {
        let inst = synthesize_instance(SynthParams::new(d, k.min(d), false), seed).unwrap();
        if inst.paradigm == Paradigm::Hybrid {
            let mut all: Vec<usize> = inst.components.iter().flat_map(|c| c.segment.clone().unwrap()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..d).collect::<Vec<_>>());
        }
    }

    #[test]
    fn composition_is_weighted_sum(d in 2usize..12, k in 1usize..5, seed in any::<u64>(), u in prop::collection::vec(-1.0f64..1.0, 12)) {
        let inst = synthesize_instance(SynthParams::new(d, k.min(d), false), seed).unwrap();
        let x: Vec<f64> = inst.bounds.iter().zip(&u).map(|(b, t)| 0.5 * (b.0 + b.1) + 0.5 * (b.1 - b.0) * t).collect();
        let mut want = 0.0;
        for c in &inst.components {
            let input: Vec<f64> = match &c.segment {
                Some(s) => s.iter().map(|&i| x[i]).collect(),
                None => x.clone(),
            };
            let n = input.len();
            let mut z = vec![0.0; n];
            for i in 0..n {
                let y = input[i] - c.transform.shift[i];
                for (j, zj) in z.iter_mut().enumerate() {
                    let m = c.transform.rotation.as_ref().map_or(if i == j { 1.0 } else { 0.0 }, |m| m[i][j]);
                    *zj += m * y;
                }
            }
            want += c.weight.unwrap_or(1.0) * c.function.eval(&z);
        }
        prop_assert!(rel_close(inst.evaluate(&x).unwrap().f, want, 1e-12));
    }

    #[test]
    fn transformed_minimum_is_preserved(fi in 0usize..12, d in 2usize..10, seed in any::<u64>()) {
        let f = BasicFunction::ALL[fi];
        let mut t = TransformSpec::identity(d);
        t.rotation = Some(make_rotation(d, seed).unwrap());
        t.shift = (0..d).map(|i| ((seed >> (i % 60)) & 7) as f64 - 3.5).collect();
        let x = t.preimage(&f.minimizer(d));
        let inst = ProblemInstance::single("m", f, t, 100).unwrap();
        let v = inst.objective(&x);
        // |Σz² − D|^{1/4} turns a 1e-16 rounding residue into ~1e-4
        let tol = if f == BasicFunction::Happycat { 1e-3 } else { 1e-9 };
        prop_assert!((v - f.minimum(d)).abs() <= tol * f.minimum(d).abs().max(1.0), "{:?}: {}", f, v);
    }

    #[test]
    fn synthesis_is_deterministic(d in 2usize..20, constrained in any::<bool>(), seed in any::<u64>()) {
        let p = SynthParams::new(d, 3.min(d), constrained);
        prop_assert_eq!(synthesize_instance(p, seed).unwrap(), synthesize_instance(p, seed).unwrap());
    }

    #[test]
    fn feasibility_order_is_total_and_transitive(v in prop::collection::vec((-5.0f64..5.0, prop_oneof![Just(0.0), 0.0f64..3.0]), 3)) {
        let f: Vec<Fitness> = v.iter().map(|&(f, violation)| Fitness { f, violation }).collect();
        let (a, b, c) = (f[0], f[1], f[2]);
        prop_assert_eq!(compare(&a, &b), compare(&b, &a).reverse());
        if compare(&a, &b).is_le() && compare(&b, &c).is_le() {
            prop_assert!(compare(&a, &c).is_le());
        }
    }

    #[test]
    fn descent_is_a_fraction(f0 in -1e3f64..1e3, gap in 0.0f64..1e3, fb in -2e3f64..2e3) {
        let d = descent(f0, fb, f0 - gap);
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn cosine_symmetry_and_scale(a in prop::collection::vec(-10.0f64..10.0, 1..8), c in 0.01f64..100.0, b0 in prop::collection::vec(-10.0f64..10.0, 8)) {
        let b: Vec<f64> = b0[..a.len()].to_vec();
        prop_assume!(a.iter().any(|v| v.abs() > 1e-3) && b.iter().any(|v| v.abs() > 1e-3));
        let g = cosine_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&g));
        prop_assert!((g - cosine_distance(&b, &a).unwrap()).abs() < 1e-15);
        let cb: Vec<f64> = b.iter().map(|v| c * v).collect();
        prop_assert!((g - cosine_distance(&a, &cb).unwrap()).abs() < 1e-12);
        for same in [true, false] {
            prop_assert!(contrastive_loss(&a, &b, same, 0.3).unwrap() >= 0.0);
        }
        let ca: Vec<f64> = a.iter().map(|v| c * v).collect();
        prop_assert!(contrastive_loss(&a, &ca, true, 0.3).unwrap() < 1e-12);
    }

    #[test]
    fn weights_sum_to_one_and_split_partitions(labels in prop::collection::vec(0usize..10, 1..300), per in 1usize..7, frac in 0.05f64..0.95, seed in any::<u64>()) {
        let pairs: Vec<InstructionPair> = labels.iter().enumerate().map(|(i, &l)| InstructionPair {
            q: String::new(),
            a: String::new(),
            instance_id: format!("p{}", i / per),
            style: WritingStyle::ALL[i % 6],
            label: OptimizerId::ALL[l],
        }).collect();
        let set = InstructionSet { pairs };
        let plan = sampling_weights(&set).unwrap();
        prop_assert!((plan.total() - 1.0).abs() <= 1e-12);
        let (train, eval) = split(&set, frac, seed).unwrap();
        prop_assert_eq!(train.pairs.len() + eval.pairs.len(), set.pairs.len());
        let a: BTreeSet<_> = train.pairs.iter().map(|p| p.instance_id.clone()).collect();
        let b: BTreeSet<_> = eval.pairs.iter().map(|p| p.instance_id.clone()).collect();
        prop_assert!(a.is_disjoint(&b));
        let mut merged: Vec<_> = train.pairs.iter().chain(&eval.pairs).map(|p| (p.instance_id.clone(), p.style)).collect();
        let mut orig: Vec<_> = set.pairs.iter().map(|p| (p.instance_id.clone(), p.style)).collect();
        merged.sort();
        orig.sort();
        prop_assert_eq!(merged, orig);
    }

    #[test]
    fn line_diff_bounds(a in prop::collection::vec("[abc]{0,3}", 1..25), b in prop::collection::vec("[abc]{0,3}", 0..25)) {
        let a = a.join("\n") + "\n";
        let b = b.join("\n");
        let la = a.lines().count();
        prop_assume!(la > 0);
        prop_assert!(line_diff(&a, &b).unwrap() <= la);
        prop_assert_eq!(line_diff(&a, &a).unwrap(), 0);
    }

    #[test]
    fn metrics_permutation_and_monotonicity(
        raw in prop::collection::vec((any::<bool>(), 0.0f64..100.0, 0.0f64..1.0), 1..40),
        rot in 0usize..40,
        pick in 0usize..40,
        shrink in 0.0f64..1.0,
    ) {
        let outcomes: Vec<EvalOutcome> = raw.iter().enumerate().map(|(i, &(ok, f0, frac))| EvalOutcome {
            instance_id: format!("p{i}"),
            run_index: 1,
            status: if ok { OutcomeStatus::Ok } else { OutcomeStatus::Error },
            f0: Some(f0),
            f_best: Some(f0 * frac),
            f_star_ref: 0.0,
        }).collect();
        let n = outcomes.len();
        let mut rotated = outcomes.clone();
        rotated.rotate_left(rot % n);
        let perf = optimization_performance(&outcomes, PerfMode::Descent).unwrap();
        prop_assert!((perf - optimization_performance(&rotated, PerfMode::Descent).unwrap()).abs() < 1e-12);
        let err = error_rate(&outcomes, n, 1).unwrap();
        prop_assert_eq!(err, error_rate(&rotated, n, 1).unwrap());
        let ok_frac = outcomes.iter().filter(|o| o.status == OutcomeStatus::Ok).count() as f64 / n as f64;
        prop_assert_eq!(err + ok_frac, 1.0);
        let mut better = outcomes.clone();
        let k = pick % n;
        better[k].f_best = better[k].f_best.map(|f| f * shrink);
        prop_assert!(optimization_performance(&better, PerfMode::Descent).unwrap() >= perf - 1e-15);
    }
}
