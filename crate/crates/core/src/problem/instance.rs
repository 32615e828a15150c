use std::collections::BTreeSet;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::constraint::{ConstraintKind, ConstraintSpec, ConstraintTemplate};
use super::functions::BasicFunction;
use super::transform::{make_rotation, TransformSpec};
use crate::error::{invalid, Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    Single,
    Composition,
    Hybrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub function: BasicFunction,
    /// Composition weight `w_i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    /// Hybrid segment: 0-based coordinates fed to this component, in order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<Vec<usize>>,
    pub transform: TransformSpec,
}

impl ComponentSpec {
    fn input(&self, x: &[f64]) -> Vec<f64> {
        match &self.segment {
            Some(seg) => self.transform.apply(&seg.iter().map(|&i| x[i]).collect::<Vec<_>>()),
            None => self.transform.apply(x),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let f = self.function.eval(&self.input(x));
        match self.weight {
            Some(w) => w * f,
            None => f,
        }
    }
}

/// Arguments an instance was synthesized from; together with `seed` they
/// regenerate it exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub dim: usize,
    pub components: usize,
    pub constrained: bool,
    pub fe_budget: u64,
    pub rotate: bool,
}

impl SynthParams {
    pub fn new(dim: usize, components: usize, constrained: bool) -> Self {
        SynthParams {
            dim,
            components,
            constrained,
            fe_budget: DEFAULT_FE_BUDGET,
            rotate: true,
        }
    }
}

pub const DEFAULT_FE_BUDGET: u64 = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub id: String,
    pub dim: usize,
    pub bounds: Vec<(f64, f64)>,
    pub paradigm: Paradigm,
    pub components: Vec<ComponentSpec>,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    pub fe_budget: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SynthParams>,
}

/// Objective and constraint values at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub f: f64,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub violation: f64,
}

impl Evaluation {
    pub fn is_feasible(&self) -> bool {
        self.violation == 0.0
    }
}

impl ProblemInstance {
    /// Assembles an instance from explicit parts, checking structural invariants.
    pub fn from_parts(
        id: impl Into<String>,
        bounds: Vec<(f64, f64)>,
        paradigm: Paradigm,
        components: Vec<ComponentSpec>,
        constraints: Vec<ConstraintSpec>,
        fe_budget: u64,
    ) -> Result<Self> {
        let inst = ProblemInstance {
            id: id.into(),
            dim: bounds.len(),
            bounds,
            paradigm,
            components,
            constraints,
            fe_budget,
            seed: 0,
            params: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// A single transformed basic function on its default box.
    pub fn single(
        id: impl Into<String>,
        function: BasicFunction,
        transform: TransformSpec,
        fe_budget: u64,
    ) -> Result<Self> {
        let d = transform.dim();
        let b = function.default_bounds();
        let comp = ComponentSpec {
            function,
            weight: None,
            segment: None,
            transform,
        };
        Self::from_parts(id, vec![b; d], Paradigm::Single, vec![comp], Vec::new(), fe_budget)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 || self.bounds.len() != d {
            return Err(Error::InvalidDimension(d));
        }
        if self.bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(invalid("bounds must satisfy lo < hi"));
        }
        if self.components.is_empty() {
            return Err(invalid("at least one component is required"));
        }
        if self.paradigm == Paradigm::Single && self.components.len() != 1 {
            return Err(invalid("single paradigm requires exactly one component"));
        }
        match self.paradigm {
            Paradigm::Single | Paradigm::Composition => {
                for c in &self.components {
                    let weighted = self.paradigm == Paradigm::Composition;
                    if c.segment.is_some() || c.weight.is_some() != weighted {
                        return Err(invalid("component fields do not match the paradigm"));
                    }
                    if c.transform.dim() != d {
                        return Err(invalid("transform dimension mismatch"));
                    }
                }
            }
            Paradigm::Hybrid => {
                let mut seen = BTreeSet::new();
                for c in &self.components {
                    let seg = c
                        .segment
                        .as_ref()
                        .filter(|_| c.weight.is_none())
                        .ok_or_else(|| invalid("hybrid components need a segment and no weight"))?;
                    if seg.is_empty() || c.transform.dim() != seg.len() {
                        return Err(invalid("segment/transform dimension mismatch"));
                    }
                    for &i in seg {
                        if i >= d || !seen.insert(i) {
                            return Err(invalid("segments must partition the coordinates"));
                        }
                    }
                }
                if seen.len() != d {
                    return Err(invalid("segments must cover every coordinate"));
                }
            }
        }
        for c in &self.constraints {
            if c.shift.len() != d || c.kind != c.template.kind() {
                return Err(invalid("malformed constraint"));
            }
        }
        Ok(())
    }

    pub fn is_constrained(&self) -> bool {
        !self.constraints.is_empty()
    }

    /// Objective value only; `x` must have length `dim`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.components.iter().map(|c| c.value(x)).sum()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        if x.len() != self.dim {
            return Err(invalid(format!("expected {} coordinates, got {}", self.dim, x.len())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> Evaluation {
        let f = self.objective(x);
        let mut g = Vec::new();
        let mut h = Vec::new();
        let mut violation = 0.0;
        for c in &self.constraints {
            let v = c.value(x);
            violation += c.violation(v);
            match c.kind {
                ConstraintKind::Inequality => g.push(v),
                ConstraintKind::Equality => h.push(v),
            }
        }
        Evaluation { f, g, h, violation }
    }

    /// Re-runs synthesis from the recorded parameters and seed.
    pub fn regenerate(&self) -> Result<ProblemInstance> {
        let params = self
            .params
            .ok_or_else(|| invalid("instance carries no synthesis parameters"))?;
        let mut inst = synthesize_instance(params, self.seed)?;
        inst.id = self.id.clone();
        Ok(inst)
    }
}

/// Draws one instance: dimension and component count are given, the
/// paradigm, basic functions, transforms and constraints are sampled from
/// `seed`.
pub fn synthesize_instance(params: SynthParams, seed: u64) -> Result<ProblemInstance> {
    let SynthParams {
        dim,
        components: k,
        constrained,
        fe_budget,
        rotate,
    } = params;
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if k == 0 {
        return Err(invalid("component count must be at least 1"));
    }
    let mut rng = seed::rng(seed);
    let paradigm = if k == 1 {
        Paradigm::Single
    } else if rng.random_bool(0.5) {
        Paradigm::Composition
    } else {
        Paradigm::Hybrid
    };
    if paradigm == Paradigm::Hybrid && k > dim {
        return Err(invalid(format!("cannot split {dim} coordinates into {k} segments")));
    }
    let functions: Vec<BasicFunction> = (0..k)
        .map(|_| BasicFunction::ALL[rng.random_range(0..BasicFunction::ALL.len())])
        .collect();
    let lo = functions
        .iter()
        .map(|f| f.default_bounds().0)
        .fold(f64::INFINITY, f64::min);
    let hi = functions
        .iter()
        .map(|f| f.default_bounds().1)
        .fold(f64::NEG_INFINITY, f64::max);
    let bounds = vec![(lo, hi); dim];

    let segments: Vec<Option<Vec<usize>>> = if paradigm == Paradigm::Hybrid {
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.shuffle(&mut rng);
        let mut cuts: Vec<usize> = index::sample(&mut rng, dim - 1, k - 1)
            .into_iter()
            .map(|c| c + 1)
            .collect();
        cuts.sort_unstable();
        let mut out = Vec::with_capacity(k);
        let mut start = 0;
        for end in cuts.into_iter().chain(std::iter::once(dim)) {
            out.push(Some(perm[start..end].to_vec()));
            start = end;
        }
        out
    } else {
        vec![None; k]
    };

    let mut comps = Vec::with_capacity(k);
    for (function, segment) in functions.into_iter().zip(segments) {
        let n = segment.as_ref().map_or(dim, Vec::len);
        let (flo, fhi) = function.default_bounds();
        let shift: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.8 * flo..=0.8 * fhi))
            .collect();
        let rotation = if rotate {
            Some(make_rotation(n, rng.next_u64())?)
        } else {
            None
        };
        let weight = (paradigm == Paradigm::Composition).then(|| rng.random::<f64>());
        comps.push(ComponentSpec {
            function,
            weight,
            segment,
            transform: TransformSpec { shift, rotation },
        });
    }

    let constraints = if constrained {
        synthesize_constraints(&mut rng, dim, lo, hi)
    } else {
        Vec::new()
    };

    let inst = ProblemInstance {
        id: format!("inst-{seed:016x}"),
        dim,
        bounds,
        paradigm,
        components: comps,
        constraints,
        fe_budget,
        seed,
        params: Some(params),
    };
    debug_assert!(inst.validate().is_ok());
    Ok(inst)
}

fn synthesize_constraints(rng: &mut seed::Rng, dim: usize, lo: f64, hi: f64) -> Vec<ConstraintSpec> {
    let count = rng.random_range(1..=3);
    let picks: Vec<usize> = index::sample(rng, ConstraintTemplate::NAMES.len(), count).into_vec();
    let centre: Vec<f64> = (0..dim)
        .map(|_| rng.random_range(0.5 * lo..=0.5 * hi))
        .collect();
    let half = 0.5 * (hi - lo);
    // y = 0 satisfies the cumulative-sum equality only, so a product
    // equality next to it must target zero for the instance to stay feasible
    let has_cumsum = picks.contains(&2);
    picks
        .into_iter()
        .map(|p| {
            let template = match p {
                0 => ConstraintTemplate::Linear {
                    coeffs: (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect(),
                    bound: rng.random_range(0.0..=dim as f64),
                },
                1 => ConstraintTemplate::Ball {
                    radius: rng.random_range(0.1..=0.5) * half * (dim as f64).sqrt(),
                },
                2 => ConstraintTemplate::CumulativeSum,
                3 => ConstraintTemplate::RosenbrockChain,
                4 => ConstraintTemplate::Product {
                    target: if has_cumsum {
                        0.0
                    } else {
                        rng.random_range(-1.0..=1.0)
                    },
                },
                _ => ConstraintTemplate::Sinusoid {
                    bound: rng.random_range(0.0..=0.5 * dim as f64),
                },
            };
            ConstraintSpec::new(template, centre.clone())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_single(f: BasicFunction, d: usize) -> ProblemInstance {
        ProblemInstance::from_parts(
            "t",
            vec![f.default_bounds(); d],
            Paradigm::Single,
            vec![ComponentSpec {
                function: f,
                weight: None,
                segment: None,
                transform: TransformSpec::identity(d),
            }],
            vec![],
            1000,
        )
        .unwrap()
    }

    #[test]
    fn single_path_has_one_component_and_no_constraints() {
        let inst = synthesize_instance(SynthParams::new(10, 1, false), 1).unwrap();
        assert_eq!(inst.paradigm, Paradigm::Single);
        assert_eq!(inst.components.len(), 1);
        assert!(inst.constraints.is_empty());
    }

    #[test]
    fn sphere_at_origin() {
        let inst = identity_single(BasicFunction::Sphere, 4);
        let e = inst.evaluate(&[0.0; 4]).unwrap();
        assert_eq!(e.f, 0.0);
        assert_eq!(e.violation, 0.0);
        assert!(e.is_feasible());
    }

    #[test]
    fn katsuura_origin_is_zero() {
        let inst = identity_single(BasicFunction::Katsuura, 2);
        assert_eq!(inst.evaluate(&[0.0, 0.0]).unwrap().f, 0.0);
    }

    #[test]
    fn evaluate_rejects_bad_input() {
        let inst = identity_single(BasicFunction::Sphere, 3);
        assert!(inst.evaluate(&[0.0; 2]).is_err());
        assert!(inst.evaluate(&[0.0, f64::NAN, 1.0]).is_err());
        assert!(inst.evaluate(&[0.0, f64::INFINITY, 1.0]).is_err());
    }

    #[test]
    fn hybrid_partition_and_k_errors() {
        let mut hybrids = 0;
        for s in 0..40 {
            let inst = synthesize_instance(SynthParams::new(12, 3, false), s).unwrap();
            if inst.paradigm == Paradigm::Hybrid {
                hybrids += 1;
                let mut all: Vec<usize> = inst
                    .components
                    .iter()
                    .flat_map(|c| c.segment.clone().unwrap())
                    .collect();
                all.sort_unstable();
                assert_eq!(all, (0..12).collect::<Vec<_>>());
            }
        }
        assert!(hybrids > 0);
        let mut hybrid_errs = 0;
        for s in 0..20 {
            match synthesize_instance(SynthParams::new(3, 5, false), s) {
                Ok(i) => assert_eq!(i.paradigm, Paradigm::Composition),
                Err(Error::InvalidArgument(_)) => hybrid_errs += 1,
                Err(e) => panic!("{e}"),
            }
        }
        assert!(hybrid_errs > 0);
        assert!(synthesize_instance(SynthParams::new(1, 1, false), 0).is_err());
        assert!(synthesize_instance(SynthParams::new(4, 0, false), 0).is_err());
    }

    #[test]
    fn constrained_instances_get_one_to_three_constraints() {
        for s in 0..50 {
            let inst = synthesize_instance(SynthParams::new(6, 2, true), s).unwrap();
            assert!((1..=3).contains(&inst.constraints.len()));
            // the shared centre satisfies everything except a non-zero product target
            let centre = inst.constraints[0].shift.clone();
            let e = inst.evaluate(&centre).unwrap();
            let product_target = inst.constraints.iter().any(|c| {
                matches!(c.template, ConstraintTemplate::Product { target } if target != 0.0)
            });
            if !product_target {
                assert_eq!(e.violation, 0.0);
            }
        }
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let inst = synthesize_instance(SynthParams::new(9, 3, true), 77).unwrap();
        assert_eq!(inst.regenerate().unwrap(), inst);
        let a = crate::jsonl::to_canonical_string(&inst).unwrap();
        let back: ProblemInstance = serde_json::from_str(&a).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn composition_matches_hand_assembled_sum() {
        let inst = (0..)
            .map(|s| synthesize_instance(SynthParams::new(16, 2, false), s).unwrap())
            .find(|i| i.paradigm == Paradigm::Composition)
            .unwrap();
        let mut rng = seed::rng(3);
        for _ in 0..100 {
            let x: Vec<f64> = (0..16).map(|_| rng.random_range(-100.0..100.0)).collect();
            let expected: f64 = inst
                .components
                .iter()
                .map(|c| c.weight.unwrap() * c.function.eval(&c.transform.apply(&x)))
                .sum();
            let got = inst.evaluate(&x).unwrap().f;
            assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
    }
}
