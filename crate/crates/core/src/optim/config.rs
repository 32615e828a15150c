//! Hyperparameter grids and concrete configurations.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::OptimizerId;
use crate::error::{invalid, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v:?}"),
            ParamValue::Cat(v) => write!(f, "{v}"),
        }
    }
}

/// One assignment of every tunable parameter; serializes as a flat object.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub BTreeMap<String, ParamValue>);

impl Configuration {
    pub fn get(&self, key: &str) -> Result<&ParamValue> {
        self.0
            .get(key)
            .ok_or_else(|| invalid(format!("configuration is missing {key:?}")))
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            ParamValue::Real(v) => Ok(*v),
            ParamValue::Int(v) => Ok(*v as f64),
            ParamValue::Cat(_) => Err(invalid(format!("{key:?} must be numeric"))),
        }
    }

    pub fn int(&self, key: &str) -> Result<usize> {
        match self.get(key)? {
            ParamValue::Int(v) if *v >= 0 => Ok(*v as usize),
            _ => Err(invalid(format!("{key:?} must be a non-negative integer"))),
        }
    }

    pub fn cat(&self, key: &str) -> Result<&str> {
        match self.get(key)? {
            ParamValue::Cat(v) => Ok(v),
            _ => Err(invalid(format!("{key:?} must be categorical"))),
        }
    }

    pub fn set(mut self, key: &str, value: ParamValue) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }
}

/// Ordered parameter option lists for one optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigGrid {
    pub optimizer: OptimizerId,
    pub params: Vec<(String, Vec<ParamValue>)>,
}

fn ints(v: &[i64]) -> Vec<ParamValue> {
    v.iter().map(|&x| ParamValue::Int(x)).collect()
}

fn reals(v: &[f64]) -> Vec<ParamValue> {
    v.iter().map(|&x| ParamValue::Real(x)).collect()
}

fn cats(v: &[&str]) -> Vec<ParamValue> {
    v.iter().map(|&x| ParamValue::Cat(x.to_string())).collect()
}

const NP: [i64; 5] = [10, 20, 50, 100, 200];

/// The tuning grid for `optimizer`, with single-valued settings as singleton options.
pub fn config_grid(optimizer: OptimizerId) -> ConfigGrid {
    use OptimizerId::*;
    let p = |name: &str, opts: Vec<ParamValue>| (name.to_string(), opts);
    let params = match optimizer {
        VanillaDe => vec![
            p("NP", ints(&NP)),
            p("F", reals(&[0.0, 0.5, 0.9])),
            p("Cr", reals(&[0.0, 0.5, 0.9])),
            p(
                "mutation",
                cats(&["best1", "best2", "rand2", "current2rand", "current2best", "rand2best2"]),
            ),
            p("bound", cats(&["clip", "periodic", "reflect", "rand"])),
        ],
        DeapDe => vec![
            p("NP", ints(&NP)),
            p("F", reals(&[0.1, 0.3, 0.5, 0.7, 0.9])),
            p("Cr", reals(&[0.1, 0.3, 0.5, 0.7, 0.9])),
        ],
        VanillaPso => vec![
            p("NP", ints(&NP)),
            p("phi1", reals(&[1.0, 2.0, 3.0])),
            p("phi2", reals(&[1.0, 2.0, 3.0])),
        ],
        SamrGa => vec![
            p("NP", ints(&NP)),
            p("elite_ratio", reals(&[0.0])),
            p("sigma_init", reals(&[0.0, 0.5, 1.0])),
            p("sigma_meta", reals(&[1.0, 2.0, 3.0, 4.0, 5.0])),
            p("sigma_best_limit", reals(&[0.0001, 0.001, 0.1])),
        ],
        SepCmaEs => vec![
            p("n_individuals", ints(&[10, 20, 50, 100])),
            p("c_c", reals(&[1.0, 2.0, 3.0, 4.0, 5.0])),
            p("sigma", reals(&[0.1, 0.3, 0.5])),
        ],
        BipopCmaEs => vec![
            p("NP", ints(&[10, 20, 50, 100])),
            p("elite_ratio", reals(&[0.2, 0.5, 0.7])),
            p("sigma_init", reals(&[1.0])),
            p("mean_decay", reals(&[0.0])),
            p("min_num_gens", ints(&[10, 30, 50])),
            p("popsize_multiplier", ints(&[1, 2, 3, 4, 5])),
        ],
        SimulatedAnnealing => vec![
            p("NP", ints(&NP)),
            p("sigma_init", reals(&[0.1, 0.3, 0.5])),
            p("sigma_decay", reals(&[1.0])),
            p("sigma_limit", reals(&[0.01, 0.05, 0.1])),
            p("temp_init", reals(&[1.0])),
            p("temp_limit", reals(&[0.1])),
            p("temp_decay", reals(&[0.9, 0.99, 0.999])),
            p("boltzmann_const", reals(&[1.0, 5.0, 10.0])),
        ],
        DualAnnealing => vec![
            p("initial_temp", reals(&[523.0, 5230.0, 50000.0])),
            p("visit", reals(&[1.62, 2.62, 3.62])),
            p("restart_temp_ratio", reals(&[2e-5, 2e-3, 2e-1])),
        ],
        Nsa => vec![
            p("sigma", reals(&[0.1, 0.3, 0.5])),
            p("schedule", cats(&["linear", "quadratic"])),
            p("n_samples", ints(&NP)),
            p("rt", reals(&[0.9, 0.99, 0.999])),
        ],
        RandomSearch => vec![],
    };
    ConfigGrid { optimizer, params }
}

impl ConfigGrid {
    /// Cartesian size `Π |options|` (1 for an empty grid).
    pub fn size(&self) -> usize {
        self.params.iter().map(|(_, o)| o.len()).product()
    }

    /// The configuration at position `index` of the lexicographic
    /// enumeration (last parameter varies fastest).
    pub fn at(&self, mut index: usize) -> Configuration {
        let mut picks = vec![0; self.params.len()];
        for (slot, (_, opts)) in picks.iter_mut().zip(&self.params).rev() {
            *slot = index % opts.len();
            index /= opts.len();
        }
        Configuration(
            self.params
                .iter()
                .zip(picks)
                .map(|((name, opts), k)| (name.clone(), opts[k].clone()))
                .collect(),
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..self.size()).map(|i| self.at(i))
    }

    /// Checks that `config` assigns exactly this grid's parameters from its option lists.
    pub fn validate(&self, config: &Configuration) -> Result<()> {
        if config.0.len() != self.params.len() {
            return Err(invalid(format!(
                "{} expects parameters {:?}, got {:?}",
                self.optimizer,
                self.params.iter().map(|(n, _)| n).collect::<Vec<_>>(),
                config.0.keys().collect::<Vec<_>>()
            )));
        }
        for (name, opts) in &self.params {
            let v = config
                .0
                .get(name)
                .ok_or_else(|| invalid(format!("{} config lacks {name:?}", self.optimizer)))?;
            if !opts.contains(v) {
                return Err(invalid(format!(
                    "{} option {name}={v} is not in its grid",
                    self.optimizer
                )));
            }
        }
        Ok(())
    }

    /// Keeps only the listed option values for `name` (used to build sub-grids).
    pub fn restrict(mut self, name: &str, keep: &[ParamValue]) -> Result<Self> {
        let slot = self
            .params
            .iter_mut()
            .find(|(n, _)| n == name)
            .ok_or_else(|| invalid(format!("{} has no parameter {name:?}", self.optimizer)))?;
        slot.1.retain(|v| keep.contains(v));
        if slot.1.is_empty() {
            return Err(invalid(format!("restricting {name:?} left no options")));
        }
        Ok(self)
    }
}

/// The full grid in order when it fits under `cap`; otherwise `cap`
/// distinct configurations sampled uniformly (reported in grid order).
pub fn enumerate_configs(grid: &ConfigGrid, cap: usize, seed: u64) -> Result<Vec<Configuration>> {
    if cap == 0 {
        return Err(invalid("config cap must be at least 1"));
    }
    let size = grid.size();
    if size <= cap {
        return Ok(grid.iter().collect());
    }
    let mut rng = seed::rng(seed);
    let mut picks = index::sample(&mut rng, size, cap).into_vec();
    picks.sort_unstable();
    Ok(picks.into_iter().map(|i| grid.at(i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_sizes() {
        use OptimizerId::*;
        let expected = [
            (VanillaDe, 1080),
            (DeapDe, 125),
            (VanillaPso, 45),
            (SamrGa, 225),
            (SepCmaEs, 60),
            (BipopCmaEs, 180),
            (SimulatedAnnealing, 405),
            (DualAnnealing, 27),
            (Nsa, 90),
            (RandomSearch, 1),
        ];
        for (id, n) in expected {
            assert_eq!(config_grid(id).size(), n, "{id}");
        }
    }

    #[test]
    fn deap_de_options() {
        let g = config_grid(OptimizerId::DeapDe);
        assert_eq!(g.params[0].1, ints(&[10, 20, 50, 100, 200]));
        assert_eq!(g.params[1].1, reals(&[0.1, 0.3, 0.5, 0.7, 0.9]));
        assert_eq!(g.params[2].1, reals(&[0.1, 0.3, 0.5, 0.7, 0.9]));
    }

    #[test]
    fn enumeration_is_lexicographic_and_distinct() {
        let g = config_grid(OptimizerId::DeapDe);
        let first = g.at(0);
        assert_eq!(first.int("NP").unwrap(), 10);
        assert_eq!(first.real("Cr").unwrap(), 0.1);
        let second = g.at(1);
        assert_eq!(second.real("Cr").unwrap(), 0.3);
        assert_eq!(second.real("F").unwrap(), 0.1);
        let all: Vec<_> = g.iter().collect();
        for (i, a) in all.iter().enumerate() {
            g.validate(a).unwrap();
            for b in &all[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn enumerate_under_and_over_cap() {
        let deap = config_grid(OptimizerId::DeapDe);
        assert_eq!(enumerate_configs(&deap, 200, 1).unwrap().len(), 125);
        let de = config_grid(OptimizerId::VanillaDe);
        let a = enumerate_configs(&de, 64, 5).unwrap();
        assert_eq!(a, enumerate_configs(&de, 64, 5).unwrap());
        assert_eq!(a.len(), 64);
        for (i, c) in a.iter().enumerate() {
            assert!(a[i + 1..].iter().all(|d| d != c));
        }
        let rs = config_grid(OptimizerId::RandomSearch);
        let one = enumerate_configs(&rs, 64, 0).unwrap();
        assert_eq!(one, vec![Configuration::default()]);
        assert!(enumerate_configs(&rs, 0, 0).is_err());
    }

    #[test]
    fn validation_and_flat_json() {
        let g = config_grid(OptimizerId::DeapDe);
        let c = g.at(7);
        let s = crate::jsonl::to_canonical_string(&c).unwrap();
        assert_eq!(s, r#"{"Cr":0.5,"F":0.3,"NP":10}"#);
        let back: Configuration = serde_json::from_str(&s).unwrap();
        g.validate(&back).unwrap();
        let bad = c.clone().set("F", ParamValue::Real(0.2));
        assert!(g.validate(&bad).is_err());
        let extra = c.set("mutation", ParamValue::Cat("best1".into()));
        assert!(g.validate(&extra).is_err());
    }

    #[test]
    fn restrict_builds_subgrids() {
        let g = config_grid(OptimizerId::VanillaDe)
            .restrict("NP", &[ParamValue::Int(10), ParamValue::Int(20)])
            .unwrap()
            .restrict("F", &[ParamValue::Real(0.5)])
            .unwrap()
            .restrict("Cr", &[ParamValue::Real(0.5), ParamValue::Real(0.9)])
            .unwrap()
            .restrict("mutation", &[ParamValue::Cat("best1".into())])
            .unwrap()
            .restrict("bound", &[ParamValue::Cat("clip".into())])
            .unwrap();
        assert_eq!(g.size(), 4);
        assert!(g.clone().restrict("F", &[ParamValue::Real(0.3)]).is_err());
    }
}
