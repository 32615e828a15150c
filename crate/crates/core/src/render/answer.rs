//! Optimizer program templates for instruction answers.
//!
//! Every template targets the `optforge_runtime` Python namespace:
//! `optforge_runtime.optimizers` exposes one class per optimizer, each
//! constructed from its configuration and driven through
//! `minimize(objective, bounds, fe_budget, constraints=None)`, which returns
//! `(best_x, best_f)`. Placeholders are written `{{name}}`.

use std::collections::BTreeSet;

use crate::error::{invalid, Result};
use crate::optim::{Configuration, OptimizerId, ParamValue};

const PRELUDE: &str = "\
import numpy as np
from optforge_runtime import optimizers

";

const DRIVER: &str = "

def solve(objective, bounds, fe_budget, constraints=None):
    optimizer = build_optimizer()
    best_x, best_f = optimizer.minimize(
        objective,
        np.asarray(bounds, dtype=float),
        fe_budget,
        constraints=constraints,
    )
    return best_x, best_f
";

fn body(id: OptimizerId) -> &'static str {
    match id {
        OptimizerId::RandomSearch => "\
def build_optimizer():
    # uniform sampling inside the bounds until the budget is spent
    return optimizers.RandomSearch()
",
        OptimizerId::VanillaDe => "\
def build_optimizer():
    return optimizers.DifferentialEvolution(
        population_size={{NP}},
        scale_factor={{F}},
        crossover_rate={{Cr}},
        mutation={{mutation}},
        boundary={{bound}},
    )
",
        OptimizerId::DeapDe => "\
def build_optimizer():
    # DE/rand/1/bin with in-place replacement
    return optimizers.DeapDE(
        population_size={{NP}},
        F={{F}},
        CR={{Cr}},
    )
",
        OptimizerId::VanillaPso => "\
def build_optimizer():
    return optimizers.ParticleSwarm(
        swarm_size={{NP}},
        phi1={{phi1}},
        phi2={{phi2}},
    )
",
        OptimizerId::SamrGa => "\
def build_optimizer():
    # self-adaptive mutation rate GA
    return optimizers.SAMRGA(
        population_size={{NP}},
        elite_ratio={{elite_ratio}},
        sigma_init={{sigma_init}},
        sigma_meta={{sigma_meta}},
        sigma_best_limit={{sigma_best_limit}},
    )
",
        OptimizerId::SepCmaEs => "\
def build_optimizer():
    return optimizers.SepCMAES(
        population_size={{n_individuals}},
        c_c={{c_c}},
        sigma={{sigma}},
    )
",
        OptimizerId::BipopCmaEs => "\
def build_optimizer():
    # CMA-ES with alternating large and small population restarts
    return optimizers.BIPOPCMAES(
        population_size={{NP}},
        elite_ratio={{elite_ratio}},
        sigma_init={{sigma_init}},
        mean_decay={{mean_decay}},
        min_num_gens={{min_num_gens}},
        popsize_multiplier={{popsize_multiplier}},
    )
",
        OptimizerId::SimulatedAnnealing => "\
def build_optimizer():
    return optimizers.SimulatedAnnealing(
        population_size={{NP}},
        sigma_init={{sigma_init}},
        sigma_decay={{sigma_decay}},
        sigma_limit={{sigma_limit}},
        temp_init={{temp_init}},
        temp_limit={{temp_limit}},
        temp_decay={{temp_decay}},
        boltzmann_const={{boltzmann_const}},
    )
",
        OptimizerId::DualAnnealing => "\
def build_optimizer():
    return optimizers.DualAnnealing(
        initial_temp={{initial_temp}},
        visit={{visit}},
        restart_temp_ratio={{restart_temp_ratio}},
    )
",
        OptimizerId::Nsa => "\
def build_optimizer():
    return optimizers.NSA(
        sigma={{sigma}},
        schedule={{schedule}},
        n_samples={{n_samples}},
        rt={{rt}},
    )
",
    }
}

/// Python literal for a configuration value.
pub(crate) fn py_value(v: &ParamValue) -> String {
    match v {
        ParamValue::Int(i) => i.to_string(),
        ParamValue::Real(r) => super::python::lit(*r),
        ParamValue::Cat(s) => format!("{s:?}"),
    }
}

/// Names of the `{{name}}` placeholders in `template`, in order.
fn placeholders(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(a) = rest.find("{{") {
        let tail = &rest[a + 2..];
        let b = tail.find("}}").expect("unterminated placeholder");
        out.push(&tail[..b]);
        rest = &tail[b + 2..];
    }
    out
}

/// Interpolates the template of `id` with `config`. Every placeholder must
/// be supplied and every config key used.
pub fn answer_code(id: OptimizerId, config: &Configuration) -> Result<String> {
    let template = body(id);
    let wanted: BTreeSet<&str> = placeholders(template).into_iter().collect();
    let given: BTreeSet<&str> = config.0.keys().map(String::as_str).collect();
    if wanted != given {
        return Err(invalid(format!(
            "{id} template expects parameters {wanted:?}, configuration has {given:?}"
        )));
    }
    let mut code = String::from(PRELUDE);
    let mut filled = template.to_string();
    for (k, v) in &config.0 {
        filled = filled.replace(&format!("{{{{{k}}}}}"), &py_value(v));
    }
    code.push_str(&filled);
    code.push_str(DRIVER);
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::config_grid;

    #[test]
    fn every_grid_point_fills_its_template() {
        for id in OptimizerId::ALL {
            let grid = config_grid(id);
            for i in [0, grid.size() - 1] {
                let code = answer_code(id, &grid.at(i)).unwrap();
                assert!(!code.contains("{{"), "{id}");
            }
        }
    }

    #[test]
    fn extra_or_missing_keys_are_rejected() {
        let mut c = config_grid(OptimizerId::DeapDe).at(0);
        assert!(answer_code(OptimizerId::VanillaPso, &c).is_err());
        c.0.remove("F");
        assert!(answer_code(OptimizerId::DeapDe, &c).is_err());
    }
}
