//! The optimizer pool: ten optimizers behind one [`run`] entry point.
//!
//! Every optimizer draws from a single seeded stream, spends evaluations
//! through a budget-counting [`Session`], and keeps candidates inside the
//! instance box. Population methods work in the unit cube `[-1, 1]^D`
//! mapped affinely onto the bounds, so step sizes are relative to the
//! half-width of the search range.

mod annealing;
mod cmaes;
mod config;
mod de;
mod ga;
mod pso;
mod session;

use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{config_grid, enumerate_configs, ConfigGrid, Configuration, ParamValue};
pub use session::{compare, ConstraintPolicy, Fitness};

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::seed;
use session::{Abort, Session};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerId {
    VanillaDe,
    DeapDe,
    VanillaPso,
    SamrGa,
    SepCmaEs,
    BipopCmaEs,
    SimulatedAnnealing,
    DualAnnealing,
    Nsa,
    RandomSearch,
}

impl OptimizerId {
    pub const ALL: [OptimizerId; 10] = [
        OptimizerId::VanillaDe,
        OptimizerId::DeapDe,
        OptimizerId::VanillaPso,
        OptimizerId::SamrGa,
        OptimizerId::SepCmaEs,
        OptimizerId::BipopCmaEs,
        OptimizerId::SimulatedAnnealing,
        OptimizerId::DualAnnealing,
        OptimizerId::Nsa,
        OptimizerId::RandomSearch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerId::VanillaDe => "vanilla_de",
            OptimizerId::DeapDe => "deap_de",
            OptimizerId::VanillaPso => "vanilla_pso",
            OptimizerId::SamrGa => "samr_ga",
            OptimizerId::SepCmaEs => "sep_cma_es",
            OptimizerId::BipopCmaEs => "bipop_cma_es",
            OptimizerId::SimulatedAnnealing => "simulated_annealing",
            OptimizerId::DualAnnealing => "dual_annealing",
            OptimizerId::Nsa => "nsa",
            OptimizerId::RandomSearch => "random_search",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            OptimizerId::VanillaDe => "Vanilla DE",
            OptimizerId::DeapDe => "DEAP-DE",
            OptimizerId::VanillaPso => "Vanilla PSO",
            OptimizerId::SamrGa => "SAMR-GA",
            OptimizerId::SepCmaEs => "Sep-CMA-ES",
            OptimizerId::BipopCmaEs => "BIPOP-CMA-ES",
            OptimizerId::SimulatedAnnealing => "Simulated Annealing",
            OptimizerId::DualAnnealing => "Dual Annealing",
            OptimizerId::Nsa => "NSA",
            OptimizerId::RandomSearch => "Random Search",
        }
    }
}

impl fmt::Display for OptimizerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OptimizerId::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::NotFound(format!("optimizer {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One best-so-far improvement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub fe: u64,
    pub f: f64,
    pub violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub status: RunStatus,
    /// Best point under the feasibility rules; `None` when nothing was evaluated.
    pub best_f: Option<f64>,
    pub best_violation: f64,
    pub best_x: Vec<f64>,
    /// Best objective of the initial sample.
    pub f0: Option<f64>,
    pub f0_violation: f64,
    pub fe_used: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TracePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunResult {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }

    pub fn best_feasible(&self) -> bool {
        self.best_f.is_some() && self.best_violation == 0.0
    }

    pub fn f0_feasible(&self) -> bool {
        self.f0.is_some() && self.f0_violation == 0.0
    }
}

/// Runs `optimizer` with `config` on `instance` for at most `fe_budget` evaluations.
///
/// A configuration that does not belong to the optimizer's grid is an error.
/// Failures inside the optimizer, including panics and budgets too small for
/// the initial sample, come back as `status = failed`.
pub fn run(
    optimizer: OptimizerId,
    config: &Configuration,
    instance: &ProblemInstance,
    fe_budget: u64,
    seed: u64,
) -> Result<RunResult> {
    config_grid(optimizer).validate(config)?;
    run_unchecked(optimizer, config, instance, fe_budget, seed)
}

/// [`run`] without the grid membership check, for configurations outside
/// the tuning grid (parameter types are still checked).
pub fn run_unchecked(
    optimizer: OptimizerId,
    config: &Configuration,
    instance: &ProblemInstance,
    fe_budget: u64,
    seed: u64,
) -> Result<RunResult> {
    instance.validate()?;
    let params = Params::parse(optimizer, config)?;
    let mut sess = Session::new(instance, fe_budget);
    let mut rng = seed::rng(seed);
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| params.execute(&mut sess, &mut rng)));
    let error = match outcome {
        Ok(Ok(())) | Ok(Err(Abort::Budget)) => None,
        Ok(Err(Abort::Failed(msg))) => Some(msg),
        Err(p) => Some(
            p.downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "optimizer panicked".to_string()),
        ),
    };
    Ok(sess.finish(error))
}

/// Parsed parameters of one optimizer.
#[derive(Clone, Debug)]
enum Params {
    VanillaDe(de::VanillaDe),
    DeapDe(de::DeapDe),
    VanillaPso(pso::Pso),
    SamrGa(ga::SamrGa),
    SepCmaEs(cmaes::SepCmaEs),
    BipopCmaEs(cmaes::Bipop),
    SimulatedAnnealing(annealing::SimAnneal),
    DualAnnealing(annealing::DualAnnealing),
    Nsa(annealing::Nsa),
    RandomSearch,
}

impl Params {
    fn parse(optimizer: OptimizerId, c: &Configuration) -> Result<Self> {
        Ok(match optimizer {
            OptimizerId::VanillaDe => Params::VanillaDe(de::VanillaDe::parse(c)?),
            OptimizerId::DeapDe => Params::DeapDe(de::DeapDe::parse(c)?),
            OptimizerId::VanillaPso => Params::VanillaPso(pso::Pso::parse(c)?),
            OptimizerId::SamrGa => Params::SamrGa(ga::SamrGa::parse(c)?),
            OptimizerId::SepCmaEs => Params::SepCmaEs(cmaes::SepCmaEs::parse(c)?),
            OptimizerId::BipopCmaEs => Params::BipopCmaEs(cmaes::Bipop::parse(c)?),
            OptimizerId::SimulatedAnnealing => {
                Params::SimulatedAnnealing(annealing::SimAnneal::parse(c)?)
            }
            OptimizerId::DualAnnealing => {
                Params::DualAnnealing(annealing::DualAnnealing::parse(c)?)
            }
            OptimizerId::Nsa => Params::Nsa(annealing::Nsa::parse(c)?),
            OptimizerId::RandomSearch => {
                if !c.0.is_empty() {
                    return Err(crate::error::invalid("random_search takes no parameters"));
                }
                Params::RandomSearch
            }
        })
    }

    fn execute(&self, s: &mut Session, rng: &mut seed::Rng) -> Result<(), Abort> {
        match self {
            Params::VanillaDe(p) => p.optimize(s, rng),
            Params::DeapDe(p) => p.optimize(s, rng),
            Params::VanillaPso(p) => p.optimize(s, rng),
            Params::SamrGa(p) => p.optimize(s, rng),
            Params::SepCmaEs(p) => p.optimize(s, rng),
            Params::BipopCmaEs(p) => p.optimize(s, rng),
            Params::SimulatedAnnealing(p) => p.optimize(s, rng),
            Params::DualAnnealing(p) => p.optimize(s, rng),
            Params::Nsa(p) => p.optimize(s, rng),
            Params::RandomSearch => random_search(s, rng),
        }
    }
}

/// Uniform sampling of the box until the budget runs out.
fn random_search(s: &mut Session, rng: &mut seed::Rng) -> Result<(), Abort> {
    s.require(1)?;
    let u = s.random_unit(rng);
    s.eval_unit(&u)?;
    s.mark_initial();
    loop {
        let u = s.random_unit(rng);
        s.eval_unit(&u)?;
    }
}

#[cfg(test)]
mod tests;
