//! Synthetic problem instances: basic functions, transforms, constraints,
//! and the composition/hybrid synthesis procedure.

mod constraint;
mod functions;
mod instance;
mod transform;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use constraint::{ConstraintKind, ConstraintSpec, ConstraintTemplate, EQ_TOLERANCE};
pub use functions::{BasicFunction, Modality, Tags};
pub use instance::{
    synthesize_instance, ComponentSpec, Evaluation, Paradigm, ProblemInstance, SynthParams,
    DEFAULT_FE_BUDGET,
};
pub use transform::{make_rotation, orthogonality_error, TransformSpec};

use crate::error::{invalid, Result};
use crate::{derive_seed, seed};

/// Generation settings for a whole problem set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetParams {
    pub n_unconstrained: usize,
    pub n_constrained: usize,
    /// Inclusive dimension range.
    pub dim_range: (usize, usize),
    /// Inclusive component-count range.
    pub k_range: (usize, usize),
    pub fe_budget: u64,
    pub rotate: bool,
}

impl Default for SetParams {
    fn default() -> Self {
        SetParams {
            n_unconstrained: 3000,
            n_constrained: 3000,
            dim_range: (2, 50),
            k_range: (1, 5),
            fe_budget: DEFAULT_FE_BUDGET,
            rotate: true,
        }
    }
}

/// Synthesizes `P = P_nc ∪ P_c`.
///
/// Instance `i` (unconstrained ones first) uses `seed_i = derive(master, [i])`.
/// Its dimension and component count are drawn from a stream keyed
/// `derive(seed_i, ["shape"])`; when a hybrid draw cannot split the
/// dimension, the component count is clamped to it.
pub fn synthesize_set(params: &SetParams, master_seed: u64) -> Result<Vec<ProblemInstance>> {
    let (dmin, dmax) = params.dim_range;
    let (kmin, kmax) = params.k_range;
    if dmin < 2 || dmin > dmax {
        return Err(invalid(format!("bad dimension range [{dmin}, {dmax}]")));
    }
    if kmin < 1 || kmin > kmax {
        return Err(invalid(format!("bad component range [{kmin}, {kmax}]")));
    }
    let total = params.n_unconstrained + params.n_constrained;
    let mut out = Vec::with_capacity(total);
    for i in 0..total {
        let constrained = i >= params.n_unconstrained;
        let inst_seed = derive_seed!(master_seed, i);
        let mut shape = seed::rng(derive_seed!(inst_seed, "shape"));
        let dim = shape.random_range(dmin..=dmax);
        let k = shape.random_range(kmin..=kmax).min(dim);
        let sp = SynthParams {
            dim,
            components: k,
            constrained,
            fe_budget: params.fe_budget,
            rotate: params.rotate,
        };
        let mut inst = synthesize_instance(sp, inst_seed)?;
        inst.id = if constrained {
            format!("c-{:05}", i - params.n_unconstrained)
        } else {
            format!("nc-{i:05}")
        };
        out.push(inst);
    }
    Ok(out)
}
