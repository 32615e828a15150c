//! Differential evolution: the classic strategy family and the DEAP example variant.

use std::cmp::Ordering;

use rand::seq::index;
use rand::Rng;

use super::session::{argbest, clip_unit, compare, fail, Abort, Fitness, Repair, Session};
use super::Configuration;
use crate::error::{invalid, Result};
use crate::seed::Rng as SeedRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mutation {
    Best1,
    Best2,
    Rand2,
    Current2Rand,
    Current2Best,
    Rand2Best2,
}

impl Mutation {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "best1" => Mutation::Best1,
            "best2" => Mutation::Best2,
            "rand2" => Mutation::Rand2,
            "current2rand" => Mutation::Current2Rand,
            "current2best" => Mutation::Current2Best,
            "rand2best2" => Mutation::Rand2Best2,
            _ => return None,
        })
    }

    /// Number of distinct random donors besides the target.
    fn donors(self) -> usize {
        match self {
            Mutation::Best1 | Mutation::Current2Best => 2,
            Mutation::Current2Rand => 3,
            Mutation::Best2 => 4,
            Mutation::Rand2 | Mutation::Rand2Best2 => 5,
        }
    }
}

/// Distinct indices in `0..np`, none equal to `skip`.
pub(crate) fn donors(rng: &mut SeedRng, np: usize, skip: usize, k: usize) -> Vec<usize> {
    index::sample(rng, np - 1, k)
        .into_iter()
        .map(|r| if r >= skip { r + 1 } else { r })
        .collect()
}

/// DE with configurable mutation, binomial crossover and bound repair.
///
/// Trials replace their target as soon as they are evaluated and the best
/// index follows immediately, as in SciPy's default updating.
#[derive(Clone, Debug)]
pub(crate) struct VanillaDe {
    pub np: usize,
    pub f: f64,
    pub cr: f64,
    pub mutation: Mutation,
    pub repair: Repair,
}

impl VanillaDe {
    pub fn parse(c: &Configuration) -> Result<Self> {
        let m = c.cat("mutation")?;
        let b = c.cat("bound")?;
        Ok(VanillaDe {
            np: c.int("NP")?,
            f: c.real("F")?,
            cr: c.real("Cr")?,
            mutation: Mutation::parse(m).ok_or_else(|| invalid(format!("unknown mutation {m:?}")))?,
            repair: Repair::parse(b).ok_or_else(|| invalid(format!("unknown bound rule {b:?}")))?,
        })
    }

    pub fn optimize(&self, s: &mut Session, rng: &mut SeedRng) -> Result<(), Abort> {
        let (np, d) = (self.np, s.dim());
        if np < self.mutation.donors() + 1 {
            return fail(format!("NP={np} is too small for the mutation strategy"));
        }
        s.require(np)?;
        let mut pop: Vec<Vec<f64>> = (0..np).map(|_| s.random_unit(rng)).collect();
        let mut fit = Vec::with_capacity(np);
        for x in &pop {
            fit.push(s.eval_unit(x)?);
        }
        s.mark_initial();
        let f = self.f;
        let mut b = argbest(&fit);
        loop {
            for i in 0..np {
                let best = &pop[b];
                let r = donors(rng, np, i, self.mutation.donors());
                let x = &pop[i];
                let p = |k: usize| &pop[r[k]];
                let v: Vec<f64> = match self.mutation {
                    Mutation::Best1 => (0..d).map(|j| best[j] + f * (p(0)[j] - p(1)[j])).collect(),
                    Mutation::Best2 => (0..d)
                        .map(|j| best[j] + f * (p(0)[j] - p(1)[j]) + f * (p(2)[j] - p(3)[j]))
                        .collect(),
                    Mutation::Rand2 => (0..d)
                        .map(|j| p(0)[j] + f * (p(1)[j] - p(2)[j]) + f * (p(3)[j] - p(4)[j]))
                        .collect(),
                    Mutation::Current2Rand => {
                        let k: f64 = rng.random();
                        (0..d)
                            .map(|j| x[j] + k * (p(0)[j] - x[j]) + f * (p(1)[j] - p(2)[j]))
                            .collect()
                    }
                    Mutation::Current2Best => (0..d)
                        .map(|j| x[j] + f * (best[j] - x[j]) + f * (p(0)[j] - p(1)[j]))
                        .collect(),
                    Mutation::Rand2Best2 => (0..d)
                        .map(|j| {
                            p(0)[j]
                                + f * (best[j] - p(0)[j])
                                + f * (p(1)[j] - p(2)[j])
                                + f * (p(3)[j] - p(4)[j])
                        })
                        .collect(),
                };
                let jrand = rng.random_range(0..d);
                let mut trial: Vec<f64> = (0..d)
                    .map(|j| {
                        if j == jrand || rng.random::<f64>() < self.cr {
                            v[j]
                        } else {
                            x[j]
                        }
                    })
                    .collect();
                self.repair.apply(&mut trial, rng);
                let ft = s.eval_unit(&trial)?;
                if compare(&ft, &fit[i]) != Ordering::Greater {
                    pop[i] = trial;
                    fit[i] = ft;
                    if ft.better_than(&fit[b]) {
                        b = i;
                    }
                }
            }
        }
    }
}

/// DE/rand/1/bin as in the DEAP example: in-place replacement, strict improvement.
#[derive(Clone, Debug)]
pub(crate) struct DeapDe {
    pub np: usize,
    pub f: f64,
    pub cr: f64,
}

impl DeapDe {
    pub fn parse(c: &Configuration) -> Result<Self> {
        Ok(DeapDe {
            np: c.int("NP")?,
            f: c.real("F")?,
            cr: c.real("Cr")?,
        })
    }

    pub fn optimize(&self, s: &mut Session, rng: &mut SeedRng) -> Result<(), Abort> {
        let (np, d) = (self.np, s.dim());
        if np < 4 {
            return fail(format!("NP={np} is too small for rand/1"));
        }
        s.require(np)?;
        let mut pop: Vec<Vec<f64>> = (0..np).map(|_| s.random_unit(rng)).collect();
        let mut fit: Vec<Fitness> = Vec::with_capacity(np);
        for x in &pop {
            fit.push(s.eval_unit(x)?);
        }
        s.mark_initial();
        loop {
            for k in 0..np {
                let r = donors(rng, np, k, 3);
                let jrand = rng.random_range(0..d);
                let mut y = pop[k].clone();
                for (j, yj) in y.iter_mut().enumerate() {
                    if j == jrand || rng.random::<f64>() < self.cr {
                        *yj = pop[r[0]][j] + self.f * (pop[r[1]][j] - pop[r[2]][j]);
                    }
                }
                clip_unit(&mut y);
                let fy = s.eval_unit(&y)?;
                if fy.better_than(&fit[k]) {
                    pop[k] = y;
                    fit[k] = fy;
                }
            }
        }
    }
}
