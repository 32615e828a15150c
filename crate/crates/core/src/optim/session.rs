//! Budget accounting, best-so-far tracking and the feasibility order.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{RunResult, RunStatus, TracePoint};
use crate::problem::{Evaluation, ProblemInstance, EQ_TOLERANCE};
use crate::seed;

/// Objective value and total constraint violation of one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub f: f64,
    pub violation: f64,
}

impl Fitness {
    pub fn feasible(f: f64) -> Self {
        Fitness { f, violation: 0.0 }
    }

    pub fn is_feasible(&self) -> bool {
        self.violation == 0.0
    }

    /// Strictly better under the feasibility rules.
    pub fn better_than(&self, other: &Fitness) -> bool {
        compare(self, other) == Ordering::Less
    }
}

impl From<&Evaluation> for Fitness {
    fn from(e: &Evaluation) -> Self {
        Fitness {
            f: e.f,
            violation: e.violation,
        }
    }
}

/// Feasibility-rule order: feasible before infeasible, then lower
/// violation among infeasible points, lower objective among feasible ones.
pub fn compare(a: &Fitness, b: &Fitness) -> Ordering {
    match (a.is_feasible(), b.is_feasible()) {
        (true, true) => a.f.total_cmp(&b.f),
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => a.violation.total_cmp(&b.violation),
    }
}

/// The comparison used for constrained instances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintPolicy {
    pub eq_tolerance: f64,
}

impl Default for ConstraintPolicy {
    fn default() -> Self {
        ConstraintPolicy {
            eq_tolerance: EQ_TOLERANCE,
        }
    }
}

impl ConstraintPolicy {
    pub fn fitness(&self, e: &Evaluation) -> Fitness {
        let tol = self.eq_tolerance;
        let violation = e.g.iter().map(|g| g.max(0.0)).sum::<f64>()
            + e.h.iter().map(|h| (h.abs() - tol).max(0.0)).sum::<f64>();
        Fitness { f: e.f, violation }
    }

    pub fn compare(&self, a: &Evaluation, b: &Evaluation) -> Ordering {
        compare(&self.fitness(a), &self.fitness(b))
    }
}

#[derive(Debug)]
pub(crate) enum Abort {
    Budget,
    Failed(String),
}

pub(crate) fn fail<T>(msg: impl Into<String>) -> Result<T, Abort> {
    Err(Abort::Failed(msg.into()))
}

pub(crate) struct Session<'a> {
    inst: &'a ProblemInstance,
    budget: u64,
    used: u64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    best: Option<(Vec<f64>, Fitness)>,
    initial: Option<Fitness>,
    trace: Vec<TracePoint>,
}

impl<'a> Session<'a> {
    pub fn new(inst: &'a ProblemInstance, budget: u64) -> Self {
        Session {
            inst,
            budget,
            used: 0,
            lo: inst.bounds.iter().map(|b| b.0).collect(),
            hi: inst.bounds.iter().map(|b| b.1).collect(),
            best: None,
            initial: None,
            trace: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lo
    }

    pub fn upper(&self) -> &[f64] {
        &self.hi
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.used
    }

    /// Fails unless `n` evaluations are still available.
    pub fn require(&self, n: usize) -> Result<(), Abort> {
        if self.remaining() < n as u64 {
            return fail(format!(
                "budget of {} evaluations cannot cover an initial sample of {n}",
                self.remaining()
            ));
        }
        Ok(())
    }

    pub fn random_unit(&self, rng: &mut seed::Rng) -> Vec<f64> {
        (0..self.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect()
    }

    pub fn to_real(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&u, (&lo, &hi))| (0.5 * (lo + hi) + 0.5 * (hi - lo) * u).clamp(lo, hi))
            .collect()
    }

    pub fn eval_unit(&mut self, u: &[f64]) -> Result<Fitness, Abort> {
        let x = self.to_real(u);
        self.eval(&x)
    }

    pub fn eval(&mut self, x: &[f64]) -> Result<Fitness, Abort> {
        if self.used >= self.budget {
            return Err(Abort::Budget);
        }
        let x: Vec<f64> = x
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&lo, &hi))| if v.is_nan() { 0.5 * (lo + hi) } else { v.clamp(lo, hi) })
            .collect();
        let e = self.inst.evaluate_unchecked(&x);
        self.used += 1;
        let fit = Fitness::from(&e);
        let improved = match &self.best {
            None => true,
            Some((_, b)) => fit.better_than(b),
        };
        if improved {
            self.trace.push(TracePoint {
                fe: self.used,
                f: fit.f,
                violation: fit.violation,
            });
            self.best = Some((x, fit));
        }
        Ok(fit)
    }

    pub fn best(&self) -> Option<Fitness> {
        self.best.as_ref().map(|b| b.1)
    }

    /// Freezes `f0` as the best point seen so far.
    pub fn mark_initial(&mut self) {
        if self.initial.is_none() {
            self.initial = self.best();
        }
    }

    pub fn finish(self, error: Option<String>) -> RunResult {
        let initial = self
            .initial
            .or_else(|| self.trace.first().map(|t| Fitness { f: t.f, violation: t.violation }));
        let (best_x, best) = match self.best {
            Some((x, f)) => (x, Some(f)),
            None => (Vec::new(), None),
        };
        RunResult {
            status: if error.is_some() {
                RunStatus::Failed
            } else {
                RunStatus::Ok
            },
            best_f: best.map(|b| b.f),
            best_violation: best.map_or(0.0, |b| b.violation),
            best_x,
            f0: initial.map(|i| i.f),
            f0_violation: initial.map_or(0.0, |i| i.violation),
            fe_used: self.used,
            trace: self.trace,
            error,
        }
    }
}

/// How a coordinate outside `[-1, 1]` is brought back.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Repair {
    Clip,
    Periodic,
    Reflect,
    Random,
}

impl Repair {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "clip" => Repair::Clip,
            "periodic" => Repair::Periodic,
            "reflect" => Repair::Reflect,
            "rand" => Repair::Random,
            _ => return None,
        })
    }

    pub fn apply(self, u: &mut [f64], rng: &mut seed::Rng) {
        for v in u.iter_mut() {
            if (-1.0..=1.0).contains(v) {
                continue;
            }
            *v = match self {
                Repair::Clip => v.clamp(-1.0, 1.0),
                Repair::Periodic => (*v + 1.0).rem_euclid(2.0) - 1.0,
                Repair::Reflect => {
                    let t = (*v + 1.0).rem_euclid(4.0);
                    (if t > 2.0 { 4.0 - t } else { t }) - 1.0
                }
                Repair::Random => rng.random_range(-1.0..=1.0),
            };
            if !v.is_finite() {
                *v = 0.0;
            }
        }
    }
}

pub(crate) fn clip_unit(u: &mut [f64]) {
    for v in u.iter_mut() {
        *v = if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
    }
}

/// Index of the best fitness under the feasibility rules.
pub(crate) fn argbest(fit: &[Fitness]) -> usize {
    let mut best = 0;
    for i in 1..fit.len() {
        if fit[i].better_than(&fit[best]) {
            best = i;
        }
    }
    best
}

/// Indices sorted best first (stable).
pub(crate) fn ranking(fit: &[Fitness]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fit.len()).collect();
    idx.sort_by(|&a, &b| compare(&fit[a], &fit[b]));
    idx
}

/// Positive gap by which `cand` is worse than `cur` for Metropolis tests,
/// or `None` when `cand` is at least as good.
pub(crate) fn worsening(cur: &Fitness, cand: &Fitness) -> Option<f64> {
    if compare(cand, cur) != Ordering::Greater {
        return None;
    }
    Some(match (cur.is_feasible(), cand.is_feasible()) {
        (true, true) => cand.f - cur.f,
        (false, false) => cand.violation - cur.violation,
        _ => f64::INFINITY,
    })
}
