//! Annealing-family local search: evosax-style simulated annealing,
//! generalized (dual) annealing, and noisy simulated annealing.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use super::session::{clip_unit, fail, ranking, worsening, Abort, Fitness, Session};
use super::Configuration;
use crate::error::Result;
use crate::seed::Rng as SeedRng;

fn gaussian_step(rng: &mut SeedRng, centre: &[f64], sigma: f64) -> Vec<f64> {
    let mut x: Vec<f64> = centre
        .iter()
        .map(|&c| c + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    clip_unit(&mut x);
    x
}

/// Metropolis acceptance at temperature `t`.
fn metropolis(rng: &mut SeedRng, cur: &Fitness, cand: &Fitness, t: f64) -> bool {
    match worsening(cur, cand) {
        None => true,
        Some(d) => t > 0.0 && rng.random::<f64>() < (-d / t).exp(),
    }
}

/// Population-sampling simulated annealing.
///
/// Each step samples `NP` Gaussian neighbours of the current point, and the
/// best neighbour replaces it under a Metropolis test at temperature
/// `boltzmann_const·T`. Temperature and sigma decay geometrically to their floors.
#[derive(Clone, Debug)]
pub(crate) struct SimAnneal {
    pub np: usize,
    pub sigma_init: f64,
    pub sigma_decay: f64,
    pub sigma_limit: f64,
    pub temp_init: f64,
    pub temp_limit: f64,
    pub temp_decay: f64,
    pub boltzmann: f64,
}

impl SimAnneal {
    pub fn parse(c: &Configuration) -> Result<Self> {
        Ok(SimAnneal {
            np: c.int("NP")?,
            sigma_init: c.real("sigma_init")?,
            sigma_decay: c.real("sigma_decay")?,
            sigma_limit: c.real("sigma_limit")?,
            temp_init: c.real("temp_init")?,
            temp_limit: c.real("temp_limit")?,
            temp_decay: c.real("temp_decay")?,
            boltzmann: c.real("boltzmann_const")?,
        })
    }

    pub fn optimize(&self, s: &mut Session, rng: &mut SeedRng) -> Result<(), Abort> {
        if self.np == 0 {
            return fail("NP must be positive");
        }
        s.require(self.np)?;
        let mut xs: Vec<Vec<f64>> = (0..self.np).map(|_| s.random_unit(rng)).collect();
        let mut fs = Vec::with_capacity(self.np);
        for x in &xs {
            fs.push(s.eval_unit(x)?);
        }
        s.mark_initial();
        let b = ranking(&fs)[0];
        let (mut cur, mut cur_f) = (xs[b].clone(), fs[b]);
        let (mut sigma, mut temp) = (self.sigma_init, self.temp_init);
        loop {
            xs.clear();
            fs.clear();
            for _ in 0..self.np {
                let x = gaussian_step(rng, &cur, sigma);
                fs.push(s.eval_unit(&x)?);
                xs.push(x);
            }
            let b = ranking(&fs)[0];
            if metropolis(rng, &cur_f, &fs[b], self.boltzmann * temp) {
                cur = xs[b].clone();
                cur_f = fs[b];
            }
            sigma = (sigma * self.sigma_decay).max(self.sigma_limit);
            temp = (temp * self.temp_decay).max(self.temp_limit);
        }
    }
}

const TAIL_LIMIT: f64 = 1e8;
const MIN_VISIT_BOUND: f64 = 1e-10;
const ACCEPT: f64 = -5.0;
const NOT_IMPROVED_MAX: usize = 1000;

/// Tsallis–Stariolo visiting distribution with parameter `qv ∈ (1, 3)`.
struct Visiting {
    qv: f64,
    factor4_p: f64,
    factor6: f64,
}

impl Visiting {
    fn new(qv: f64) -> Self {
        let factor2 = ((4.0 - qv) * (qv - 1.0).ln()).exp();
        let factor3 = ((2.0 - qv) * 2f64.ln() / (qv - 1.0)).exp();
        let factor4_p = PI.sqrt() * factor2 / (factor3 * (3.0 - qv));
        let factor5 = 1.0 / (qv - 1.0) - 0.5;
        let d1 = 2.0 - factor5;
        let factor6 = PI * (1.0 - factor5) / (PI * (1.0 - factor5)).sin() / ln_gamma(d1).exp();
        Visiting {
            qv,
            factor4_p,
            factor6,
        }
    }

    fn draw(&self, rng: &mut SeedRng, temperature: f64) -> f64 {
        let qv = self.qv;
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let factor1 = (temperature.ln() / (qv - 1.0)).exp();
        let factor4 = self.factor4_p * factor1;
        let x = x * (-(qv - 1.0) * (self.factor6 / factor4).ln() / (3.0 - qv)).exp();
        let den = ((qv - 1.0) * y.abs().ln() / (3.0 - qv)).exp();
        let v = x / den;
        if v > TAIL_LIMIT {
            TAIL_LIMIT * rng.random::<f64>()
        } else if v < -TAIL_LIMIT {
            -TAIL_LIMIT * rng.random::<f64>()
        } else {
            v
        }
    }
}

fn wrap(v: f64, lo: f64, hi: f64) -> f64 {
    let range = hi - lo;
    let b = (v - lo) % range + range;
    let mut w = b % range + lo;
    if (w - lo).abs() < MIN_VISIT_BOUND {
        w += 1e-10;
    }
    if w.is_finite() {
        w.clamp(lo, hi)
    } else {
        lo + 0.5 * range
    }
}

/// Generalized simulated annealing with periodic local refinement, in the
/// layout of SciPy's `dual_annealing` (acceptance parameter −5, chains of
/// `2D` visits, restart when the temperature falls below
/// `initial_temp·restart_temp_ratio`). The local phase is a bounded compass
/// search from the chain's best point.
#[derive(Clone, Debug)]
pub(crate) struct DualAnnealing {
    pub initial_temp: f64,
    pub visit: f64,
    pub restart_ratio: f64,
}

struct Chain {
    cur: Vec<f64>,
    cur_f: Fitness,
    best: Vec<f64>,
    best_f: Fitness,
    not_improved: usize,
}

impl DualAnnealing {
    pub fn parse(c: &Configuration) -> Result<Self> {
        Ok(DualAnnealing {
            initial_temp: c.real("initial_temp")?,
            visit: c.real("visit")?,
            restart_ratio: c.real("restart_temp_ratio")?,
        })
    }

    pub fn optimize(&self, s: &mut Session, rng: &mut SeedRng) -> Result<(), Abort> {
        let qv = self.visit;
        if !(qv > 1.0 && qv < 3.0) {
            return fail(format!("visiting parameter {qv} must lie in (1, 3)"));
        }
        if self.initial_temp <= 0.0 {
            return fail("initial_temp must be positive");
        }
        s.require(1)?;
        let dim = s.dim();
        let (lo, hi) = (s.lower().to_vec(), s.upper().to_vec());
        let visiting = Visiting::new(qv);
        let t1 = ((qv - 1.0) * 2f64.ln()).exp() - 1.0;
        let restart_temp = self.initial_temp * self.restart_ratio;
        let random_point = |rng: &mut SeedRng| -> Vec<f64> {
            (0..dim).map(|j| rng.random_range(lo[j]..=hi[j])).collect()
        };
        let x0 = random_point(rng);
        let f0 = s.eval(&x0)?;
        s.mark_initial();
        let mut ch = Chain {
            cur: x0.clone(),
            cur_f: f0,
            best: x0,
            best_f: f0,
            not_improved: 0,
        };
        loop {
            for step in 0.. {
                let t2 = ((qv - 1.0) * (step as f64 + 2.0).ln()).exp() - 1.0;
                let temperature = self.initial_temp * t1 / t2;
                if temperature < restart_temp {
                    let x = random_point(rng);
                    let f = s.eval(&x)?;
                    ch.cur = x;
                    ch.cur_f = f;
                    if f.better_than(&ch.best_f) {
                        ch.best = ch.cur.clone();
                        ch.best_f = f;
                    }
                    break;
                }
                let t_step = temperature / (step as f64 + 1.0);
                ch.not_improved += 1;
                let mut improved = step == 0;
                for j in 0..2 * dim {
                    let mut x = ch.cur.clone();
                    if j < dim {
                        for k in 0..dim {
                            x[k] = wrap(x[k] + visiting.draw(rng, temperature), lo[k], hi[k]);
                        }
                    } else {
                        let k = j - dim;
                        x[k] = wrap(x[k] + visiting.draw(rng, temperature), lo[k], hi[k]);
                    }
                    let f = s.eval(&x)?;
                    if f.better_than(&ch.cur_f) {
                        ch.cur = x;
                        ch.cur_f = f;
                        if f.better_than(&ch.best_f) {
                            ch.best = ch.cur.clone();
                            ch.best_f = f;
                            improved = true;
                            ch.not_improved = 0;
                        }
                    } else {
                        let d = worsening(&ch.cur_f, &f).unwrap_or(0.0);
                        let base = 1.0 - (1.0 - ACCEPT) * d / t_step;
                        let p = if base <= 0.0 { 0.0 } else { (base.ln() / (1.0 - ACCEPT)).exp() };
                        if rng.random::<f64>() <= p {
                            ch.cur = x;
                            ch.cur_f = f;
                        }
                    }
                }
                if improved {
                    let (x, f) = compass(s, &ch.best, ch.best_f)?;
                    if f.better_than(&ch.best_f) {
                        ch.not_improved = 0;
                        ch.best = x.clone();
                        ch.best_f = f;
                        ch.cur = x;
                        ch.cur_f = f;
                    }
                }
                if ch.not_improved >= NOT_IMPROVED_MAX {
                    let (x, f) = compass(s, &ch.cur, ch.cur_f)?;
                    ch.not_improved = 0;
                    ch.cur = x;
                    ch.cur_f = f;
                    if f.better_than(&ch.best_f) {
                        ch.best = ch.cur.clone();
                        ch.best_f = f;
                    }
                }
            }
        }
    }
}

/// Coordinate compass search from `x`, bounded to `max(6D, 100)` evaluations.
fn compass(s: &mut Session, x: &[f64], fx: Fitness) -> Result<(Vec<f64>, Fitness), Abort> {
    let dim = s.dim();
    let (lo, hi) = (s.lower().to_vec(), s.upper().to_vec());
    let mut steps: Vec<f64> = (0..dim).map(|j| 0.05 * (hi[j] - lo[j])).collect();
    let (mut x, mut fx) = (x.to_vec(), fx);
    let mut left = (6 * dim).max(100);
    while left > 0 && steps.iter().zip(lo.iter().zip(&hi)).any(|(s, (l, h))| *s > 1e-9 * (h - l)) {
        let mut moved = false;
        for j in 0..dim {
            for dir in [1.0, -1.0] {
                if left == 0 {
                    break;
                }
                let mut y = x.clone();
                y[j] = (y[j] + dir * steps[j]).clamp(lo[j], hi[j]);
                if y[j] == x[j] {
                    continue;
                }
                left -= 1;
                let fy = s.eval(&y)?;
                if fy.better_than(&fx) {
                    x = y;
                    fx = fy;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            for st in steps.iter_mut() {
                *st *= 0.5;
            }
        }
    }
    Ok((x, fx))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Schedule {
    Linear,
    Quadratic,
}

/// Simulated annealing under noisy observations.
///
/// The initial temperature is the standard deviation of objective values
/// over an initial sample of `n_samples` uniform points, and decays as
/// `T_k = T_0·rt^k`. At iteration `k` one Gaussian neighbour (scale
/// `sigma`) is observed `m_k` times and judged on the mean, where
/// `m_k = min(n_samples, k + 1)` for the linear schedule and
/// `min(n_samples, (k + 1)²)` for the quadratic one.
#[derive(Clone, Debug)]
pub(crate) struct Nsa {
    pub sigma: f64,
    pub schedule: Schedule,
    pub n_samples: usize,
    pub rt: f64,
}

impl Nsa {
    pub fn parse(c: &Configuration) -> Result<Self> {
        let sched = match c.cat("schedule")? {
            "linear" => Schedule::Linear,
            "quadratic" => Schedule::Quadratic,
            other => return Err(crate::error::invalid(format!("unknown schedule {other:?}"))),
        };
        Ok(Nsa {
            sigma: c.real("sigma")?,
            schedule: sched,
            n_samples: c.int("n_samples")?,
            rt: c.real("rt")?,
        })
    }

    fn intensity(&self, k: usize) -> usize {
        let k = k.saturating_add(1);
        let m = match self.schedule {
            Schedule::Linear => k,
            Schedule::Quadratic => k.saturating_mul(k),
        };
        m.min(self.n_samples).max(1)
    }

    pub fn optimize(&self, s: &mut Session, rng: &mut SeedRng) -> Result<(), Abort> {
        if self.n_samples == 0 {
            return fail("n_samples must be positive");
        }
        s.require(self.n_samples)?;
        let mut xs = Vec::with_capacity(self.n_samples);
        let mut fs = Vec::with_capacity(self.n_samples);
        for _ in 0..self.n_samples {
            let x = s.random_unit(rng);
            fs.push(s.eval_unit(&x)?);
            xs.push(x);
        }
        s.mark_initial();
        let b = ranking(&fs)[0];
        let (mut cur, mut cur_f) = (xs[b].clone(), fs[b]);
        let vals: Vec<f64> = fs.iter().map(|f| f.f + f.violation).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        let mut temp = if var.is_finite() && var > 0.0 { var.sqrt() } else { 1.0 };
        for k in 0.. {
            let x = gaussian_step(rng, &cur, self.sigma);
            let m = self.intensity(k);
            let mut acc = Fitness { f: 0.0, violation: 0.0 };
            for _ in 0..m {
                let f = s.eval_unit(&x)?;
                acc.f += f.f;
                acc.violation += f.violation;
            }
            let obs = Fitness {
                f: acc.f / m as f64,
                violation: acc.violation / m as f64,
            };
            if metropolis(rng, &cur_f, &obs, temp) {
                cur = x;
                cur_f = obs;
            }
            temp *= self.rt;
        }
        Ok(())
    }
}
