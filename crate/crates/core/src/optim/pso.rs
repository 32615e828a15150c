//! Particle swarm in the form of the DEAP example: no inertia weight,
//! per-coordinate accelerations drawn from `U(0, phi)`, clamped speed.

use rand::Rng;

use super::session::{argbest, clip_unit, fail, Abort, Fitness, Session};
use super::Configuration;
use crate::error::Result;
use crate::seed::Rng as SeedRng;

/// Speed limit per coordinate in unit-cube units (a quarter of the range).
const MAX_SPEED: f64 = 0.5;

#[derive(Clone, Debug)]
pub(crate) struct Pso {
    pub np: usize,
    pub phi1: f64,
    pub phi2: f64,
}

impl Pso {
    pub fn parse(c: &Configuration) -> Result<Self> {
        Ok(Pso {
            np: c.int("NP")?,
            phi1: c.real("phi1")?,
            phi2: c.real("phi2")?,
        })
    }

    pub fn optimize(&self, s: &mut Session, rng: &mut SeedRng) -> Result<(), Abort> {
        let (np, d) = (self.np, s.dim());
        if np == 0 {
            return fail("NP must be positive");
        }
        s.require(np)?;
        let mut pos: Vec<Vec<f64>> = (0..np).map(|_| s.random_unit(rng)).collect();
        let mut vel: Vec<Vec<f64>> = (0..np)
            .map(|_| (0..d).map(|_| rng.random_range(-MAX_SPEED..=MAX_SPEED)).collect())
            .collect();
        let mut fit: Vec<Fitness> = Vec::with_capacity(np);
        for x in &pos {
            fit.push(s.eval_unit(x)?);
        }
        s.mark_initial();
        let mut pbest = pos.clone();
        let mut pfit = fit.clone();
        let g = argbest(&pfit);
        let mut gbest = pbest[g].clone();
        let mut gfit = pfit[g];
        loop {
            for i in 0..np {
                for j in 0..d {
                    let u1 = rng.random_range(0.0..=self.phi1.max(0.0));
                    let u2 = rng.random_range(0.0..=self.phi2.max(0.0));
                    let v = vel[i][j] + u1 * (pbest[i][j] - pos[i][j]) + u2 * (gbest[j] - pos[i][j]);
                    vel[i][j] = v.clamp(-MAX_SPEED, MAX_SPEED);
                    pos[i][j] += vel[i][j];
                }
                clip_unit(&mut pos[i]);
            }
            for i in 0..np {
                let fi = s.eval_unit(&pos[i])?;
                if fi.better_than(&pfit[i]) {
                    pbest[i] = pos[i].clone();
                    pfit[i] = fi;
                    if fi.better_than(&gfit) {
                        gbest = pos[i].clone();
                        gfit = fi;
                    }
                }
            }
        }
    }
}
