//! Self-adaptive mutation-rate GA (evosax `SAMR_GA` style).
//!
//! An elite archive of `max(1, ⌊elite_ratio·NP⌋)` members carries a mutation
//! scale each. Children copy a random elite (the first child always copies
//! the best), rescale its sigma by `sigma_meta^u` with `u ~ U(-1, 1)` and add
//! Gaussian noise. The archive keeps the best of children and elites, and the
//! best member's sigma never drops below `sigma_best_limit`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::session::{clip_unit, fail, ranking, Abort, Fitness, Session};
use super::Configuration;
use crate::error::Result;
use crate::seed::Rng as SeedRng;

#[derive(Clone, Debug)]
pub(crate) struct SamrGa {
    pub np: usize,
    pub elite_ratio: f64,
    pub sigma_init: f64,
    pub sigma_meta: f64,
    pub sigma_best_limit: f64,
}

impl SamrGa {
    pub fn parse(c: &Configuration) -> Result<Self> {
        Ok(SamrGa {
            np: c.int("NP")?,
            elite_ratio: c.real("elite_ratio")?,
            sigma_init: c.real("sigma_init")?,
            sigma_meta: c.real("sigma_meta")?,
            sigma_best_limit: c.real("sigma_best_limit")?,
        })
    }

    pub fn optimize(&self, s: &mut Session, rng: &mut SeedRng) -> Result<(), Abort> {
        let np = self.np;
        if np == 0 || self.sigma_meta <= 0.0 {
            return fail("NP and sigma_meta must be positive");
        }
        let n_elite = ((np as f64 * self.elite_ratio) as usize).clamp(1, np);
        s.require(np)?;
        let mut xs: Vec<Vec<f64>> = (0..np).map(|_| s.random_unit(rng)).collect();
        let mut fs: Vec<Fitness> = Vec::with_capacity(np);
        for x in &xs {
            fs.push(s.eval_unit(x)?);
        }
        s.mark_initial();
        let mut sigmas = vec![self.sigma_init; np];
        let (mut archive, mut afit, mut asig) = select(&xs, &fs, &sigmas, n_elite);
        asig[0] = asig[0].max(self.sigma_best_limit);
        loop {
            xs.clear();
            sigmas.clear();
            for c in 0..np {
                let k = if c == 0 { 0 } else { rng.random_range(0..n_elite) };
                let u: f64 = rng.random_range(-1.0..=1.0);
                let sigma = asig[k] * self.sigma_meta.powf(u);
                let mut x: Vec<f64> = archive[k]
                    .iter()
                    .map(|&v| v + sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                clip_unit(&mut x);
                xs.push(x);
                sigmas.push(sigma);
            }
            fs.clear();
            for x in &xs {
                fs.push(s.eval_unit(x)?);
            }
            xs.extend(archive);
            fs.extend(afit);
            sigmas.extend(asig);
            (archive, afit, asig) = select(&xs, &fs, &sigmas, n_elite);
            asig[0] = asig[0].max(self.sigma_best_limit);
        }
    }
}

type Archive = (Vec<Vec<f64>>, Vec<Fitness>, Vec<f64>);

fn select(xs: &[Vec<f64>], fs: &[Fitness], sig: &[f64], n: usize) -> Archive {
    let order = ranking(fs);
    let keep = &order[..n];
    (
        keep.iter().map(|&i| xs[i].clone()).collect(),
        keep.iter().map(|&i| fs[i]).collect(),
        keep.iter().map(|&i| sig[i]).collect(),
    )
}
