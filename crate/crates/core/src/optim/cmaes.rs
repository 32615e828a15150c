//! CMA-ES: a separable (diagonal) variant and full covariance with BIPOP restarts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::session::{clip_unit, fail, ranking, Abort, Fitness, Session};
use super::Configuration;
use crate::error::Result;
use crate::seed::Rng as SeedRng;

/// Evolution state of one CMA-ES run in the unit cube.
struct Cma {
    n: usize,
    lambda: usize,
    weights: Vec<f64>,
    mueff: f64,
    cs: f64,
    ds: f64,
    cc: f64,
    c1: f64,
    cmu: f64,
    chi_n: f64,
    separable: bool,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    pc: DVector<f64>,
    ps: DVector<f64>,
    gen: usize,
    eigen_gen: usize,
}

impl Cma {
    fn new(mean: Vec<f64>, sigma: f64, lambda: usize, mu: usize, separable: bool, cc: Option<f64>) -> Self {
        let n = mean.len();
        let nf = n as f64;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let ds = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let mut c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let mut cmu = 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff);
        if separable {
            c1 *= (nf + 2.0) / 3.0;
            cmu *= (nf + 2.0) / 3.0;
        }
        c1 = c1.min(1.0);
        cmu = cmu.min(1.0 - c1).max(0.0);
        let cc = cc.unwrap_or((4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf)).min(1.0);
        Cma {
            n,
            lambda,
            weights,
            mueff,
            cs,
            ds,
            cc,
            c1,
            cmu,
            chi_n: nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf)),
            separable,
            mean: DVector::from_vec(mean),
            sigma,
            cov: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            pc: DVector::zeros(n),
            ps: DVector::zeros(n),
            gen: 0,
            eigen_gen: 0,
        }
    }

    fn sample(&self, rng: &mut SeedRng) -> Vec<Vec<f64>> {
        (0..self.lambda)
            .map(|_| {
                let z = DVector::from_fn(self.n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let y = &self.basis * self.scales.component_mul(&z);
                let mut x: Vec<f64> = (&self.mean + y * self.sigma).iter().copied().collect();
                clip_unit(&mut x);
                x
            })
            .collect()
    }

    /// `C^{-1/2} v`
    fn whiten(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.separable {
            v.component_div(&self.scales)
        } else {
            let t = self.basis.transpose() * v;
            &self.basis * t.component_div(&self.scales)
        }
    }

    fn tell(&mut self, xs: &[Vec<f64>], fit: &[Fitness]) {
        let n = self.n;
        let order = ranking(fit);
        let old = self.mean.clone();
        let ys: Vec<DVector<f64>> = order[..self.weights.len()]
            .iter()
            .map(|&i| (DVector::from_column_slice(&xs[i]) - &old) / self.sigma)
            .collect();
        let mut yw = DVector::zeros(n);
        for (w, y) in self.weights.iter().zip(&ys) {
            yw += y * *w;
        }
        self.mean = &old + &yw * self.sigma;
        self.gen += 1;

        self.ps = &self.ps * (1.0 - self.cs)
            + self.whiten(&yw) * (self.cs * (2.0 - self.cs) * self.mueff).sqrt();
        let norm = self.ps.norm();
        let decay = 1.0 - (1.0 - self.cs).powi(2 * self.gen as i32);
        let hsig = norm / decay.max(1e-300).sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * self.chi_n;
        let h = if hsig { 1.0 } else { 0.0 };
        self.pc = &self.pc * (1.0 - self.cc) + &yw * (h * (self.cc * (2.0 - self.cc) * self.mueff).sqrt());

        let keep = 1.0 - self.c1 - self.cmu + (1.0 - h) * self.c1 * self.cc * (2.0 - self.cc);
        if self.separable {
            for j in 0..n {
                let rank_mu: f64 = self.weights.iter().zip(&ys).map(|(w, y)| w * y[j] * y[j]).sum();
                let c = keep * self.cov[(j, j)] + self.c1 * self.pc[j] * self.pc[j] + self.cmu * rank_mu;
                self.cov[(j, j)] = c;
                self.scales[j] = c.max(1e-300).sqrt();
            }
        } else {
            let mut next = &self.cov * keep + (&self.pc * self.pc.transpose()) * self.c1;
            for (w, y) in self.weights.iter().zip(&ys) {
                next += (y * y.transpose()) * (self.cmu * w);
            }
            self.cov = (&next + next.transpose()) * 0.5;
            let lag = self.lambda as f64 / ((self.c1 + self.cmu).max(1e-300) * n as f64 * 10.0);
            if (self.gen - self.eigen_gen) as f64 >= lag {
                self.decompose();
            }
        }
        self.sigma *= ((self.cs / self.ds) * (norm / self.chi_n - 1.0)).min(1.0).exp();
    }

    fn decompose(&mut self) {
        self.eigen_gen = self.gen;
        let eig = SymmetricEigen::new(self.cov.clone());
        self.basis = eig.eigenvectors;
        self.scales = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());
    }

    fn diverged(&self) -> bool {
        !self.sigma.is_finite()
            || self.sigma <= 0.0
            || self.mean.iter().any(|v| !v.is_finite())
            || self.scales.iter().any(|v| !v.is_finite())
    }

    /// Stagnation tests used to trigger restarts.
    fn converged(&self) -> bool {
        let smax = self.scales.max();
        let smin = self.scales.min();
        let tolx = (0..self.n).all(|j| {
            self.sigma * self.pc[j].abs() < 1e-12 && self.sigma * self.cov[(j, j)].sqrt() < 1e-12
        });
        tolx || smax / smin > 1e7 || self.sigma * smax > 1e4
    }
}

fn spread(fit: &[Fitness]) -> f64 {
    if fit.iter().all(|f| f.is_feasible()) {
        let lo = fit.iter().map(|f| f.f).fold(f64::INFINITY, f64::min);
        let hi = fit.iter().map(|f| f.f).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    } else if fit.iter().all(|f| !f.is_feasible()) {
        let lo = fit.iter().map(|f| f.violation).fold(f64::INFINITY, f64::min);
        let hi = fit.iter().map(|f| f.violation).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    } else {
        f64::INFINITY
    }
}

/// Separable CMA-ES with `μ = λ/2`; `c_c` is the grid value divided by `n + 4`.
#[derive(Clone, Debug)]
pub(crate) struct SepCmaEs {
    pub lambda: usize,
    pub cc: f64,
    pub sigma: f64,
}

impl SepCmaEs {
    pub fn parse(c: &Configuration) -> Result<Self> {
        Ok(SepCmaEs {
            lambda: c.int("n_individuals")?,
            cc: c.real("c_c")?,
            sigma: c.real("sigma")?,
        })
    }

    pub fn optimize(&self, s: &mut Session, rng: &mut SeedRng) -> Result<(), Abort> {
        if self.lambda < 2 || self.sigma <= 0.0 {
            return fail("sep-CMA-ES needs at least 2 individuals and a positive sigma");
        }
        s.require(self.lambda)?;
        let n = s.dim();
        let mean = s.random_unit(rng);
        let mut es = Cma::new(mean, self.sigma, self.lambda, self.lambda / 2, true, Some(self.cc / (n as f64 + 4.0)));
        loop {
            let xs = es.sample(rng);
            let mut fit = Vec::with_capacity(xs.len());
            for x in &xs {
                fit.push(s.eval_unit(x)?);
            }
            s.mark_initial();
            es.tell(&xs, &fit);
            if es.diverged() || es.sigma * es.scales.max() < 1e-16 {
                return Ok(());
            }
        }
    }
}

/// Full CMA-ES with bi-population restarts.
///
/// The first run uses `λ = NP`. Later runs alternate between the large
/// regime (`λ = NP·multiplier^k`, initial sigma) and the small regime
/// (`λ = ⌊NP·(λ_large/(2·NP))^{u²}⌋`, sigma scaled by `10^{-2u}`), picking
/// whichever has spent fewer evaluations so far. Restarts are only
/// considered after `min_num_gens` generations of the current run.
#[derive(Clone, Debug)]
pub(crate) struct Bipop {
    pub np: usize,
    pub elite_ratio: f64,
    pub sigma_init: f64,
    pub mean_decay: f64,
    pub min_num_gens: usize,
    pub multiplier: usize,
}

impl Bipop {
    pub fn parse(c: &Configuration) -> Result<Self> {
        Ok(Bipop {
            np: c.int("NP")?,
            elite_ratio: c.real("elite_ratio")?,
            sigma_init: c.real("sigma_init")?,
            mean_decay: c.real("mean_decay")?,
            min_num_gens: c.int("min_num_gens")?,
            multiplier: c.int("popsize_multiplier")?,
        })
    }

    fn mu(&self, lambda: usize) -> usize {
        ((lambda as f64 * self.elite_ratio) as usize).clamp(1, lambda)
    }

    pub fn optimize(&self, s: &mut Session, rng: &mut SeedRng) -> Result<(), Abort> {
        if self.np < 2 || self.sigma_init <= 0.0 || self.multiplier == 0 {
            return fail("BIPOP-CMA-ES needs NP ≥ 2, positive sigma and multiplier");
        }
        s.require(self.np)?;
        let n = s.dim();
        let history = 10 + (30.0 * n as f64 / self.np as f64).ceil() as usize;
        let (mut spent_large, mut spent_small) = (0u64, 0u64);
        let mut large_runs = 0u32;
        let (mut lambda, mut sigma, mut large) = (self.np, self.sigma_init, true);
        loop {
            let mean = s.random_unit(rng);
            let mut es = Cma::new(mean, sigma, lambda, self.mu(lambda), false, None);
            let mut bests: Vec<Fitness> = Vec::new();
            loop {
                let xs = es.sample(rng);
                let mut fit = Vec::with_capacity(xs.len());
                for x in &xs {
                    fit.push(s.eval_unit(x)?);
                    if large {
                        spent_large += 1;
                    } else {
                        spent_small += 1;
                    }
                }
                s.mark_initial();
                es.tell(&xs, &fit);
                if self.mean_decay != 0.0 {
                    es.mean *= 1.0 - self.mean_decay;
                }
                bests.push(fit[ranking(&fit)[0]]);
                if es.diverged() {
                    break;
                }
                if es.gen >= self.min_num_gens {
                    let recent = &bests[bests.len().saturating_sub(history)..];
                    let flat = bests.len() >= history && spread(recent) < 1e-12 && spread(&fit) < 1e-12;
                    if flat || es.converged() {
                        break;
                    }
                }
            }
            if spent_small < spent_large {
                let u: f64 = rng.random();
                let lam_large = self.np as f64 * (self.multiplier as f64).powi(large_runs as i32);
                let ratio = (0.5 * lam_large / self.np as f64).max(1.0);
                lambda = ((self.np as f64 * ratio.powf(u * u)) as usize).max(2);
                sigma = self.sigma_init * 10f64.powf(-2.0 * u);
                large = false;
            } else {
                large_runs += 1;
                lambda = self.np * self.multiplier.pow(large_runs.min(20));
                lambda = lambda.min(100_000);
                sigma = self.sigma_init;
                large = true;
            }
        }
    }
}
