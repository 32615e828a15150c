//! The basic function catalog that synthesized objectives are built from.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error};
use crate::expr::{self, add, call, div, elem, mul, num, pow, signed, sq, sum, sum_all, Bound, Expr, Func, Var};

const SCHWEFEL_OFFSET: f64 = 418.982_887_272_433_9;
const SCHWEFEL_ARGMIN: f64 = 420.968_746_227_503_6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasicFunction {
    Sphere,
    Rastrigin,
    Ackley,
    Rosenbrock,
    Griewank,
    Schwefel226,
    BentCigar,
    Levy,
    Katsuura,
    Happycat,
    Discus,
    Weierstrass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modality {
    Unimodal,
    Multimodal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tags {
    pub modality: Modality,
    pub separable: bool,
    pub symmetric: bool,
}

impl BasicFunction {
    pub const ALL: [BasicFunction; 12] = [
        BasicFunction::Sphere,
        BasicFunction::Rastrigin,
        BasicFunction::Ackley,
        BasicFunction::Rosenbrock,
        BasicFunction::Griewank,
        BasicFunction::Schwefel226,
        BasicFunction::BentCigar,
        BasicFunction::Levy,
        BasicFunction::Katsuura,
        BasicFunction::Happycat,
        BasicFunction::Discus,
        BasicFunction::Weierstrass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BasicFunction::Sphere => "sphere",
            BasicFunction::Rastrigin => "rastrigin",
            BasicFunction::Ackley => "ackley",
            BasicFunction::Rosenbrock => "rosenbrock",
            BasicFunction::Griewank => "griewank",
            BasicFunction::Schwefel226 => "schwefel226",
            BasicFunction::BentCigar => "bent_cigar",
            BasicFunction::Levy => "levy",
            BasicFunction::Katsuura => "katsuura",
            BasicFunction::Happycat => "happycat",
            BasicFunction::Discus => "discus",
            BasicFunction::Weierstrass => "weierstrass",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            BasicFunction::Sphere => "Sphere",
            BasicFunction::Rastrigin => "Rastrigin",
            BasicFunction::Ackley => "Ackley",
            BasicFunction::Rosenbrock => "Rosenbrock",
            BasicFunction::Griewank => "Griewank",
            BasicFunction::Schwefel226 => "Schwefel 2.26",
            BasicFunction::BentCigar => "Bent Cigar",
            BasicFunction::Levy => "Levy",
            BasicFunction::Katsuura => "Katsuura",
            BasicFunction::Happycat => "HappyCat",
            BasicFunction::Discus => "Discus",
            BasicFunction::Weierstrass => "Weierstrass",
        }
    }

    pub fn tags(self) -> Tags {
        use Modality::*;
        let (modality, separable, symmetric) = match self {
            BasicFunction::Sphere => (Unimodal, true, true),
            BasicFunction::Rastrigin => (Multimodal, true, true),
            BasicFunction::Ackley => (Multimodal, false, true),
            BasicFunction::Rosenbrock => (Unimodal, false, false),
            BasicFunction::Griewank => (Multimodal, false, true),
            BasicFunction::Schwefel226 => (Multimodal, true, false),
            BasicFunction::BentCigar => (Unimodal, true, false),
            BasicFunction::Levy => (Multimodal, false, false),
            BasicFunction::Katsuura => (Multimodal, false, true),
            BasicFunction::Happycat => (Multimodal, false, false),
            BasicFunction::Discus => (Unimodal, true, false),
            BasicFunction::Weierstrass => (Multimodal, true, true),
        };
        Tags {
            modality,
            separable,
            symmetric,
        }
    }

    /// Canonical search domain per coordinate.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            BasicFunction::Schwefel226 => (-500.0, 500.0),
            _ => (-100.0, 100.0),
        }
    }

    /// Known minimizer for an `n`-dimensional input.
    pub fn minimizer(self, n: usize) -> Vec<f64> {
        let v = match self {
            BasicFunction::Rosenbrock | BasicFunction::Levy => 1.0,
            BasicFunction::Happycat => -1.0,
            BasicFunction::Schwefel226 => SCHWEFEL_ARGMIN,
            _ => 0.0,
        };
        vec![v; n]
    }

    /// Objective value at [`minimizer`](Self::minimizer).
    pub fn minimum(self, n: usize) -> f64 {
        match self {
            // the truncated constants leave a residual of order 1e-11 per coordinate
            BasicFunction::Schwefel226 => self.eval(&self.minimizer(n)),
            _ => 0.0,
        }
    }

    pub fn eval(self, z: &[f64]) -> f64 {
        let n = z.len() as f64;
        match self {
            BasicFunction::Sphere => z.iter().map(|v| v * v).sum(),
            BasicFunction::Rastrigin => z
                .iter()
                .map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0)
                .sum(),
            BasicFunction::Ackley => {
                let sq: f64 = z.iter().map(|v| v * v).sum();
                let cs: f64 = z.iter().map(|v| (2.0 * PI * v).cos()).sum();
                -20.0 * (-0.2 * (sq / n).sqrt()).exp() - (cs / n).exp() + 20.0 + E
            }
            BasicFunction::Rosenbrock => z
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
                .sum(),
            BasicFunction::Griewank => {
                let s: f64 = z.iter().map(|v| v * v / 4000.0).sum();
                let p = z
                    .iter()
                    .enumerate()
                    .fold(1.0, |acc, (i, v)| acc * (v / ((i + 1) as f64).sqrt()).cos());
                s - p + 1.0
            }
            BasicFunction::Schwefel226 => {
                SCHWEFEL_OFFSET * n - z.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
            }
            BasicFunction::BentCigar => {
                z[0] * z[0] + 1e6 * z[1..].iter().map(|v| v * v).sum::<f64>()
            }
            BasicFunction::Discus => 1e6 * z[0] * z[0] + z[1..].iter().map(|v| v * v).sum::<f64>(),
            BasicFunction::Levy => {
                let w = |v: f64| 1.0 + (v - 1.0) / 4.0;
                let d = z.len();
                let head = (PI * w(z[0])).sin().powi(2);
                let mid: f64 = z[..d - 1]
                    .iter()
                    .map(|&v| {
                        let wi = w(v);
                        (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2))
                    })
                    .sum();
                let wn = w(z[d - 1]);
                let tail = (wn - 1.0).powi(2) * (1.0 + (2.0 * PI * wn).sin().powi(2));
                head + mid + tail
            }
            BasicFunction::Katsuura => {
                let c = 10.0 / (n * n);
                let e = 10.0 / n.powf(1.2);
                let p = z.iter().enumerate().fold(1.0, |acc, (i, &v)| {
                    let inner: f64 = (1..=32)
                        .map(|j| {
                            let t = (1u64 << j) as f64;
                            (t * v - (t * v).round_ties_even()).abs() / t
                        })
                        .sum();
                    acc * (1.0 + (i + 1) as f64 * inner).powf(e)
                });
                c * p - c
            }
            BasicFunction::Happycat => {
                let sq: f64 = z.iter().map(|v| v * v).sum();
                let s: f64 = z.iter().sum();
                (sq - n).abs().powf(0.25) + (0.5 * sq + s) / n + 0.5
            }
            BasicFunction::Weierstrass => {
                let mut ak = [0.0; 21];
                let mut bk = [0.0; 21];
                let (mut a, mut b) = (1.0, 1.0);
                for k in 0..=20 {
                    ak[k] = a;
                    bk[k] = 2.0 * PI * b;
                    a *= 0.5;
                    b *= 3.0;
                }
                let k_terms = |x: f64| -> f64 { (0..=20).map(|k| ak[k] * (bk[k] * x).cos()).sum() };
                let body: f64 = z.iter().map(|&v| k_terms(v + 0.5)).sum();
                let offset: f64 = (0..=20).map(|k| ak[k] * (0.5 * bk[k]).cos()).sum();
                body - n * offset
            }
        }
    }

    /// The same function as a symbolic expression over `z`.
    pub fn expr(self) -> Expr {
        let two_pi = |x: Expr| mul(vec![num(2.0), Expr::Pi, x]);
        match self {
            BasicFunction::Sphere => sum_all(sq(elem(Var::I))),
            BasicFunction::Rastrigin => sum_all(signed(vec![
                (false, sq(elem(Var::I))),
                (true, mul(vec![num(10.0), call(Func::Cos, two_pi(elem(Var::I)))])),
                (false, num(10.0)),
            ])),
            BasicFunction::Ackley => signed(vec![
                (
                    false,
                    mul(vec![
                        num(-20.0),
                        call(
                            Func::Exp,
                            mul(vec![
                                num(-0.2),
                                call(Func::Sqrt, div(sum_all(sq(elem(Var::I))), Expr::Dim)),
                            ]),
                        ),
                    ]),
                ),
                (
                    true,
                    call(
                        Func::Exp,
                        div(sum_all(call(Func::Cos, two_pi(elem(Var::I)))), Expr::Dim),
                    ),
                ),
                (false, num(20.0)),
                (false, Expr::E),
            ]),
            BasicFunction::Rosenbrock => sum(
                Var::I,
                Bound::Lit(1),
                Bound::Dim(-1),
                add(vec![
                    mul(vec![
                        num(100.0),
                        sq(signed(vec![
                            (false, Expr::Elem(Var::I, 1)),
                            (true, sq(elem(Var::I))),
                        ])),
                    ]),
                    sq(signed(vec![(false, elem(Var::I)), (true, num(1.0))])),
                ]),
            ),
            BasicFunction::Griewank => signed(vec![
                (false, sum_all(div(sq(elem(Var::I)), num(4000.0)))),
                (
                    true,
                    expr::prod(
                        Var::I,
                        Bound::Lit(1),
                        Bound::Dim(0),
                        call(Func::Cos, div(elem(Var::I), call(Func::Sqrt, Expr::Idx(Var::I)))),
                    ),
                ),
                (false, num(1.0)),
            ]),
            BasicFunction::Schwefel226 => signed(vec![
                (false, mul(vec![num(SCHWEFEL_OFFSET), Expr::Dim])),
                (
                    true,
                    sum_all(mul(vec![
                        elem(Var::I),
                        call(Func::Sin, call(Func::Sqrt, call(Func::Abs, elem(Var::I)))),
                    ])),
                ),
            ]),
            BasicFunction::BentCigar => add(vec![
                sq(Expr::ElemAt(Bound::Lit(1))),
                mul(vec![
                    num(1e6),
                    sum(Var::I, Bound::Lit(2), Bound::Dim(0), sq(elem(Var::I))),
                ]),
            ]),
            BasicFunction::Discus => add(vec![
                mul(vec![num(1e6), sq(Expr::ElemAt(Bound::Lit(1)))]),
                sum(Var::I, Bound::Lit(2), Bound::Dim(0), sq(elem(Var::I))),
            ]),
            BasicFunction::Levy => {
                let w = |x: Expr| {
                    add(vec![
                        num(1.0),
                        div(signed(vec![(false, x), (true, num(1.0))]), num(4.0)),
                    ])
                };
                let minus_one = |x: Expr| signed(vec![(false, x), (true, num(1.0))]);
                add(vec![
                    sq(call(Func::Sin, mul(vec![Expr::Pi, w(Expr::ElemAt(Bound::Lit(1)))]))),
                    sum(
                        Var::I,
                        Bound::Lit(1),
                        Bound::Dim(-1),
                        mul(vec![
                            sq(minus_one(w(elem(Var::I)))),
                            add(vec![
                                num(1.0),
                                mul(vec![
                                    num(10.0),
                                    sq(call(
                                        Func::Sin,
                                        add(vec![mul(vec![Expr::Pi, w(elem(Var::I))]), num(1.0)]),
                                    )),
                                ]),
                            ]),
                        ]),
                    ),
                    mul(vec![
                        sq(minus_one(w(Expr::ElemAt(Bound::Dim(0))))),
                        add(vec![
                            num(1.0),
                            sq(call(Func::Sin, two_pi(w(Expr::ElemAt(Bound::Dim(0)))))),
                        ]),
                    ]),
                ])
            }
            BasicFunction::Katsuura => {
                let c = || div(num(10.0), sq(Expr::Dim));
                let two_j = || pow(num(2.0), Expr::Idx(Var::J));
                let scaled = || mul(vec![two_j(), elem(Var::I)]);
                let inner = sum(
                    Var::J,
                    Bound::Lit(1),
                    Bound::Lit(32),
                    div(
                        call(
                            Func::Abs,
                            signed(vec![(false, scaled()), (true, call(Func::Round, scaled()))]),
                        ),
                        two_j(),
                    ),
                );
                let factor = pow(
                    add(vec![num(1.0), mul(vec![Expr::Idx(Var::I), inner])]),
                    div(num(10.0), pow(Expr::Dim, num(1.2))),
                );
                signed(vec![
                    (
                        false,
                        mul(vec![c(), expr::prod(Var::I, Bound::Lit(1), Bound::Dim(0), factor)]),
                    ),
                    (true, c()),
                ])
            }
            BasicFunction::Happycat => {
                let sumsq = || sum_all(sq(elem(Var::I)));
                add(vec![
                    pow(
                        call(Func::Abs, signed(vec![(false, sumsq()), (true, Expr::Dim)])),
                        num(0.25),
                    ),
                    div(
                        add(vec![mul(vec![num(0.5), sumsq()]), sum_all(elem(Var::I))]),
                        Expr::Dim,
                    ),
                    num(0.5),
                ])
            }
            BasicFunction::Weierstrass => {
                let ak = || pow(num(0.5), Expr::Idx(Var::K));
                let bk = || pow(num(3.0), Expr::Idx(Var::K));
                let k_sum = |body: Expr| sum(Var::K, Bound::Lit(0), Bound::Lit(20), body);
                signed(vec![
                    (
                        false,
                        sum_all(k_sum(mul(vec![
                            ak(),
                            call(
                                Func::Cos,
                                mul(vec![
                                    num(2.0),
                                    Expr::Pi,
                                    bk(),
                                    add(vec![elem(Var::I), num(0.5)]),
                                ]),
                            ),
                        ]))),
                    ),
                    (
                        true,
                        mul(vec![
                            Expr::Dim,
                            k_sum(mul(vec![ak(), call(Func::Cos, mul(vec![Expr::Pi, bk()]))])),
                        ]),
                    ),
                ])
            }
        }
    }
}

impl fmt::Display for BasicFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasicFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BasicFunction::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| invalid(format!("unknown basic function {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Env;
    use rand::Rng;

    #[test]
    fn minima_at_known_minimizers() {
        for b in BasicFunction::ALL {
            for n in [1usize, 2, 5, 13] {
                let v = b.eval(&b.minimizer(n));
                if b == BasicFunction::Schwefel226 {
                    assert!(v.abs() < 1e-8 * n as f64, "{b} n={n}: {v}");
                } else {
                    assert!(v.abs() < 1e-12, "{b} n={n}: {v}");
                }
            }
        }
    }

    #[test]
    fn katsuura_zero_at_origin() {
        assert_eq!(BasicFunction::Katsuura.eval(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn finite_within_default_bounds() {
        let mut rng = crate::seed::rng(11);
        for b in BasicFunction::ALL {
            let (lo, hi) = b.default_bounds();
            for _ in 0..200 {
                let n = rng.random_range(1..=50);
                let z: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
                assert!(b.eval(&z).is_finite(), "{b}");
            }
            assert!(b.eval(&vec![lo; 7]).is_finite());
            assert!(b.eval(&vec![hi; 7]).is_finite());
        }
    }

    #[test]
    fn expression_matches_native() {
        let mut rng = crate::seed::rng(5);
        for b in BasicFunction::ALL {
            let e = b.expr();
            for _ in 0..50 {
                let n = rng.random_range(1..=12);
                let z: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
                let native = b.eval(&z);
                let sym = e.eval(&z, &Env::default());
                let tol = 1e-12 * native.abs().max(1.0);
                assert!((native - sym).abs() <= tol, "{b}: {native} vs {sym}");
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for b in BasicFunction::ALL {
            assert_eq!(b.name().parse::<BasicFunction>().unwrap(), b);
        }
        assert!("nope".parse::<BasicFunction>().is_err());
    }
}
