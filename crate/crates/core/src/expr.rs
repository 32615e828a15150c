//! A small symbolic expression language for objective and constraint bodies.
//!
//! Every basic function and constraint template describes itself as an
//! [`Expr`] over one input vector. Renderers turn the tree into Python or
//! LaTeX text; [`Expr::eval`] interprets it directly and serves as the
//! reference when checking renderers and rewrites.

use std::collections::HashMap;

/// A bound loop index. Indices are 1-based, as in the mathematical notation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    I,
    J,
    K,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::I => "i",
            Var::J => "j",
            Var::K => "k",
        }
    }
}

/// Loop bound: a literal, the input length plus an offset, or another index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    Lit(i64),
    Dim(i64),
    Var(Var),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    /// Round half to even.
    Round,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    /// Euler's number.
    E,
    /// Length of the input vector.
    Dim,
    /// Current value of a loop index.
    Idx(Var),
    /// Input element at `index + offset` (1-based).
    Elem(Var, i64),
    /// Input element at a fixed 1-based position (`Lit`) or from the end (`Dim`).
    ElemAt(Bound),
    /// Named data vector element at the loop index (e.g. coefficients `a_i`).
    Data(String, Var),
    /// Signed n-ary sum; `true` marks a subtracted term.
    Add(Vec<(bool, Expr)>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    Sum(Var, Bound, Bound, Box<Expr>),
    Prod(Var, Bound, Bound, Box<Expr>),
}

pub fn num(v: f64) -> Expr {
    Expr::Num(v)
}

pub fn elem(v: Var) -> Expr {
    Expr::Elem(v, 0)
}

pub fn add(terms: Vec<Expr>) -> Expr {
    Expr::Add(terms.into_iter().map(|t| (false, t)).collect())
}

pub fn signed(terms: Vec<(bool, Expr)>) -> Expr {
    Expr::Add(terms)
}

pub fn mul(factors: Vec<Expr>) -> Expr {
    Expr::Mul(factors)
}

pub fn div(a: Expr, b: Expr) -> Expr {
    Expr::Div(Box::new(a), Box::new(b))
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    Expr::Pow(Box::new(a), Box::new(b))
}

pub fn sq(a: Expr) -> Expr {
    pow(a, num(2.0))
}

pub fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

pub fn sum(v: Var, lo: Bound, hi: Bound, body: Expr) -> Expr {
    Expr::Sum(v, lo, hi, Box::new(body))
}

pub fn prod(v: Var, lo: Bound, hi: Bound, body: Expr) -> Expr {
    Expr::Prod(v, lo, hi, Box::new(body))
}

/// Sum over the full input: `Σ_{i=1}^{D} body`.
pub fn sum_all(body: Expr) -> Expr {
    sum(Var::I, Bound::Lit(1), Bound::Dim(0), body)
}

impl Func {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Round => v.round_ties_even(),
        }
    }
}

/// Evaluation environment for [`Expr::eval`].
#[derive(Default)]
pub struct Env<'a> {
    pub data: HashMap<String, &'a [f64]>,
}

impl Expr {
    /// Interprets the expression with input vector `z`.
    pub fn eval(&self, z: &[f64], env: &Env<'_>) -> f64 {
        let mut idx = HashMap::new();
        self.eval_in(z, env, &mut idx)
    }

    fn eval_in(&self, z: &[f64], env: &Env<'_>, idx: &mut HashMap<Var, i64>) -> f64 {
        let bound = |b: &Bound, idx: &HashMap<Var, i64>| -> i64 {
            match *b {
                Bound::Lit(v) => v,
                Bound::Dim(off) => z.len() as i64 + off,
                Bound::Var(v) => idx[&v],
            }
        };
        match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::E => std::f64::consts::E,
            Expr::Dim => z.len() as f64,
            Expr::Idx(v) => idx[v] as f64,
            Expr::Elem(v, off) => z[(idx[v] + off - 1) as usize],
            Expr::ElemAt(b) => z[(bound(b, idx) - 1) as usize],
            Expr::Data(name, v) => env.data[name.as_str()][(idx[v] - 1) as usize],
            Expr::Add(terms) => terms.iter().fold(0.0, |acc, (neg, t)| {
                let v = t.eval_in(z, env, idx);
                if *neg {
                    acc - v
                } else {
                    acc + v
                }
            }),
            Expr::Mul(fs) => {
                let mut it = fs.iter();
                let first = it.next().map_or(1.0, |f| f.eval_in(z, env, idx));
                it.fold(first, |acc, f| acc * f.eval_in(z, env, idx))
            }
            Expr::Div(a, b) => a.eval_in(z, env, idx) / b.eval_in(z, env, idx),
            Expr::Pow(a, b) => powf(a.eval_in(z, env, idx), b.eval_in(z, env, idx)),
            Expr::Call(f, a) => f.apply(a.eval_in(z, env, idx)),
            Expr::Sum(v, lo, hi, body) | Expr::Prod(v, lo, hi, body) => {
                let is_sum = matches!(self, Expr::Sum(..));
                let (lo, hi) = (bound(lo, idx), bound(hi, idx));
                let saved = idx.get(v).copied();
                let mut acc = if is_sum { 0.0 } else { 1.0 };
                for k in lo..=hi {
                    idx.insert(*v, k);
                    let t = body.eval_in(z, env, idx);
                    acc = if is_sum { acc + t } else { acc * t };
                }
                match saved {
                    Some(s) => idx.insert(*v, s),
                    None => idx.remove(v),
                };
                acc
            }
        }
    }

    /// True when the expression never reads the input vector or data.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi | Expr::E | Expr::Dim => true,
            Expr::Idx(_) | Expr::Elem(..) | Expr::ElemAt(_) | Expr::Data(..) => false,
            Expr::Add(ts) => ts.iter().all(|(_, t)| t.is_constant()),
            Expr::Mul(fs) => fs.iter().all(Expr::is_constant),
            Expr::Div(a, b) | Expr::Pow(a, b) => a.is_constant() && b.is_constant(),
            Expr::Call(_, a) => a.is_constant(),
            Expr::Sum(..) | Expr::Prod(..) => false,
        }
    }

    /// True when the expression mentions loop index `v`.
    pub fn uses_var(&self, v: Var) -> bool {
        match self {
            Expr::Idx(w) | Expr::Elem(w, _) | Expr::Data(_, w) => *w == v,
            Expr::Num(_) | Expr::Pi | Expr::E | Expr::Dim | Expr::ElemAt(_) => false,
            Expr::Add(ts) => ts.iter().any(|(_, t)| t.uses_var(v)),
            Expr::Mul(fs) => fs.iter().any(|f| f.uses_var(v)),
            Expr::Div(a, b) | Expr::Pow(a, b) => a.uses_var(v) || b.uses_var(v),
            Expr::Call(_, a) => a.uses_var(v),
            Expr::Sum(_, lo, hi, body) | Expr::Prod(_, lo, hi, body) => {
                *lo == Bound::Var(v) || *hi == Bound::Var(v) || body.uses_var(v)
            }
        }
    }
}

/// Power with exact squaring, matching Python's float `**` on the values we emit.
pub fn powf(base: f64, exp: f64) -> f64 {
    if exp == 2.0 {
        base * base
    } else {
        base.powf(exp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_nested_sums() {
        // Σ_i Σ_{j<=i} z_j = Σ_i (D - i + 1) z_i
        let e = sum_all(sum(Var::J, Bound::Lit(1), Bound::Var(Var::I), elem(Var::J)));
        let z = [1.0, 2.0, 3.0];
        assert_eq!(e.eval(&z, &Env::default()), 3.0 + 2.0 * 2.0 + 3.0);
    }

    #[test]
    fn eval_offsets_and_data() {
        let e = sum(
            Var::I,
            Bound::Lit(1),
            Bound::Dim(-1),
            mul(vec![Expr::Data("a".into(), Var::I), Expr::Elem(Var::I, 1)]),
        );
        let z = [5.0, 7.0, 11.0];
        let a = [2.0, 3.0];
        let mut env = Env::default();
        env.data.insert("a".into(), &a);
        assert_eq!(e.eval(&z, &env), 2.0 * 7.0 + 3.0 * 11.0);
    }

    #[test]
    fn constness() {
        assert!(div(num(10.0), sq(Expr::Dim)).is_constant());
        assert!(!sum_all(elem(Var::I)).is_constant());
        assert!(sum(Var::J, Bound::Lit(1), Bound::Var(Var::I), elem(Var::J)).uses_var(Var::I));
    }
}
