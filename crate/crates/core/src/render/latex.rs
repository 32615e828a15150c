//! LaTeX renderings and the rule-based rewrites behind the commuted and
//! factored styles.

use std::fmt::Write as _;

use rand::seq::SliceRandom;

use crate::expr::{Bound, Expr, Func, Var};
use crate::problem::{ConstraintKind, Paradigm, ProblemInstance};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Add,
    Mul,
    Unary,
    Pow,
    Atom,
}

type Piece = (String, Prec);

pub(crate) fn number(v: f64) -> String {
    if v.is_nan() {
        return r"\mathrm{NaN}".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { r"\infty" } else { r"-\infty" }.into();
    }
    if v < 0.0 {
        return format!("-{}", number(-v));
    }
    if v == v.trunc() && v.abs() < 1e5 {
        return format!("{}", v as i64);
    }
    let s = format!("{v:e}");
    let (m, e) = s.split_once('e').expect("exponent form");
    if m == "1" {
        format!("10^{{{e}}}")
    } else if (-4..=5).contains(&e.parse::<i32>().unwrap_or(0)) {
        format!("{v:?}")
    } else {
        format!(r"{m} \times 10^{{{e}}}")
    }
}

fn paren(p: &Piece, min: Prec) -> String {
    if p.1 < min {
        format!(r"\left({}\right)", p.0)
    } else {
        p.0.clone()
    }
}

fn offset(base: &str, k: i64) -> String {
    match k {
        0 => base.to_string(),
        k if k > 0 => format!("{base}+{k}"),
        k => format!("{base}-{}", -k),
    }
}

fn bound(b: Bound) -> String {
    match b {
        Bound::Lit(v) => v.to_string(),
        Bound::Dim(off) => offset("D", off),
        Bound::Var(v) => v.name().to_string(),
    }
}

/// Markup for one expression over input symbol `z`.
pub(crate) fn tex(e: &Expr, z: &str) -> String {
    piece(e, z).0
}

fn piece(e: &Expr, z: &str) -> Piece {
    match e {
        Expr::Num(v) => {
            let s = number(*v);
            let p = if s.starts_with('-') {
                Prec::Unary
            } else if s.contains(r"\times") {
                Prec::Mul
            } else {
                Prec::Atom
            };
            (s, p)
        }
        Expr::Pi => (r"\pi".into(), Prec::Atom),
        Expr::E => ("e".into(), Prec::Atom),
        Expr::Dim => ("D".into(), Prec::Atom),
        Expr::Idx(v) => (v.name().into(), Prec::Atom),
        Expr::Elem(v, off) => (format!("{z}_{{{}}}", offset(v.name(), *off)), Prec::Atom),
        Expr::ElemAt(b) => (format!("{z}_{{{}}}", bound(*b)), Prec::Atom),
        Expr::Data(name, v) => (format!("{name}_{{{}}}", v.name()), Prec::Atom),
        Expr::Add(terms) => {
            let mut s = String::new();
            for (k, (neg, t)) in terms.iter().enumerate() {
                let p = piece(t, z);
                let body = if *neg || k > 0 { paren(&p, Prec::Mul) } else { p.0 };
                match (k, neg) {
                    (0, false) => s.push_str(&body),
                    (0, true) => {
                        s.push('-');
                        s.push_str(&body);
                    }
                    (_, false) => {
                        s.push_str(" + ");
                        s.push_str(&body);
                    }
                    (_, true) => {
                        s.push_str(" - ");
                        s.push_str(&body);
                    }
                }
            }
            if terms.is_empty() {
                s.push('0');
            }
            (s, Prec::Add)
        }
        Expr::Mul(fs) => {
            if fs.is_empty() {
                return ("1".into(), Prec::Atom);
            }
            let parts: Vec<String> = fs
                .iter()
                .enumerate()
                .map(|(k, f)| {
                    let p = piece(f, z);
                    let last_reduction = k + 1 == fs.len() && matches!(f, Expr::Sum(..) | Expr::Prod(..));
                    if (k == 0 && p.1 == Prec::Unary) || last_reduction {
                        p.0
                    } else {
                        paren(&p, Prec::Pow)
                    }
                })
                .collect();
            let unary = fs.first().is_some_and(|f| piece(f, z).1 == Prec::Unary);
            (parts.join(r" \cdot "), if unary { Prec::Add } else { Prec::Mul })
        }
        Expr::Div(a, b) => (format!(r"\frac{{{}}}{{{}}}", tex(a, z), tex(b, z)), Prec::Atom),
        Expr::Pow(a, b) => {
            let base = piece(a, z);
            let base = match a.as_ref() {
                Expr::Div(..) | Expr::Call(..) => format!(r"\left({}\right)", base.0),
                _ => paren(&base, Prec::Atom),
            };
            (format!("{base}^{{{}}}", tex(b, z)), Prec::Pow)
        }
        Expr::Call(f, a) => {
            let inner = tex(a, z);
            let s = match f {
                Func::Sin => format!(r"\sin\left({inner}\right)"),
                Func::Cos => format!(r"\cos\left({inner}\right)"),
                Func::Exp => format!(r"\exp\left({inner}\right)"),
                Func::Sqrt => format!(r"\sqrt{{{inner}}}"),
                Func::Abs => format!(r"\left|{inner}\right|"),
                Func::Round => format!(r"\operatorname{{round}}\left({inner}\right)"),
            };
            (s, Prec::Atom)
        }
        Expr::Sum(v, lo, hi, body) | Expr::Prod(v, lo, hi, body) => {
            let op = if matches!(e, Expr::Sum(..)) { r"\sum" } else { r"\prod" };
            let b = piece(body, z);
            (
                format!("{op}_{{{}={}}}^{{{}}} {}", v.name(), bound(*lo), bound(*hi), paren(&b, Prec::Mul)),
                Prec::Add,
            )
        }
    }
}

/// Applies a seeded permutation to the children of every sum and product.
/// At least one node with two or more children is reordered.
pub(crate) fn commute(e: &Expr, rng: &mut seed::Rng) -> Expr {
    let mut out = permute(e, rng);
    if out == *e {
        force_swap(&mut out);
    }
    out
}

fn permute(e: &Expr, rng: &mut seed::Rng) -> Expr {
    match e {
        Expr::Add(ts) => {
            let mut ts: Vec<(bool, Expr)> = ts.iter().map(|(n, t)| (*n, permute(t, rng))).collect();
            ts.shuffle(rng);
            Expr::Add(ts)
        }
        Expr::Mul(fs) => {
            let mut fs: Vec<Expr> = fs.iter().map(|f| permute(f, rng)).collect();
            fs.shuffle(rng);
            Expr::Mul(fs)
        }
        Expr::Div(a, b) => Expr::Div(Box::new(permute(a, rng)), Box::new(permute(b, rng))),
        Expr::Pow(a, b) => Expr::Pow(Box::new(permute(a, rng)), Box::new(permute(b, rng))),
        Expr::Call(f, a) => Expr::Call(*f, Box::new(permute(a, rng))),
        Expr::Sum(v, lo, hi, b) => Expr::Sum(*v, *lo, *hi, Box::new(permute(b, rng))),
        Expr::Prod(v, lo, hi, b) => Expr::Prod(*v, *lo, *hi, Box::new(permute(b, rng))),
        leaf => leaf.clone(),
    }
}

fn force_swap(e: &mut Expr) -> bool {
    match e {
        Expr::Add(ts) if ts.len() > 1 && ts[0] != ts[1] => {
            ts.swap(0, 1);
            true
        }
        Expr::Mul(fs) if fs.len() > 1 && fs[0] != fs[1] => {
            fs.swap(0, 1);
            true
        }
        Expr::Add(ts) => ts.iter_mut().any(|(_, t)| force_swap(t)),
        Expr::Mul(fs) => fs.iter_mut().any(force_swap),
        Expr::Div(a, b) | Expr::Pow(a, b) => force_swap(a) || force_swap(b),
        Expr::Call(_, a) => force_swap(a),
        Expr::Sum(_, _, _, b) | Expr::Prod(_, _, _, b) => force_swap(b),
        _ => false,
    }
}

/// Order-insensitive normal form used to compare rewrites.
#[cfg(test)]
pub(crate) fn normalize(e: &Expr) -> String {
    match e {
        Expr::Add(ts) => {
            let mut parts: Vec<String> =
                ts.iter().map(|(n, t)| format!("{}{}", if *n { '-' } else { '+' }, normalize(t))).collect();
            parts.sort();
            format!("add[{}]", parts.join(","))
        }
        Expr::Mul(fs) => {
            let mut parts: Vec<String> = fs.iter().map(normalize).collect();
            parts.sort();
            format!("mul[{}]", parts.join(","))
        }
        Expr::Div(a, b) => format!("div[{},{}]", normalize(a), normalize(b)),
        Expr::Pow(a, b) => format!("pow[{},{}]", normalize(a), normalize(b)),
        Expr::Call(f, a) => format!("{f:?}[{}]", normalize(a)),
        Expr::Sum(v, lo, hi, b) => format!("sum{v:?}{lo:?}{hi:?}[{}]", normalize(b)),
        Expr::Prod(v, lo, hi, b) => format!("prod{v:?}{lo:?}{hi:?}[{}]", normalize(b)),
        leaf => format!("{leaf:?}"),
    }
}

fn count(lo: Bound, hi: Bound) -> Option<Expr> {
    match (lo, hi) {
        (Bound::Lit(a), Bound::Lit(b)) => Some(Expr::Num((b - a + 1) as f64)),
        (Bound::Lit(a), Bound::Dim(b)) => {
            let k = b - a + 1;
            Some(match k {
                0 => Expr::Dim,
                k if k > 0 => Expr::Add(vec![(false, Expr::Dim), (false, Expr::Num(k as f64))]),
                k => Expr::Add(vec![(false, Expr::Dim), (true, Expr::Num(-k as f64))]),
            })
        }
        _ => None,
    }
}

fn product(mut fs: Vec<Expr>) -> Expr {
    if fs.len() == 1 {
        fs.pop().unwrap()
    } else {
        Expr::Mul(fs)
    }
}

fn lead_constant(e: &Expr) -> Option<(f64, Expr)> {
    match e {
        Expr::Mul(fs) if fs.len() > 1 => match fs[0] {
            Expr::Num(c) => Some((c, product(fs[1..].to_vec()))),
            _ => None,
        },
        _ => None,
    }
}

/// Pulls constants out of sums, splits sums over their terms, turns
/// constant sums into counts and hoists a shared leading constant.
pub(crate) fn factor(e: &Expr) -> Expr {
    match e {
        Expr::Add(ts) => {
            let ts: Vec<(bool, Expr)> = ts.iter().map(|(n, t)| (*n, factor(t))).collect();
            let leads: Vec<Option<(f64, Expr)>> = ts.iter().map(|(_, t)| lead_constant(t)).collect();
            if ts.len() > 1 && leads.iter().all(Option::is_some) {
                let c = leads[0].as_ref().unwrap().0;
                if c != 1.0 && leads.iter().all(|l| l.as_ref().unwrap().0 == c) {
                    let rest = ts
                        .iter()
                        .zip(leads)
                        .map(|((n, _), l)| (*n, l.unwrap().1))
                        .collect();
                    return Expr::Mul(vec![Expr::Num(c), Expr::Add(rest)]);
                }
            }
            Expr::Add(ts)
        }
        Expr::Mul(fs) => Expr::Mul(fs.iter().map(factor).collect()),
        Expr::Div(a, b) => Expr::Div(Box::new(factor(a)), Box::new(factor(b))),
        Expr::Pow(a, b) => Expr::Pow(Box::new(factor(a)), Box::new(factor(b))),
        Expr::Call(f, a) => Expr::Call(*f, Box::new(factor(a))),
        Expr::Prod(v, lo, hi, b) => Expr::Prod(*v, *lo, *hi, Box::new(factor(b))),
        Expr::Sum(v, lo, hi, b) => factor_sum(*v, *lo, *hi, factor(b)),
        leaf => leaf.clone(),
    }
}

fn factor_sum(v: Var, lo: Bound, hi: Bound, body: Expr) -> Expr {
    let free = |x: &Expr| x.is_constant() && !x.uses_var(v);
    if free(&body) {
        if let Some(n) = count(lo, hi) {
            return match body {
                Expr::Num(c) if c == 1.0 => n,
                b => Expr::Mul(vec![b, n]),
            };
        }
    }
    match body {
        Expr::Add(ts) if ts.len() > 1 => {
            let split = ts.into_iter().map(|(n, t)| (n, factor_sum(v, lo, hi, t))).collect();
            factor(&Expr::Add(split))
        }
        Expr::Mul(fs) if fs.iter().any(free) && !fs.iter().all(free) => {
            let (consts, rest): (Vec<Expr>, Vec<Expr>) = fs.into_iter().partition(free);
            let mut out = consts;
            out.push(factor_sum(v, lo, hi, product(rest)));
            Expr::Mul(out)
        }
        b => Expr::Sum(v, lo, hi, Box::new(b)),
    }
}

fn vector(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|&x| number(x)).collect();
    format!(r"\left({}\right)", items.join(", "))
}

fn matrix(m: &[Vec<f64>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| r.iter().map(|&x| number(x)).collect::<Vec<_>>().join(" & "))
        .collect();
    format!("\\begin{{bmatrix}}\n{}\n\\end{{bmatrix}}", rows.join(" \\\\\n"))
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Variant {
    Canonical,
    Commuted,
    Factored,
}

pub(crate) struct Source {
    pub objective: String,
    pub constraints: Option<String>,
}

fn rewrite(e: Expr, variant: Variant, rng: &mut seed::Rng) -> Expr {
    match variant {
        Variant::Canonical => e,
        Variant::Commuted => commute(&e, rng),
        Variant::Factored => factor(&e),
    }
}

pub(crate) fn instance(inst: &ProblemInstance, variant: Variant, seed: u64) -> Source {
    let mut rng = seed::rng(crate::derive_seed!(seed, &inst.id, "tex"));
    let k = inst.components.len();
    let sub = |i: usize| if k == 1 { String::new() } else { format!("_{{{i}}}") };
    let mut out = String::new();

    let mut terms: Vec<String> = inst
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let call = format!(r"f{}\left(z^{{({})}}\right)", sub(i + 1), i + 1);
            match c.weight {
                Some(w) => format!(r"{} \cdot {call}", number(w)),
                None => call,
            }
        })
        .collect();
    if variant == Variant::Commuted && terms.len() > 1 {
        let orig = terms.clone();
        terms.shuffle(&mut rng);
        if terms == orig {
            terms.swap(0, 1);
        }
    }
    let _ = writeln!(out, r"F(x) = {}", terms.join(" + "));
    for (i, c) in inst.components.iter().enumerate() {
        let n = i + 1;
        let input = match &c.segment {
            Some(_) => format!(r"x_{{S_{{{n}}}}}"),
            None => "x".to_string(),
        };
        let shifted = format!(r"{input} - o{}", sub(n));
        let _ = match &c.transform.rotation {
            Some(_) => writeln!(out, r"z^{{({n})}} = M{}^{{\top}}\left({shifted}\right)", sub(n)),
            None => writeln!(out, r"z^{{({n})}} = {shifted}"),
        };
    }
    for (i, c) in inst.components.iter().enumerate() {
        let e = rewrite(c.function.expr(), variant, &mut rng);
        let _ = writeln!(out, r"f{}(z) = {}", sub(i + 1), tex(&e, "z"));
    }
    let dims: Vec<String> = inst
        .components
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.segment.as_ref().map(|s| format!(r"D{} = {}", sub(i + 1), s.len())))
        .collect();
    if inst.paradigm == Paradigm::Hybrid {
        let _ = writeln!(out, r"\text{{where $D$ inside $f_{{i}}$ is the segment length: }} {}", dims.join(", "));
    }
    for (i, c) in inst.components.iter().enumerate() {
        let n = i + 1;
        if let Some(seg) = &c.segment {
            let idx: Vec<String> = seg.iter().map(|s| (s + 1).to_string()).collect();
            let _ = writeln!(out, r"S_{{{n}}} = \left\{{{}\right\}}", idx.join(", "));
        }
        let _ = writeln!(out, "o{} = {}", sub(n), vector(&c.transform.shift));
        if let Some(m) = &c.transform.rotation {
            let _ = writeln!(out, "M{} = {}", sub(n), matrix(m));
        }
    }

    let constraints = if inst.constraints.is_empty() {
        None
    } else {
        let mut s = String::new();
        let (mut g, mut h) = (0, 0);
        for c in &inst.constraints {
            let (name, rel) = match c.kind {
                ConstraintKind::Inequality => {
                    g += 1;
                    (format!("g_{{{g}}}"), r"\le 0")
                }
                ConstraintKind::Equality => {
                    h += 1;
                    (format!("h_{{{h}}}"), "= 0")
                }
            };
            let e = rewrite(c.expr("a"), variant, &mut rng);
            let _ = writeln!(s, r"{name}(x) = {} {rel}, \quad y = x - c", tex(&e, "y"));
            if let Some(a) = c.data() {
                let _ = writeln!(s, "a = {}", vector(a));
            }
        }
        let _ = writeln!(s, "c = {}", vector(&inst.constraints[0].shift));
        if h > 0 {
            let _ = writeln!(s, r"\text{{equalities hold when }} \left|h(x)\right| \le 10^{{-4}}");
        }
        Some(s)
    };
    Source { objective: out, constraints }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Env;
    use crate::problem::BasicFunction;

    #[test]
    fn number_formats() {
        assert_eq!(number(10.0), "10");
        assert_eq!(number(-20.0), "-20");
        assert_eq!(number(1e6), "10^{6}");
        assert_eq!(number(0.25), "0.25");
        assert_eq!(number(2.5e-7), r"2.5 \times 10^{-7}");
    }

    #[test]
    fn sphere_markup() {
        assert_eq!(tex(&BasicFunction::Sphere.expr(), "z"), r"\sum_{i=1}^{D} z_{i}^{2}");
    }

    #[test]
    fn factored_rastrigin_counts_the_constant() {
        let f = factor(&BasicFunction::Rastrigin.expr());
        let s = tex(&f, "z");
        assert!(s.contains(r"10 \cdot D"), "{s}");
        assert!(s.contains(r"10 \cdot \sum_{i=1}^{D} \cos"), "{s}");
    }

    #[test]
    fn rewrites_preserve_value() {
        let z = [0.3, -1.2, 2.5, 0.7];
        for f in BasicFunction::ALL {
            let e = f.expr();
            let v = e.eval(&z, &Env::default());
            for s in 0..5 {
                let c = commute(&e, &mut seed::rng(s));
                assert_eq!(normalize(&c), normalize(&e), "{f:?}");
                let w = c.eval(&z, &Env::default());
                assert!((w - v).abs() <= 1e-9 * v.abs().max(1.0), "{f:?} commuted");
            }
            let w = factor(&e).eval(&z, &Env::default());
            assert!((w - v).abs() <= 1e-9 * v.abs().max(1.0), "{f:?} factored: {w} vs {v}");
        }
    }
}
