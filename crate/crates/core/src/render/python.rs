//! Python renderings of expressions and whole instances.

use std::fmt::Write as _;

use crate::expr::{Bound, Expr, Func, Var};
use crate::problem::{ComponentSpec, ConstraintKind, Paradigm, ProblemInstance, TransformSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Prec {
    Add,
    Mul,
    Unary,
    Pow,
    Atom,
}

type Piece = (String, Prec);

/// Python float literal that round-trips exactly.
pub(crate) fn lit(v: f64) -> String {
    if v.is_nan() {
        "float('nan')".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "float('inf')" } else { "-float('inf')" }.to_string()
    } else {
        format!("{v:?}")
    }
}

pub(crate) fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|&x| lit(x)).collect();
    format!("[{}]", items.join(", "))
}

fn matrix(m: &[Vec<f64>], indent: &str) -> String {
    let rows: Vec<String> = m.iter().map(|r| format!("{indent}    {},", list(r))).collect();
    format!("[\n{}\n{indent}]", rows.join("\n"))
}

fn num(v: f64) -> Piece {
    (lit(v), if v < 0.0 || (v == 0.0 && v.is_sign_negative()) { Prec::Unary } else { Prec::Atom })
}

fn wrap(p: &Piece, min: Prec) -> String {
    if p.1 < min {
        format!("({})", p.0)
    } else {
        p.0.clone()
    }
}

/// Names used while printing one function body.
#[derive(Clone, Copy)]
pub(crate) struct Names<'a> {
    pub z: &'a str,
    pub n: &'a str,
    pub lib: &'static str,
}

fn func(f: Func, lib: &str, arg: &Piece) -> Piece {
    let name = match f {
        Func::Sin => format!("{lib}.sin"),
        Func::Cos => format!("{lib}.cos"),
        Func::Exp => format!("{lib}.exp"),
        Func::Sqrt => format!("{lib}.sqrt"),
        Func::Abs if lib == "np" => "np.abs".to_string(),
        Func::Abs => "abs".to_string(),
        Func::Round if lib == "np" => "np.round".to_string(),
        Func::Round => "round".to_string(),
    };
    (format!("{name}({})", arg.0), Prec::Atom)
}

/// Combines already printed children of an operator node.
fn compose(e: &Expr, kids: &[Piece], lib: &str) -> Piece {
    match e {
        Expr::Add(terms) => {
            let mut s = String::new();
            for (k, ((neg, _), p)) in terms.iter().zip(kids).enumerate() {
                match (k, neg) {
                    (0, false) => s.push_str(&p.0),
                    (0, true) => {
                        s.push('-');
                        s.push_str(&wrap(p, Prec::Mul));
                    }
                    (_, false) => {
                        s.push_str(" + ");
                        s.push_str(&p.0);
                    }
                    (_, true) => {
                        s.push_str(" - ");
                        s.push_str(&wrap(p, Prec::Mul));
                    }
                }
            }
            if terms.is_empty() {
                s.push_str("0.0");
            }
            (s, Prec::Add)
        }
        Expr::Mul(fs) => {
            if fs.is_empty() {
                return ("1.0".into(), Prec::Atom);
            }
            let parts: Vec<String> = kids.iter().map(|p| wrap(p, Prec::Mul)).collect();
            (parts.join(" * "), Prec::Mul)
        }
        Expr::Div(..) => (
            format!("{} / {}", wrap(&kids[0], Prec::Mul), wrap(&kids[1], Prec::Unary)),
            Prec::Mul,
        ),
        Expr::Pow(..) => (
            format!("{} ** {}", wrap(&kids[0], Prec::Atom), wrap(&kids[1], Prec::Atom)),
            Prec::Pow,
        ),
        Expr::Call(f, _) => func(*f, lib, &kids[0]),
        _ => unreachable!("compose called on a leaf"),
    }
}

fn children(e: &Expr) -> Vec<&Expr> {
    match e {
        Expr::Add(ts) => ts.iter().map(|(_, t)| t).collect(),
        Expr::Mul(fs) => fs.iter().collect(),
        Expr::Div(a, b) | Expr::Pow(a, b) => vec![a, b],
        Expr::Call(_, a) => vec![a],
        _ => Vec::new(),
    }
}

fn offset(base: &str, k: i64) -> String {
    match k {
        0 => base.to_string(),
        k if k > 0 => format!("{base} + {k}"),
        k => format!("{base} - {}", -k),
    }
}

/// Python expression for a loop bound value.
fn bound(b: Bound, nm: Names) -> String {
    match b {
        Bound::Lit(v) => v.to_string(),
        Bound::Dim(off) => offset(nm.n, off),
        Bound::Var(v) => v.name().to_string(),
    }
}

/// Exclusive upper limit for `range` given an inclusive bound.
fn bound_excl(b: Bound, nm: Names) -> String {
    match b {
        Bound::Lit(v) => (v + 1).to_string(),
        Bound::Dim(off) => offset(nm.n, off + 1),
        Bound::Var(v) => offset(v.name(), 1),
    }
}

fn leaf_scalar(e: &Expr, nm: Names) -> Option<Piece> {
    Some(match e {
        Expr::Num(v) => num(*v),
        Expr::Pi => (format!("{}.pi", nm.lib), Prec::Atom),
        Expr::E => (format!("{}.e", nm.lib), Prec::Atom),
        Expr::Dim => (nm.n.to_string(), Prec::Atom),
        Expr::Idx(v) => (v.name().to_string(), Prec::Atom),
        Expr::Elem(v, off) => (format!("{}[{}]", nm.z, offset(v.name(), off - 1)), Prec::Atom),
        Expr::ElemAt(b) => {
            let idx = match *b {
                Bound::Lit(k) => (k - 1).to_string(),
                Bound::Dim(off) => offset(nm.n, off - 1),
                Bound::Var(v) => offset(v.name(), -1),
            };
            (format!("{}[{idx}]", nm.z), Prec::Atom)
        }
        Expr::Data(name, v) => (format!("{name}[{}]", offset(v.name(), -1)), Prec::Atom),
        _ => return None,
    })
}

/// Pure expression; reductions become generator comprehensions.
pub(crate) fn inline(e: &Expr, nm: Names) -> Piece {
    if let Some(p) = leaf_scalar(e, nm) {
        return p;
    }
    match e {
        Expr::Sum(v, lo, hi, body) | Expr::Prod(v, lo, hi, body) => {
            let b = inline(body, nm);
            let range = format!("range({}, {})", bound(*lo, nm), bound_excl(*hi, nm));
            let gen = format!("{} for {} in {range}", b.0, v.name());
            let text = match (e, nm.lib) {
                (Expr::Sum(..), _) => format!("sum({gen})"),
                (_, "np") => format!("np.prod([{gen}])"),
                _ => format!("math.prod({gen})"),
            };
            (text, Prec::Atom)
        }
        _ => {
            let kids: Vec<Piece> = children(e).into_iter().map(|c| inline(c, nm)).collect();
            compose(e, &kids, nm.lib)
        }
    }
}

/// Statement emitter for the loop style.
pub(crate) struct Loops {
    pub lines: Vec<String>,
    pub counter: usize,
    pub prefix: String,
}

impl Loops {
    pub fn new(prefix: &str) -> Self {
        Loops {
            lines: Vec::new(),
            counter: 0,
            prefix: prefix.to_string(),
        }
    }

    fn push(&mut self, depth: usize, line: String) {
        self.lines.push(format!("{}{line}", "    ".repeat(depth)));
    }

    /// Prints `e` at loop depth `depth`, emitting accumulators for reductions.
    pub fn expr(&mut self, e: &Expr, nm: Names, depth: usize) -> Piece {
        if let Some(p) = leaf_scalar(e, nm) {
            return p;
        }
        match e {
            Expr::Sum(v, lo, hi, body) | Expr::Prod(v, lo, hi, body) => {
                self.counter += 1;
                let is_sum = matches!(e, Expr::Sum(..));
                let acc = format!("{}{}", if is_sum { "s" } else { "p" }, self.counter);
                let acc = if self.prefix.is_empty() { acc } else { format!("{acc}_{}", self.prefix) };
                self.push(depth, format!("{acc} = {}", if is_sum { "0.0" } else { "1.0" }));
                self.push(
                    depth,
                    format!("for {} in range({}, {}):", v.name(), bound(*lo, nm), bound_excl(*hi, nm)),
                );
                let b = self.expr(body, nm, depth + 1);
                let op = if is_sum { "+=" } else { "*=" };
                self.push(depth + 1, format!("{acc} {op} {}", b.0));
                (acc, Prec::Atom)
            }
            _ => {
                let kids: Vec<Piece> = children(e).into_iter().map(|c| self.expr(c, nm, depth)).collect();
                compose(e, &kids, nm.lib)
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Bind {
    /// 1-D axis over `lo..=hi`.
    Outer(i64, Bound),
    /// Column axis over a literal range.
    Inner(i64, i64),
}

fn find(binds: &[(Var, Bind)], v: Var) -> Option<Bind> {
    binds.iter().rev().find(|(w, _)| *w == v).map(|(_, b)| *b)
}

/// `base[s:e]` for element offset `off` over an outer range.
fn slice(base: &str, lo: i64, hi: Bound, off: i64) -> Option<String> {
    let start = lo - 1 + off;
    if start < 0 {
        return None;
    }
    let end = match hi {
        Bound::Dim(b) if b + off == 0 => String::new(),
        Bound::Dim(b) if b + off < 0 => (b + off).to_string(),
        Bound::Lit(c) => (c + off).to_string(),
        _ => return None,
    };
    Some(if start == 0 && end.is_empty() {
        base.to_string()
    } else {
        format!("{base}[{}:{end}]", if start == 0 { String::new() } else { start.to_string() })
    })
}

fn count(lo: Bound, hi: Bound, nm: Names) -> Option<Piece> {
    match (lo, hi) {
        (Bound::Lit(a), Bound::Lit(b)) => Some(num((b - a + 1) as f64)),
        (Bound::Lit(a), Bound::Dim(b)) => {
            let k = b - a + 1;
            Some(if k == 0 {
                (nm.n.to_string(), Prec::Atom)
            } else {
                (offset(nm.n, k), Prec::Add)
            })
        }
        _ => None,
    }
}

/// Vectorized numpy expression; `None` when the shape cannot be expressed
/// with slices and broadcasting.
fn vector(e: &Expr, nm: Names, binds: &[(Var, Bind)]) -> Option<Piece> {
    Some(match e {
        Expr::Num(_) | Expr::Pi | Expr::E | Expr::Dim => leaf_scalar(e, nm)?,
        Expr::ElemAt(_) => leaf_scalar(e, nm)?,
        Expr::Idx(v) => match find(binds, *v)? {
            Bind::Outer(lo, hi) => (format!("np.arange({lo}, {})", bound_excl(hi, nm)), Prec::Atom),
            Bind::Inner(lo, hi) => (format!("np.arange({lo}, {})[:, None]", hi + 1), Prec::Atom),
        },
        Expr::Elem(v, off) => match find(binds, *v)? {
            Bind::Outer(lo, hi) => (slice(nm.z, lo, hi, *off)?, Prec::Atom),
            Bind::Inner(..) => return None,
        },
        Expr::Data(name, v) => match find(binds, *v)? {
            Bind::Outer(lo, hi) => (slice(name, lo, hi, 0)?, Prec::Atom),
            Bind::Inner(..) => return None,
        },
        Expr::Sum(v, lo, hi, body) | Expr::Prod(v, lo, hi, body) => {
            let is_sum = matches!(e, Expr::Sum(..));
            if !body.uses_var(*v) {
                let c = count(*lo, *hi, nm)?;
                let b = vector(body, nm, binds)?;
                return Some(if is_sum {
                    (format!("{} * {}", wrap(&c, Prec::Mul), wrap(&b, Prec::Mul)), Prec::Mul)
                } else {
                    (format!("{} ** {}", wrap(&b, Prec::Atom), wrap(&c, Prec::Atom)), Prec::Pow)
                });
            }
            let red = if is_sum { "np.sum" } else { "np.prod" };
            match (binds.last().map(|b| b.1), *lo, *hi) {
                (None, Bound::Lit(a), hi @ (Bound::Lit(_) | Bound::Dim(_))) => {
                    let mut inner = binds.to_vec();
                    inner.push((*v, Bind::Outer(a, hi)));
                    let b = vector(body, nm, &inner)?;
                    (format!("{red}({})", b.0), Prec::Atom)
                }
                (Some(Bind::Outer(..)), Bound::Lit(a), Bound::Lit(b)) if binds.len() == 1 => {
                    let mut inner = binds.to_vec();
                    inner.push((*v, Bind::Inner(a, b)));
                    let b = vector(body, nm, &inner)?;
                    (format!("{red}({}, axis=0)", b.0), Prec::Atom)
                }
                (Some(Bind::Outer(olo, ohi)), Bound::Lit(1), Bound::Var(w))
                    if is_sum && binds.len() == 1 && w == binds[0].0 && **body == Expr::Elem(*v, 0) =>
                {
                    (slice(&format!("np.cumsum({})", nm.z), olo, ohi, 0)?, Prec::Atom)
                }
                _ => return None,
            }
        }
        _ => {
            let mut kids = Vec::new();
            for c in children(e) {
                kids.push(vector(c, nm, binds)?);
            }
            compose(e, &kids, "np")
        }
    })
}

/// Numpy rendering with comprehension fallback for irregular reductions.
pub(crate) fn vectorized(e: &Expr, nm: Names) -> Piece {
    match e {
        Expr::Sum(..) | Expr::Prod(..) => vector(e, nm, &[]).unwrap_or_else(|| inline(e, nm)),
        _ if children(e).is_empty() => leaf_scalar(e, nm).expect("leaf outside a reduction"),
        _ => {
            let kids: Vec<Piece> = children(e).into_iter().map(|c| vectorized(c, nm)).collect();
            compose(e, &kids, "np")
        }
    }
}

/// Objective and constraint source for the three Python styles.
pub(crate) struct Source {
    pub objective: String,
    pub constraints: Option<String>,
}

fn component_label(c: &ComponentSpec) -> String {
    let t = &c.transform;
    let mut s = String::new();
    if t.shift.iter().any(|v| *v != 0.0) {
        s.push_str("shifted ");
    }
    if t.rotation.is_some() {
        s.push_str("rotated ");
    }
    s.push_str(c.function.display_name());
    s
}

fn header_comment(inst: &ProblemInstance) -> String {
    match inst.paradigm {
        Paradigm::Single => format!("# {}-dimensional {} problem", inst.dim, component_label(&inst.components[0]).to_lowercase()),
        Paradigm::Composition => format!(
            "# {}-dimensional weighted composition of {} functions",
            inst.dim,
            inst.components.len()
        ),
        Paradigm::Hybrid => format!(
            "# {}-dimensional hybrid of {} functions over disjoint variable groups",
            inst.dim,
            inst.components.len()
        ),
    }
}

fn combine(inst: &ProblemInstance, vals: &[String]) -> String {
    let terms: Vec<String> = inst
        .components
        .iter()
        .zip(vals)
        .map(|(c, v)| match c.weight {
            Some(w) => format!("{} * {v}", lit(w)),
            None => v.clone(),
        })
        .collect();
    terms.join(" + ")
}

fn constraint_names(inst: &ProblemInstance) -> Vec<String> {
    let (mut g, mut h) = (0, 0);
    inst.constraints
        .iter()
        .map(|c| match c.kind {
            ConstraintKind::Inequality => {
                g += 1;
                format!("g{g}")
            }
            ConstraintKind::Equality => {
                h += 1;
                format!("h{h}")
            }
        })
        .collect()
}

fn constraint_note(inst: &ProblemInstance) -> String {
    let has_h = inst.constraints.iter().any(|c| c.kind == ConstraintKind::Equality);
    let mut s = String::from("# feasible when every g(x) <= 0");
    if has_h {
        s.push_str(" and every |h(x)| <= 1e-4");
    }
    s
}

// ---------- loop style ----------

fn loop_transform(out: &mut String, k: usize, c: &ComponentSpec, in_name: &str, n: &str) {
    let t: &TransformSpec = &c.transform;
    let z = format!("z{k}");
    let _ = writeln!(out, "    o{k} = {}", list(&t.shift));
    if let Some(m) = &t.rotation {
        let _ = writeln!(out, "    M{k} = {}", matrix(m, "    "));
        let _ = writeln!(out, "    {z} = [0.0] * {n}");
        let _ = writeln!(out, "    for r in range({n}):");
        let _ = writeln!(out, "        y = {in_name}[r] - o{k}[r]");
        let _ = writeln!(out, "        for c in range({n}):");
        let _ = writeln!(out, "            {z}[c] += M{k}[r][c] * y");
    } else {
        let _ = writeln!(out, "    {z} = [0.0] * {n}");
        let _ = writeln!(out, "    for r in range({n}):");
        let _ = writeln!(out, "        {z}[r] = {in_name}[r] - o{k}[r]");
    }
}

pub(crate) fn loop_style(inst: &ProblemInstance) -> Source {
    let mut out = String::new();
    let _ = writeln!(out, "{}", header_comment(inst));
    let _ = writeln!(out, "import math\n\n");
    let _ = writeln!(out, "def objective(x):");
    let _ = writeln!(out, "    D = {}", inst.dim);
    let mut vals = Vec::new();
    for (i, c) in inst.components.iter().enumerate() {
        let k = i + 1;
        let n = format!("n{k}");
        let _ = writeln!(out, "    # component {k}: {}", component_label(c).to_lowercase());
        let input = match &c.segment {
            Some(seg) => {
                let _ = writeln!(out, "    idx{k} = {:?}", seg);
                let _ = writeln!(out, "    {n} = len(idx{k})");
                let _ = writeln!(out, "    x{k} = [0.0] * {n}");
                let _ = writeln!(out, "    for r in range({n}):");
                let _ = writeln!(out, "        x{k}[r] = x[idx{k}[r]]");
                format!("x{k}")
            }
            None => {
                let _ = writeln!(out, "    {n} = D");
                "x".to_string()
            }
        };
        loop_transform(&mut out, k, c, &input, &n);
        let z = format!("z{k}");
        let nm = Names { z: &z, n: &n, lib: "math" };
        let mut lp = Loops::new(&k.to_string());
        let v = lp.expr(&c.function.expr(), nm, 1);
        for l in lp.lines {
            let _ = writeln!(out, "{l}");
        }
        let _ = writeln!(out, "    f{k} = {}", v.0);
        vals.push(format!("f{k}"));
    }
    let _ = writeln!(out, "    return {}", combine(inst, &vals));
    let constraints = constraints_loop(inst);
    Source {
        objective: out,
        constraints,
    }
}

fn constraints_loop(inst: &ProblemInstance) -> Option<String> {
    if inst.constraints.is_empty() {
        return None;
    }
    let mut out = String::new();
    let _ = writeln!(out, "{}", constraint_note(inst));
    out.push_str("import math\n");
    for (c, name) in inst.constraints.iter().zip(constraint_names(inst)) {
        let _ = writeln!(out, "\n\ndef {name}(x):");
        let _ = writeln!(out, "    D = {}", inst.dim);
        let _ = writeln!(out, "    o = {}", list(&c.shift));
        if let Some(a) = c.data() {
            let _ = writeln!(out, "    a = {}", list(a));
        }
        let _ = writeln!(out, "    y = [0.0] * D");
        let _ = writeln!(out, "    for r in range(D):");
        let _ = writeln!(out, "        y[r] = x[r] - o[r]");
        let nm = Names { z: "y", n: "D", lib: "math" };
        let mut lp = Loops::new("");
        let v = lp.expr(&c.expr("a"), nm, 1);
        for l in lp.lines {
            let _ = writeln!(out, "{l}");
        }
        let _ = writeln!(out, "    return {}", v.0);
    }
    Some(out)
}

// ---------- vector style ----------

pub(crate) fn vector_style(inst: &ProblemInstance) -> Source {
    let mut out = String::new();
    let _ = writeln!(out, "{}", header_comment(inst));
    let _ = writeln!(out, "import numpy as np\n\n");
    let _ = writeln!(out, "def objective(x):");
    let _ = writeln!(out, "    x = np.asarray(x, dtype=float)");
    let mut vals = Vec::new();
    for (i, c) in inst.components.iter().enumerate() {
        let k = i + 1;
        let t = &c.transform;
        let input = match &c.segment {
            Some(seg) => format!("x[{:?}]", seg),
            None => "x".to_string(),
        };
        let _ = writeln!(out, "    o{k} = np.array({})", list(&t.shift));
        match &t.rotation {
            Some(m) => {
                let _ = writeln!(out, "    M{k} = np.array({})", matrix(m, "    "));
                let _ = writeln!(out, "    z{k} = ({input} - o{k}) @ M{k}");
            }
            None => {
                let _ = writeln!(out, "    z{k} = {input} - o{k}");
            }
        }
        let z = format!("z{k}");
        let n = format!("z{k}.size");
        let nm = Names { z: &z, n: &n, lib: "np" };
        let v = vectorized(&c.function.expr(), nm);
        let _ = writeln!(out, "    f{k} = {}", v.0);
        vals.push(format!("f{k}"));
    }
    let _ = writeln!(out, "    return float({})", combine(inst, &vals));
    Source {
        objective: out,
        constraints: constraints_vector(inst),
    }
}

fn constraints_vector(inst: &ProblemInstance) -> Option<String> {
    if inst.constraints.is_empty() {
        return None;
    }
    let mut out = String::new();
    let _ = writeln!(out, "{}", constraint_note(inst));
    out.push_str("import numpy as np\n");
    for (c, name) in inst.constraints.iter().zip(constraint_names(inst)) {
        let _ = writeln!(out, "\n\ndef {name}(x):");
        let _ = writeln!(out, "    y = np.asarray(x, dtype=float) - np.array({})", list(&c.shift));
        if let Some(a) = c.data() {
            let _ = writeln!(out, "    a = np.array({})", list(a));
        }
        let nm = Names { z: "y", n: "y.size", lib: "np" };
        let v = vectorized(&c.expr("a"), nm);
        let _ = writeln!(out, "    return float({})", v.0);
    }
    Some(out)
}

// ---------- modular style ----------

fn helper_terms(e: &Expr) -> Vec<(bool, &Expr)> {
    match e {
        Expr::Add(ts) if ts.len() > 1 => ts.iter().map(|(n, t)| (*n, t)).collect(),
        _ => vec![(false, e)],
    }
}

fn helper_body(out: &mut String, e: &Expr, nm: Names) {
    let terms = helper_terms(e);
    if terms.len() == 1 {
        let _ = writeln!(out, "    return {}", vectorized(e, nm).0);
        return;
    }
    let mut ret = String::new();
    for (k, (neg, t)) in terms.iter().enumerate() {
        let p = vectorized(t, nm);
        let name = format!("term{}", k + 1);
        let _ = writeln!(out, "    {name} = {}", p.0);
        match (k, neg) {
            (0, false) => ret.push_str(&name),
            (0, true) => ret.push_str(&format!("-{name}")),
            (_, false) => ret.push_str(&format!(" + {name}")),
            (_, true) => ret.push_str(&format!(" - {name}")),
        }
    }
    let _ = writeln!(out, "    return {ret}");
}

pub(crate) fn modular_style(inst: &ProblemInstance) -> Source {
    let mut out = String::new();
    let _ = writeln!(out, "{}", header_comment(inst));
    let _ = writeln!(out, "import numpy as np\n\n");
    let _ = writeln!(out, "def shift_rotate(x, o, M=None):");
    let _ = writeln!(out, "    y = np.asarray(x, dtype=float) - np.asarray(o, dtype=float)");
    let _ = writeln!(out, "    if M is None:");
    let _ = writeln!(out, "        return y");
    let _ = writeln!(out, "    return y @ np.asarray(M, dtype=float)");
    let mut seen = Vec::new();
    for c in &inst.components {
        if seen.contains(&c.function) {
            continue;
        }
        seen.push(c.function);
        let _ = writeln!(out, "\n\ndef {}(z):", c.function.name());
        let _ = writeln!(out, "    D = z.size");
        let nm = Names { z: "z", n: "D", lib: "np" };
        helper_body(&mut out, &c.function.expr(), nm);
    }
    for (i, c) in inst.components.iter().enumerate() {
        let k = i + 1;
        let _ = writeln!(out, "\n\nSHIFT_{k} = {}", list(&c.transform.shift));
        if let Some(m) = &c.transform.rotation {
            let _ = writeln!(out, "ROTATION_{k} = {}", matrix(m, ""));
        }
        if let Some(seg) = &c.segment {
            let _ = writeln!(out, "GROUP_{k} = {:?}", seg);
        }
    }
    let _ = writeln!(out, "\n\ndef objective(x):");
    let _ = writeln!(out, "    x = np.asarray(x, dtype=float)");
    let mut vals = Vec::new();
    for (i, c) in inst.components.iter().enumerate() {
        let k = i + 1;
        let input = if c.segment.is_some() { format!("x[GROUP_{k}]") } else { "x".into() };
        let rot = if c.transform.rotation.is_some() { format!(", ROTATION_{k}") } else { String::new() };
        let _ = writeln!(out, "    z{k} = shift_rotate({input}, SHIFT_{k}{rot})");
        let _ = writeln!(out, "    f{k} = {}(z{k})", c.function.name());
        vals.push(format!("f{k}"));
    }
    let _ = writeln!(out, "    return float({})", combine(inst, &vals));
    Source {
        objective: out,
        constraints: constraints_modular(inst),
    }
}

fn constraints_modular(inst: &ProblemInstance) -> Option<String> {
    if inst.constraints.is_empty() {
        return None;
    }
    let mut out = String::new();
    let _ = writeln!(out, "{}", constraint_note(inst));
    out.push_str("import numpy as np\n");
    let _ = writeln!(out, "\n\nCENTRE = {}", list(&inst.constraints[0].shift));
    let shared = inst.constraints.iter().all(|c| c.shift == inst.constraints[0].shift);
    for (c, name) in inst.constraints.iter().zip(constraint_names(inst)) {
        let _ = writeln!(out, "\n\ndef {name}(x):");
        if shared {
            let _ = writeln!(out, "    y = np.asarray(x, dtype=float) - np.asarray(CENTRE)");
        } else {
            let _ = writeln!(out, "    y = np.asarray(x, dtype=float) - np.array({})", list(&c.shift));
        }
        let _ = writeln!(out, "    D = y.size");
        if let Some(a) = c.data() {
            let _ = writeln!(out, "    a = np.array({})", list(a));
        }
        let nm = Names { z: "y", n: "D", lib: "np" };
        let _ = writeln!(out, "    return float({})", vectorized(&c.expr("a"), nm).0);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{sum_all, elem};

    const NP: Names = Names { z: "z", n: "n", lib: "np" };

    #[test]
    fn precedence_and_literals() {
        let e = crate::expr::signed(vec![
            (true, crate::expr::sq(elem(Var::I))),
            (true, crate::expr::add(vec![Expr::Num(1.0), Expr::Num(-2.5)])),
        ]);
        let p = inline(&e, Names { z: "z", n: "n", lib: "math" });
        assert_eq!(p.0, "-z[i - 1] ** 2.0 - (1.0 + -2.5)");
        assert_eq!(lit(1e-20), "1e-20");
        assert_eq!(lit(1e6), "1000000.0");
    }

    #[test]
    fn vector_slices() {
        let e = crate::expr::sum(
            Var::I,
            Bound::Lit(1),
            Bound::Dim(-1),
            crate::expr::mul(vec![Expr::Elem(Var::I, 1), elem(Var::I)]),
        );
        assert_eq!(vectorized(&e, NP).0, "np.sum(z[1:] * z[:-1])");
        let s = sum_all(crate::expr::sq(elem(Var::I)));
        assert_eq!(vectorized(&s, NP).0, "np.sum(z ** 2.0)");
    }

    #[test]
    fn cumulative_sum_uses_cumsum() {
        let e = sum_all(crate::expr::sq(crate::expr::sum(
            Var::J,
            Bound::Lit(1),
            Bound::Var(Var::I),
            elem(Var::J),
        )));
        assert_eq!(vectorized(&e, NP).0, "np.sum(np.cumsum(z) ** 2.0)");
    }

    #[test]
    fn constant_body_is_counted() {
        let e = sum_all(Expr::Num(10.0));
        assert_eq!(vectorized(&e, NP).0, "n * 10.0");
    }
}
