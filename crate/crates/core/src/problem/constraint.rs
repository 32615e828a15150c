//! Constraint templates. Every template acts on `y = x − shift`.

use serde::{Deserialize, Serialize};

use crate::expr::{call, elem, mul, num, pow, prod, signed, sq, sum, sum_all, Bound, Expr, Func, Var};

/// Feasibility tolerance for equality constraints.
pub const EQ_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Inequality,
    Equality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "snake_case")]
pub enum ConstraintTemplate {
    /// `Σ a_i y_i − b ≤ 0`
    Linear { coeffs: Vec<f64>, bound: f64 },
    /// `Σ y_i² − r² ≤ 0`
    Ball { radius: f64 },
    /// `Σ_i (Σ_{j≤i} y_j)² = 0`
    CumulativeSum,
    /// `Σ_{i<D} (y_i² − y_{i+1})² = 0`
    RosenbrockChain,
    /// `Π y_i − c = 0`
    Product { target: f64 },
    /// `Σ sin(y_i) − b ≤ 0`
    Sinusoid { bound: f64 },
}

impl ConstraintTemplate {
    pub const NAMES: [&'static str; 6] = [
        "linear",
        "ball",
        "cumulative_sum",
        "rosenbrock_chain",
        "product",
        "sinusoid",
    ];

    pub fn kind(&self) -> ConstraintKind {
        match self {
            ConstraintTemplate::Linear { .. }
            | ConstraintTemplate::Ball { .. }
            | ConstraintTemplate::Sinusoid { .. } => ConstraintKind::Inequality,
            _ => ConstraintKind::Equality,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConstraintTemplate::Linear { .. } => "linear",
            ConstraintTemplate::Ball { .. } => "ball",
            ConstraintTemplate::CumulativeSum => "cumulative_sum",
            ConstraintTemplate::RosenbrockChain => "rosenbrock_chain",
            ConstraintTemplate::Product { .. } => "product",
            ConstraintTemplate::Sinusoid { .. } => "sinusoid",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    #[serde(flatten)]
    pub template: ConstraintTemplate,
    pub shift: Vec<f64>,
}

impl ConstraintSpec {
    pub fn new(template: ConstraintTemplate, shift: Vec<f64>) -> Self {
        ConstraintSpec {
            kind: template.kind(),
            template,
            shift,
        }
    }

    /// Raw constraint value: `g(x)` for inequalities, `h(x)` for equalities.
    pub fn value(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().zip(&self.shift).map(|(a, o)| a - o).collect();
        match &self.template {
            ConstraintTemplate::Linear { coeffs, bound } => {
                y.iter().zip(coeffs).map(|(a, b)| b * a).sum::<f64>() - bound
            }
            ConstraintTemplate::Ball { radius } => {
                y.iter().map(|v| v * v).sum::<f64>() - radius * radius
            }
            ConstraintTemplate::CumulativeSum => {
                let mut run = 0.0;
                let mut acc = 0.0;
                for v in &y {
                    run += v;
                    acc += run * run;
                }
                acc
            }
            ConstraintTemplate::RosenbrockChain => y
                .windows(2)
                .map(|w| {
                    let d = w[0] * w[0] - w[1];
                    d * d
                })
                .sum(),
            ConstraintTemplate::Product { target } => y.iter().product::<f64>() - target,
            ConstraintTemplate::Sinusoid { bound } => {
                y.iter().map(|v| v.sin()).sum::<f64>() - bound
            }
        }
    }

    /// Contribution to the total violation.
    pub fn violation(&self, value: f64) -> f64 {
        match self.kind {
            ConstraintKind::Inequality => value.max(0.0),
            ConstraintKind::Equality => (value.abs() - EQ_TOLERANCE).max(0.0),
        }
    }

    /// Symbolic left-hand side over `y` (the right-hand side is zero).
    ///
    /// Linear coefficients are referenced as data vector `coeff_name`.
    pub fn expr(&self, coeff_name: &str) -> Expr {
        let y = || elem(Var::I);
        match &self.template {
            ConstraintTemplate::Linear { bound, .. } => signed(vec![
                (
                    false,
                    sum_all(mul(vec![Expr::Data(coeff_name.to_string(), Var::I), y()])),
                ),
                (true, num(*bound)),
            ]),
            ConstraintTemplate::Ball { radius } => {
                signed(vec![(false, sum_all(sq(y()))), (true, pow(num(*radius), num(2.0)))])
            }
            ConstraintTemplate::CumulativeSum => sum_all(sq(sum(
                Var::J,
                Bound::Lit(1),
                Bound::Var(Var::I),
                elem(Var::J),
            ))),
            ConstraintTemplate::RosenbrockChain => sum(
                Var::I,
                Bound::Lit(1),
                Bound::Dim(-1),
                sq(signed(vec![(false, sq(y())), (true, Expr::Elem(Var::I, 1))])),
            ),
            ConstraintTemplate::Product { target } => signed(vec![
                (false, prod(Var::I, Bound::Lit(1), Bound::Dim(0), y())),
                (true, num(*target)),
            ]),
            ConstraintTemplate::Sinusoid { bound } => signed(vec![
                (false, sum_all(call(Func::Sin, y()))),
                (true, num(*bound)),
            ]),
        }
    }

    pub fn data(&self) -> Option<&[f64]> {
        match &self.template {
            ConstraintTemplate::Linear { coeffs, .. } => Some(coeffs),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Env;

    fn all_templates(d: usize) -> Vec<ConstraintSpec> {
        let shift: Vec<f64> = (0..d).map(|i| 0.5 * i as f64 - 1.0).collect();
        vec![
            ConstraintTemplate::Linear {
                coeffs: (0..d).map(|i| (i as f64 * 0.37).sin()).collect(),
                bound: 1.5,
            },
            ConstraintTemplate::Ball { radius: 2.5 },
            ConstraintTemplate::CumulativeSum,
            ConstraintTemplate::RosenbrockChain,
            ConstraintTemplate::Product { target: 0.25 },
            ConstraintTemplate::Sinusoid { bound: 0.5 },
        ]
        .into_iter()
        .map(|t| ConstraintSpec::new(t, shift.clone()))
        .collect()
    }

    #[test]
    fn expression_matches_value() {
        let x: Vec<f64> = (0..6).map(|i| (i as f64 * 1.3).cos() * 2.0).collect();
        for c in all_templates(6) {
            let y: Vec<f64> = x.iter().zip(&c.shift).map(|(a, o)| a - o).collect();
            let mut env = Env::default();
            if let Some(d) = c.data() {
                env.data.insert("a".into(), d);
            }
            let sym = c.expr("a").eval(&y, &env);
            let v = c.value(&x);
            assert!((sym - v).abs() <= 1e-12 * v.abs().max(1.0), "{}", c.template.name());
        }
    }

    #[test]
    fn centre_is_feasible_except_product() {
        for c in all_templates(4) {
            let v = c.value(&c.shift);
            match c.template {
                ConstraintTemplate::Product { target } => assert_eq!(v, -target),
                _ => assert_eq!(c.violation(v), 0.0, "{}", c.template.name()),
            }
        }
    }

    #[test]
    fn equality_tolerance() {
        let c = ConstraintSpec::new(ConstraintTemplate::CumulativeSum, vec![0.0; 2]);
        assert_eq!(c.violation(5e-5), 0.0);
        assert!((c.violation(2e-4) - 1e-4).abs() < 1e-18);
        assert!((c.violation(-2e-4) - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn serde_shape_is_flat() {
        let c = ConstraintSpec::new(ConstraintTemplate::Ball { radius: 1.0 }, vec![0.0]);
        let s = crate::jsonl::to_canonical_string(&c).unwrap();
        assert_eq!(s, r#"{"kind":"inequality","radius":1.0,"shift":[0.0],"template":"ball"}"#);
        let back: ConstraintSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
