//! Error rate, recovery cost, optimization performance and token overhead
//! of generated optimizer programs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bench::descent;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Ok,
    Error,
}

/// Result of executing one generated program on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub instance_id: String,
    pub run_index: usize,
    pub status: OutcomeStatus,
    #[serde(default)]
    pub f0: Option<f64>,
    #[serde(default)]
    pub f_best: Option<f64>,
    pub f_star_ref: f64,
}

/// A program that raised an error and the text it was repaired into.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairRecord {
    pub original: String,
    pub repaired: String,
}

impl RepairRecord {
    /// Fraction of the original lines that had to change.
    pub fn ratio(&self) -> Result<f64> {
        let changed = line_diff(&self.original, &self.repaired)?;
        Ok(changed as f64 / self.original.lines().count() as f64)
    }
}

/// How per-run performance is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerfMode {
    /// Achieved share of the possible improvement, higher is better.
    #[default]
    Descent,
    /// Remaining normalized gap `1 − descent`, lower is better.
    Gap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub err_rate: f64,
    pub recovery_cost: f64,
    /// Set when no repair records were given and `recovery_cost` defaulted to 0.
    pub recovery_undefined: bool,
    pub perf: f64,
    pub perf_mode: PerfMode,
    pub comp_tokens: f64,
}

pub fn error_rate(outcomes: &[EvalOutcome], n_instances: usize, runs: usize) -> Result<f64> {
    if outcomes.len() != n_instances * runs || outcomes.is_empty() {
        return Err(invalid(format!(
            "expected {n_instances} x {runs} outcomes, got {}",
            outcomes.len()
        )));
    }
    let errors = outcomes.iter().filter(|o| o.status == OutcomeStatus::Error).count();
    Ok(errors as f64 / (n_instances * runs) as f64)
}

/// Lines of `original` deleted or modified under a longest common
/// subsequence alignment with `repaired`.
pub fn line_diff(original: &str, repaired: &str) -> Result<usize> {
    let a: Vec<&str> = original.lines().collect();
    if a.is_empty() {
        return Err(invalid("original program is empty"));
    }
    let b: Vec<&str> = repaired.lines().collect();
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in &a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(a.len() - prev[b.len()])
}

/// Mean repair ratio. Returns `(0, true)` for an empty input.
pub fn recovery_cost(records: &[RepairRecord]) -> Result<(f64, bool)> {
    if records.is_empty() {
        log::warn!("no repair records: recovery cost is undefined and reported as 0");
        return Ok((0.0, true));
    }
    let mut total = 0.0;
    for r in records {
        total += r.ratio()?;
    }
    Ok((total / records.len() as f64, false))
}

/// Descent of a single outcome; error runs score 0.
pub fn outcome_descent(o: &EvalOutcome) -> Result<f64> {
    if o.status == OutcomeStatus::Error {
        return Ok(0.0);
    }
    let (f0, fb) = match (o.f0, o.f_best) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::DataIntegrity(format!(
                "{} run {}: ok outcome without f0 and f_best",
                o.instance_id, o.run_index
            )))
        }
    };
    if f0 < o.f_star_ref {
        return Err(Error::DataIntegrity(format!(
            "{} run {}: f0 {f0} lies below the reference optimum {}",
            o.instance_id, o.run_index, o.f_star_ref
        )));
    }
    Ok(descent(f0, fb, o.f_star_ref))
}

pub fn optimization_performance(outcomes: &[EvalOutcome], mode: PerfMode) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(invalid("no outcomes"));
    }
    let mut total = 0.0;
    for o in outcomes {
        total += outcome_descent(o)?;
    }
    let d = total / outcomes.len() as f64;
    Ok(match mode {
        PerfMode::Descent => d,
        PerfMode::Gap => 1.0 - d,
    })
}

/// Runs of alphanumeric characters and underscores are one token each;
/// every other non-space character is a token of its own.
pub fn default_token_count(text: &str) -> usize {
    let mut n = 0;
    let mut in_word = false;
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            if !in_word {
                n += 1;
                in_word = true;
            }
        } else {
            in_word = false;
            if !c.is_whitespace() {
                n += 1;
            }
        }
    }
    n
}

pub fn computational_overhead<F: Fn(&str) -> usize>(
    prompts: &[String],
    answers: &[String],
    tokenizer: F,
) -> Result<f64> {
    if prompts.len() != answers.len() {
        return Err(invalid(format!("{} prompts but {} answers", prompts.len(), answers.len())));
    }
    if prompts.is_empty() {
        return Ok(0.0);
    }
    let total: usize = prompts.iter().zip(answers).map(|(p, a)| tokenizer(p) + tokenizer(a)).sum();
    Ok(total as f64 / prompts.len() as f64)
}

/// Everything needed to compute one report.
pub struct MetricsInput<'a> {
    pub outcomes: &'a [EvalOutcome],
    pub n_instances: usize,
    pub runs: usize,
    pub repairs: &'a [RepairRecord],
    pub prompts: &'a [String],
    pub answers: &'a [String],
    pub perf_mode: PerfMode,
}

pub fn compute_report(input: &MetricsInput<'_>) -> Result<MetricsReport> {
    let (recovery_cost, recovery_undefined) = recovery_cost(input.repairs)?;
    Ok(MetricsReport {
        err_rate: error_rate(input.outcomes, input.n_instances, input.runs)?,
        recovery_cost,
        recovery_undefined,
        perf: optimization_performance(input.outcomes, input.perf_mode)?,
        perf_mode: input.perf_mode,
        comp_tokens: computational_overhead(input.prompts, input.answers, default_token_count)?,
    })
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.perf_mode {
            PerfMode::Descent => "↑",
            PerfMode::Gap => "↓",
        };
        let rec = if self.recovery_undefined {
            "n/a".to_string()
        } else {
            format!("{:.2}%", 100.0 * self.recovery_cost)
        };
        writeln!(f, "{:<10} {:>10}", "Metric", "Value")?;
        writeln!(f, "{:<10} {:>10}", "Err. ↓", format!("{:.2}%", 100.0 * self.err_rate))?;
        writeln!(f, "{:<10} {:>10}", "Rec. ↓", rec)?;
        writeln!(f, "{:<10} {:>10}", format!("Perf. {arrow}"), format!("{:.2}%", 100.0 * self.perf))?;
        writeln!(f, "{:<10} {:>10}", "Comp. ↓", format!("{:.1}", self.comp_tokens))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(id: &str, f0: f64, fb: f64, fs: f64) -> EvalOutcome {
        EvalOutcome {
            instance_id: id.into(),
            run_index: 1,
            status: OutcomeStatus::Ok,
            f0: Some(f0),
            f_best: Some(fb),
            f_star_ref: fs,
        }
    }

    fn err(id: &str) -> EvalOutcome {
        EvalOutcome {
            status: OutcomeStatus::Error,
            f0: None,
            f_best: None,
            ..ok(id, 0.0, 0.0, 0.0)
        }
    }

    #[test]
    fn error_rate_counts() {
        let mut o: Vec<_> = (0..16).map(|_| ok("a", 1.0, 0.0, 0.0)).collect();
        o.extend((0..4).map(|_| err("b")));
        assert_eq!(error_rate(&o, 4, 5).unwrap(), 0.2);
        assert_eq!(error_rate(&o[..16], 4, 4).unwrap(), 0.0);
        assert_eq!(error_rate(&o[16..], 1, 4).unwrap(), 1.0);
        assert!(error_rate(&o, 4, 4).is_err());
    }

    #[test]
    fn line_diff_cases() {
        let a: String = (0..20).map(|i| format!("line {i}\n")).collect();
        assert_eq!(line_diff(&a, &a).unwrap(), 0);
        let b = a.replace("line 3\n", "fixed 3\n").replace("line 11\n", "fixed 11\n");
        assert_eq!(line_diff(&a, &b).unwrap(), 2);
        let c: String = (0..20).map(|i| format!("other {i}\n")).collect();
        assert_eq!(line_diff(&a, &c).unwrap(), 20);
        let inserted = a.replace("line 5\n", "line 5\nextra\n");
        assert_eq!(line_diff(&a, &inserted).unwrap(), 0);
        assert!(line_diff("", "x").is_err());
    }

    #[test]
    fn recovery_means_ratios() {
        let orig: String = (0..10).map(|i| format!("l{i}\n")).collect();
        let one = orig.replace("l0\n", "m0\n");
        let three = one.replace("l1\n", "m1\n").replace("l2\n", "m2\n");
        let recs = vec![
            RepairRecord { original: orig.clone(), repaired: one },
            RepairRecord { original: orig.clone(), repaired: three },
        ];
        let (r, undefined) = recovery_cost(&recs).unwrap();
        assert!((r - 0.2).abs() < 1e-15 && !undefined);
        assert_eq!(recovery_cost(&[]).unwrap(), (0.0, true));
    }

    #[test]
    fn perf_cases() {
        assert_eq!(outcome_descent(&ok("a", 100.0, 1.0, 0.0)).unwrap(), 0.99);
        assert_eq!(outcome_descent(&ok("a", 5.0, 5.0, 0.0)).unwrap(), 0.0);
        assert_eq!(outcome_descent(&ok("a", 5.0, 0.0, 0.0)).unwrap(), 1.0);
        assert_eq!(outcome_descent(&ok("a", 2.0, 2.0, 2.0)).unwrap(), 1.0);
        assert!(matches!(outcome_descent(&ok("a", -1.0, -1.0, 0.0)), Err(Error::DataIntegrity(_))));
        let o = vec![ok("a", 100.0, 1.0, 0.0), err("b")];
        assert_eq!(optimization_performance(&o, PerfMode::Descent).unwrap(), 0.495);
        assert_eq!(optimization_performance(&o, PerfMode::Gap).unwrap(), 0.505);
    }

    #[test]
    fn tokens() {
        assert_eq!(default_token_count("a b c"), 3);
        assert_eq!(default_token_count("f(x) = x**2"), 9);
        let p = vec!["a b c".to_string()];
        let a = vec!["d e".to_string()];
        assert_eq!(computational_overhead(&p, &a, default_token_count).unwrap(), 5.0);
        let e = vec![String::new()];
        assert_eq!(computational_overhead(&e, &e, default_token_count).unwrap(), 0.0);
        assert!(computational_overhead(&p, &[], default_token_count).is_err());
    }
}
