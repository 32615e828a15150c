//! Prompt and answer rendering.
//!
//! A prompt is assembled from fixed sections in this order: role header,
//! problem statement, objective code block, constraints block (only for
//! constrained instances), bounds and dimension line, budget line, output
//! instruction. Code blocks are fenced with [`FENCE`] followed by the
//! language tag so the block can be cut out verbatim.

mod answer;
mod latex;
mod python;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use answer::answer_code;

use crate::bench::KnowledgeEntry;
use crate::error::{Error, Result};
use crate::optim::{Configuration, OptimizerId};
use crate::problem::{Paradigm, ProblemInstance};

/// Version tag of the prompt wording below.
pub const PROMPT_VERSION: &str = "optforge-prompt/1";

pub const FENCE: &str = "```";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum WritingStyle {
    PY_LOOP,
    PY_VECTOR,
    PY_MODULAR,
    TEX_CANONICAL,
    TEX_COMMUTED,
    TEX_FACTORED,
}

impl WritingStyle {
    pub const ALL: [WritingStyle; 6] = [
        WritingStyle::PY_LOOP,
        WritingStyle::PY_VECTOR,
        WritingStyle::PY_MODULAR,
        WritingStyle::TEX_CANONICAL,
        WritingStyle::TEX_COMMUTED,
        WritingStyle::TEX_FACTORED,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WritingStyle::PY_LOOP => "PY_LOOP",
            WritingStyle::PY_VECTOR => "PY_VECTOR",
            WritingStyle::PY_MODULAR => "PY_MODULAR",
            WritingStyle::TEX_CANONICAL => "TEX_CANONICAL",
            WritingStyle::TEX_COMMUTED => "TEX_COMMUTED",
            WritingStyle::TEX_FACTORED => "TEX_FACTORED",
        }
    }

    pub fn is_python(self) -> bool {
        matches!(self, WritingStyle::PY_LOOP | WritingStyle::PY_VECTOR | WritingStyle::PY_MODULAR)
    }

    /// Language tag of the fenced code blocks.
    pub fn fence_tag(self) -> &'static str {
        if self.is_python() {
            "python"
        } else {
            "latex"
        }
    }
}

impl fmt::Display for WritingStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WritingStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WritingStyle::ALL
            .into_iter()
            .find(|w| w.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::NotFound(format!("writing style {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptDoc {
    pub text: String,
    pub style: WritingStyle,
    pub instance_id: String,
    pub fe_budget: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnswerDoc {
    pub code_text: String,
    pub optimizer: OptimizerId,
    pub config: Configuration,
    pub line_count: usize,
}

struct Rendered {
    objective: String,
    constraints: Option<String>,
}

fn render_parts(inst: &ProblemInstance, style: WritingStyle, seed: u64) -> Rendered {
    let (objective, constraints) = match style {
        WritingStyle::PY_LOOP => split_py(python::loop_style(inst)),
        WritingStyle::PY_VECTOR => split_py(python::vector_style(inst)),
        WritingStyle::PY_MODULAR => split_py(python::modular_style(inst)),
        WritingStyle::TEX_CANONICAL => split_tex(latex::instance(inst, latex::Variant::Canonical, seed)),
        WritingStyle::TEX_COMMUTED => split_tex(latex::instance(inst, latex::Variant::Commuted, seed)),
        WritingStyle::TEX_FACTORED => split_tex(latex::instance(inst, latex::Variant::Factored, seed)),
    };
    Rendered { objective, constraints }
}

fn split_py(s: python::Source) -> (String, Option<String>) {
    (s.objective, s.constraints)
}

fn split_tex(s: latex::Source) -> (String, Option<String>) {
    (s.objective, s.constraints)
}

/// Objective description in `style`. Python styles define `objective(x)`;
/// LaTeX styles define `F(x)` with its data.
pub fn render_objective(inst: &ProblemInstance, style: WritingStyle, seed: u64) -> String {
    render_parts(inst, style, seed).objective
}

/// Constraint definitions in `style`, `None` for unconstrained instances.
pub fn render_constraints(inst: &ProblemInstance, style: WritingStyle, seed: u64) -> Option<String> {
    render_parts(inst, style, seed).constraints
}

fn fenced(tag: &str, body: &str) -> String {
    let body = body.trim_end_matches('\n');
    format!("{FENCE}{tag}\n{body}\n{FENCE}\n")
}

fn statement(inst: &ProblemInstance, style: WritingStyle) -> String {
    let kind = match inst.paradigm {
        Paradigm::Single => "single-objective".to_string(),
        Paradigm::Composition => format!("composition of {} basic functions", inst.components.len()),
        Paradigm::Hybrid => format!("hybrid of {} basic functions", inst.components.len()),
    };
    let constrained = if inst.is_constrained() {
        match inst.constraints.len() {
            1 => " subject to 1 constraint".to_string(),
            n => format!(" subject to {n} constraints"),
        }
    } else {
        String::new()
    };
    let lang = if style.is_python() { "Python" } else { "LaTeX" };
    format!(
        "Minimize the {}-dimensional {kind} problem below{constrained}. The objective is given in {lang}.\n",
        inst.dim
    )
}

fn bounds_line(inst: &ProblemInstance) -> String {
    let (lo, hi) = inst.bounds[0];
    if inst.bounds.iter().all(|b| *b == (lo, hi)) {
        format!("D = {}; every variable lies in [{}, {}].\n", inst.dim, python::lit(lo), python::lit(hi))
    } else {
        let parts: Vec<String> = inst
            .bounds
            .iter()
            .map(|(a, b)| format!("[{}, {}]", python::lit(*a), python::lit(*b)))
            .collect();
        format!("D = {}; variable bounds: {}.\n", inst.dim, parts.join(", "))
    }
}

/// Full prompt text for one instance and style. Pure in its arguments.
pub fn render_prompt(inst: &ProblemInstance, style: WritingStyle, seed: u64) -> PromptDoc {
    let parts = render_parts(inst, style, seed);
    let tag = style.fence_tag();
    let mut text = String::new();
    text.push_str("You are an expert in numerical optimization. Recommend an optimizer for the problem below.\n\n");
    text.push_str(&statement(inst, style));
    text.push('\n');
    text.push_str("Objective:\n");
    text.push_str(&fenced(tag, &parts.objective));
    if let Some(c) = &parts.constraints {
        text.push('\n');
        text.push_str("Constraints:\n");
        text.push_str(&fenced(tag, c));
    }
    text.push('\n');
    text.push_str(&bounds_line(inst));
    text.push_str(&format!("The optimizer may use at most {} function evaluations.\n", inst.fe_budget));
    text.push('\n');
    text.push_str(
        "Output a complete Python program implementing a competent configured optimizer for this problem.\n",
    );
    PromptDoc {
        text,
        style,
        instance_id: inst.id.clone(),
        fe_budget: inst.fe_budget,
    }
}

/// Extracts the first fenced block with language `tag` from `text`.
pub fn extract_block<'a>(text: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("{FENCE}{tag}\n");
    let a = text.find(&open)? + open.len();
    let b = text[a..].find(&format!("\n{FENCE}"))?;
    Some(&text[a..a + b])
}

/// Answer program for the optimizer and configuration of one knowledge entry.
pub fn emit_answer(entry: &KnowledgeEntry) -> Result<AnswerDoc> {
    if entry.degenerate {
        return Err(Error::DegenerateEntry(entry.instance_id.clone()));
    }
    emit_answer_for(entry.best_optimizer, &entry.best_config)
}

pub fn emit_answer_for(optimizer: OptimizerId, config: &Configuration) -> Result<AnswerDoc> {
    let code_text = answer_code(optimizer, config)?;
    Ok(AnswerDoc {
        line_count: code_text.lines().count(),
        code_text,
        optimizer,
        config: config.clone(),
    })
}
