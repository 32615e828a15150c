//! One function per pipeline stage.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use optforge_core::bench::{benchmark_set, BenchSettings, KnowledgeEntry, Pool};
use optforge_core::dataset::{
    build_instruction_set, draw_batches, sampling_weights, split, BuildOptions, InstructionPair,
    InstructionSet, SamplingPlan,
};
use optforge_core::derive_seed;
use optforge_core::metrics::{compute_report, EvalOutcome, MetricsInput, RepairRecord};
use optforge_core::problem::{synthesize_set, ProblemInstance, SetParams};
use optforge_core::render::{emit_answer, render_prompt};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::io::{read_jsonl, write_json, write_jsonl};
use crate::{BenchArgs, BuildArgs, Command, MetricsArgs, PlanArgs, RenderArgs, SplitArgs, SynthArgs};

/// One drawn batch: pair indices into the planned set and their instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchLine {
    pub indices: Vec<usize>,
    pub instance_ids: Vec<String>,
}

/// Sampling plan plus the batching settings it was drawn with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    #[serde(flatten)]
    pub plan: SamplingPlan,
    pub batch_size: usize,
    pub homogeneous: bool,
    /// Contrastive margin for the warm-up stage.
    pub margin: f64,
}

pub fn run(cfg: PipelineConfig, force: bool, cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => synth(cfg, force, a),
        Command::Bench(a) => bench(cfg, force, a),
        Command::Build(a) => build(cfg, force, a),
        Command::Split(a) => split_cmd(cfg, force, a),
        Command::Plan(a) => plan(cfg, force, a),
        Command::Metrics(a) => metrics(cfg, force, a),
        Command::Render(a) => render(cfg, a),
    }
}

/// True when every output exists and the stage can be skipped.
fn up_to_date(outputs: &[&Path], force: bool) -> bool {
    if force || !outputs.iter().all(|p| p.exists()) {
        return false;
    }
    for p in outputs {
        eprintln!("{} exists, skipping (use --force to overwrite)", p.display());
    }
    true
}

fn path(cfg: &PipelineConfig, p: &Path) -> PathBuf {
    cfg.paths.resolve(p)
}

fn synth(mut cfg: PipelineConfig, force: bool, a: SynthArgs) -> Result<()> {
    if let Some(n) = a.count_nc {
        cfg.n_unconstrained = n;
    }
    if let Some(n) = a.count_c {
        cfg.n_constrained = n;
    }
    if let Some(d) = a.dmin {
        cfg.dim_range.0 = d;
    }
    if let Some(d) = a.dmax {
        cfg.dim_range.1 = d;
    }
    if let Some(k) = a.kmin {
        cfg.k_range.0 = k;
    }
    if let Some(k) = a.kmax {
        cfg.k_range.1 = k;
    }
    if let Some(b) = a.fe_budget {
        cfg.fe_budget = b;
    }
    if a.no_rotate {
        cfg.rotate = false;
    }
    let out = path(&cfg, &cfg.paths.problems);
    if up_to_date(&[&out], force) {
        return Ok(());
    }
    let params = SetParams {
        n_unconstrained: cfg.n_unconstrained,
        n_constrained: cfg.n_constrained,
        dim_range: cfg.dim_range,
        k_range: cfg.k_range,
        fe_budget: cfg.fe_budget,
        rotate: cfg.rotate,
    };
    let problems = synthesize_set(&params, cfg.master_seed)?;
    write_jsonl(&out, &problems)?;
    println!("wrote {} instances to {}", problems.len(), out.display());
    Ok(())
}

fn jobs(cfg: &PipelineConfig) -> usize {
    match cfg.parallelism {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
}

fn bench(mut cfg: PipelineConfig, force: bool, a: BenchArgs) -> Result<()> {
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if let Some(c) = a.cap {
        cfg.config_cap = c;
    }
    if let Some(o) = a.optimizers {
        cfg.optimizers = o;
    }
    let input = path(&cfg, &cfg.paths.problems);
    let out = path(&cfg, &cfg.paths.knowledge);
    let records_out = path(&cfg, &cfg.paths.records);
    let mut outputs = vec![out.as_path()];
    if a.records {
        outputs.push(&records_out);
    }
    if up_to_date(&outputs, force) {
        return Ok(());
    }
    let problems: Vec<ProblemInstance> = read_jsonl(&input)?;
    let ids = cfg.pool_ids();
    let settings = BenchSettings {
        cap: cfg.config_cap,
        runs: cfg.runs,
    };
    let threads = jobs(&cfg);
    info!("benchmarking {} instances with {} threads", problems.len(), threads);
    let kb = benchmark_set(&problems, &Pool::from_ids(&ids), settings, cfg.master_seed, threads)?;
    write_jsonl(&out, &kb.entries)?;
    if a.records {
        write_jsonl(&records_out, &kb.records)?;
    }
    for id in kb.degenerate_ids() {
        eprintln!("degenerate instance: {id}");
    }
    let counts = kb.winner_counts();
    println!("{:<22} {:>6}", "optimizer", "wins");
    for o in &ids {
        println!("{:<22} {:>6}", o.name(), counts.get(o.name()).copied().unwrap_or(0));
    }
    let n_deg = kb.degenerate_ids().len();
    if n_deg > 0 {
        println!("{:<22} {:>6}", "(degenerate)", n_deg);
    }
    println!("wrote {} entries to {}", kb.entries.len(), out.display());
    Ok(())
}

fn build(mut cfg: PipelineConfig, force: bool, a: BuildArgs) -> Result<()> {
    if let Some(s) = a.styles {
        cfg.styles = s;
    }
    if let Some(n) = a.styles_per_instance {
        cfg.styles_per_instance = n;
    }
    if let Some(d) = a.degenerate {
        cfg.degenerate = d;
    }
    let out = path(&cfg, &cfg.paths.dataset);
    if up_to_date(&[&out], force) {
        return Ok(());
    }
    let problems: Vec<ProblemInstance> = read_jsonl(&path(&cfg, &cfg.paths.problems))?;
    let knowledge: Vec<KnowledgeEntry> = read_jsonl(&path(&cfg, &cfg.paths.knowledge))?;
    let opts = BuildOptions {
        styles: cfg.styles.clone(),
        styles_per_instance: cfg.styles_per_instance,
        degenerate: cfg.degenerate.policy(),
        seed: cfg.master_seed,
    };
    let set = build_instruction_set(&problems, &knowledge, &opts)?;
    write_jsonl(&out, &set.pairs)?;
    println!("wrote {} pairs to {}", set.pairs.len(), out.display());
    Ok(())
}

fn load_set(p: &Path) -> Result<InstructionSet> {
    Ok(InstructionSet {
        pairs: read_jsonl::<InstructionPair>(p)?,
    })
}

fn split_cmd(mut cfg: PipelineConfig, force: bool, a: SplitArgs) -> Result<()> {
    if let Some(f) = a.fraction {
        cfg.split_fraction = f;
    }
    let train_out = path(&cfg, &cfg.paths.train);
    let eval_out = path(&cfg, &cfg.paths.eval);
    if up_to_date(&[&train_out, &eval_out], force) {
        return Ok(());
    }
    let set = load_set(&path(&cfg, &cfg.paths.dataset))?;
    let (train, eval) = split(&set, cfg.split_fraction, cfg.master_seed)?;
    write_jsonl(&train_out, &train.pairs)?;
    write_jsonl(&eval_out, &eval.pairs)?;
    println!("train {} pairs, eval {} pairs", train.pairs.len(), eval.pairs.len());
    Ok(())
}

fn plan(mut cfg: PipelineConfig, force: bool, a: PlanArgs) -> Result<()> {
    if let Some(b) = a.batch {
        cfg.batch_size = b;
    }
    if let Some(n) = a.n_batches {
        cfg.n_batches = n;
    }
    if let Some(h) = a.homogeneous {
        cfg.homogeneous = h;
    }
    let plan_out = path(&cfg, &cfg.paths.plan);
    let batches_out = path(&cfg, &cfg.paths.batches);
    if up_to_date(&[&plan_out, &batches_out], force) {
        return Ok(());
    }
    let input = match a.input {
        Some(p) => p,
        None => path(&cfg, &cfg.paths.train),
    };
    let set = load_set(&input)?;
    let plan = sampling_weights(&set)?;
    let batches = draw_batches(
        &plan,
        &set,
        cfg.n_batches,
        cfg.batch_size,
        cfg.homogeneous,
        derive_seed!(cfg.master_seed, "plan"),
    )?;
    let lines: Vec<BatchLine> = batches
        .into_iter()
        .map(|b| BatchLine {
            instance_ids: b.iter().map(|&i| set.pairs[i].instance_id.clone()).collect(),
            indices: b,
        })
        .collect();
    let n_labels = plan.n_labels;
    write_json(
        &plan_out,
        &PlanFile {
            plan,
            batch_size: cfg.batch_size,
            homogeneous: cfg.homogeneous,
            margin: cfg.margin,
        },
    )?;
    write_jsonl(&batches_out, &lines)?;
    println!(
        "{} labels over {} pairs; wrote {} batches of {}",
        n_labels,
        set.pairs.len(),
        lines.len(),
        cfg.batch_size
    );
    Ok(())
}

/// Number of instances and runs per instance in `outcomes`.
fn outcome_shape(outcomes: &[EvalOutcome], runs: Option<usize>) -> Result<(usize, usize)> {
    let mut per: BTreeMap<&str, usize> = BTreeMap::new();
    for o in outcomes {
        *per.entry(o.instance_id.as_str()).or_insert(0) += 1;
    }
    let n = per.len();
    if let Some(r) = runs {
        return Ok((n, r));
    }
    let counts: Vec<usize> = per.values().copied().collect();
    match counts.first() {
        None => bail!("no outcomes"),
        Some(&r) if counts.iter().all(|&c| c == r) => Ok((n, r)),
        _ => bail!("instances have differing run counts; pass --runs"),
    }
}

fn metrics(cfg: PipelineConfig, force: bool, a: MetricsArgs) -> Result<()> {
    let out = path(&cfg, &cfg.paths.report);
    if up_to_date(&[&out], force) {
        return Ok(());
    }
    let outcomes_in = a.outcomes.unwrap_or_else(|| path(&cfg, &cfg.paths.outcomes));
    let outcomes: Vec<EvalOutcome> = read_jsonl(&outcomes_in)?;
    let (n_instances, runs) = outcome_shape(&outcomes, a.runs)?;
    let repairs: Vec<RepairRecord> = match &a.repairs {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    let pairs: Vec<InstructionPair> = match &a.pairs {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    let prompts: Vec<String> = pairs.iter().map(|p| p.q.clone()).collect();
    let answers: Vec<String> = pairs.iter().map(|p| p.a.clone()).collect();
    let report = compute_report(&MetricsInput {
        outcomes: &outcomes,
        n_instances,
        runs,
        repairs: &repairs,
        prompts: &prompts,
        answers: &answers,
        perf_mode: a.perf_mode.into(),
    })
    .context("computing metrics")?;
    write_json(&out, &report)?;
    print!("{report}");
    Ok(())
}

fn render(cfg: PipelineConfig, a: RenderArgs) -> Result<()> {
    let problems: Vec<ProblemInstance> = read_jsonl(&path(&cfg, &cfg.paths.problems))?;
    let inst = problems
        .iter()
        .find(|p| p.id == a.instance)
        .with_context(|| format!("no instance {:?}", a.instance))?;
    let prompt = render_prompt(inst, a.style, derive_seed!(cfg.master_seed, &inst.id, a.style.name()));
    let mut text = prompt.text;
    if a.answer {
        let knowledge: Vec<KnowledgeEntry> = read_jsonl(&path(&cfg, &cfg.paths.knowledge))?;
        let entry = knowledge
            .iter()
            .find(|k| k.instance_id == inst.id)
            .with_context(|| format!("no knowledge entry for {:?}", inst.id))?;
        text.push('\n');
        text.push_str(&emit_answer(entry)?.code_text);
    }
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}
