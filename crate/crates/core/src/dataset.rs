//! Instruction-set assembly, splitting, example-proportional sampling,
//! homogeneous batching and the contrastive warm-up loss.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bench::KnowledgeEntry;
use crate::error::{invalid, Error, Result};
use crate::optim::{Configuration, OptimizerId};
use crate::problem::ProblemInstance;
use crate::render::{emit_answer, emit_answer_for, render_prompt, WritingStyle};
use crate::{derive_seed, seed};

/// One prompt/answer example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstructionPair {
    pub q: String,
    pub a: String,
    pub instance_id: String,
    pub style: WritingStyle,
    pub label: OptimizerId,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstructionSet {
    pub pairs: Vec<InstructionPair>,
}

/// What to do with instances whose knowledge entry is degenerate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneratePolicy {
    #[default]
    Fail,
    Skip,
    Fallback { optimizer: OptimizerId, config: Configuration },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub styles: Vec<WritingStyle>,
    /// Styles rendered per instance; `0` renders all of them. A smaller
    /// count picks a seeded subset per instance.
    pub styles_per_instance: usize,
    pub degenerate: DegeneratePolicy,
    pub seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            styles: WritingStyle::ALL.to_vec(),
            styles_per_instance: 0,
            degenerate: DegeneratePolicy::Fail,
            seed: 0,
        }
    }
}

fn styles_for(opts: &BuildOptions, id: &str) -> Vec<WritingStyle> {
    let n = opts.styles.len();
    if opts.styles_per_instance == 0 || opts.styles_per_instance >= n {
        return opts.styles.clone();
    }
    let mut rng = seed::rng(derive_seed!(opts.seed, id, "styles"));
    let mut picked = index::sample(&mut rng, n, opts.styles_per_instance).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| opts.styles[i]).collect()
}

/// Renders every instance in every selected style and pairs each prompt with
/// the answer of the instance's knowledge entry.
pub fn build_instruction_set(
    problems: &[ProblemInstance],
    knowledge: &[KnowledgeEntry],
    opts: &BuildOptions,
) -> Result<InstructionSet> {
    let by_id: HashMap<&str, &KnowledgeEntry> =
        knowledge.iter().map(|k| (k.instance_id.as_str(), k)).collect();
    let missing: Vec<String> = problems
        .iter()
        .filter(|p| !by_id.contains_key(p.id.as_str()))
        .map(|p| p.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingKnowledge(missing));
    }
    let mut pairs = Vec::new();
    for p in problems {
        let entry = by_id[p.id.as_str()];
        let answer = match (&opts.degenerate, entry.degenerate) {
            (_, false) => emit_answer(entry)?,
            (DegeneratePolicy::Fail, true) => return Err(Error::DegenerateEntry(p.id.clone())),
            (DegeneratePolicy::Skip, true) => {
                log::warn!("skipping degenerate instance {}", p.id);
                continue;
            }
            (DegeneratePolicy::Fallback { optimizer, config }, true) => emit_answer_for(*optimizer, config)?,
        };
        for style in styles_for(opts, &p.id) {
            let prompt = render_prompt(p, style, derive_seed!(opts.seed, &p.id, style.name()));
            pairs.push(InstructionPair {
                q: prompt.text,
                a: answer.code_text.clone(),
                instance_id: p.id.clone(),
                style,
                label: answer.optimizer,
            });
        }
    }
    Ok(InstructionSet { pairs })
}

/// Instance-level split: shuffled instance ids go to the training side
/// until it holds `round(fraction * |set|)` pairs. Pair order is kept.
pub fn split(set: &InstructionSet, train_fraction: f64, seed: u64) -> Result<(InstructionSet, InstructionSet)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &set.pairs {
        *sizes.entry(p.instance_id.as_str()).or_default() += 1;
    }
    let mut ids: Vec<&str> = sizes.keys().copied().collect();
    ids.shuffle(&mut seed::rng(derive_seed!(seed, "split")));
    let target = (train_fraction * set.pairs.len() as f64).round() as usize;
    let mut train_ids = BTreeSet::new();
    let mut count = 0;
    for id in ids {
        if count >= target {
            break;
        }
        count += sizes[id];
        train_ids.insert(id);
    }
    let (train, eval): (Vec<_>, Vec<_>) =
        set.pairs.iter().cloned().partition(|p| train_ids.contains(p.instance_id.as_str()));
    Ok((InstructionSet { pairs: train }, InstructionSet { pairs: eval }))
}

/// Example-proportional mixing weights `ρ = 1 / (N_a · N_{q,a})`, where
/// `N_a` counts the labels present in the set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Weight of each pair, by position in the set.
    pub weights: Vec<f64>,
    pub label_counts: BTreeMap<OptimizerId, usize>,
    pub n_labels: usize,
}

pub fn sampling_weights(set: &InstructionSet) -> Result<SamplingPlan> {
    if set.pairs.is_empty() {
        return Err(invalid("cannot weight an empty instruction set"));
    }
    let mut label_counts = BTreeMap::new();
    for p in &set.pairs {
        *label_counts.entry(p.label).or_insert(0usize) += 1;
    }
    let n_labels = label_counts.len();
    let weights = set
        .pairs
        .iter()
        .map(|p| 1.0 / (n_labels as f64 * label_counts[&p.label] as f64))
        .collect();
    Ok(SamplingPlan {
        weights,
        label_counts,
        n_labels,
    })
}

impl SamplingPlan {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn sampler(&self) -> Result<WeightedIndex<f64>> {
        WeightedIndex::new(&self.weights).map_err(|e| invalid(format!("sampling weights: {e}")))
    }
}

/// Draws `n_batches` batches of pair indices from one seeded stream.
///
/// Homogeneous batches start with one pair drawn by `ρ` and are filled with
/// other pairs of the same instance, without replacement until the
/// instance runs out and with replacement after that.
pub fn draw_batches(
    plan: &SamplingPlan,
    set: &InstructionSet,
    n_batches: usize,
    batch_size: usize,
    homogeneous: bool,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    if plan.weights.len() != set.pairs.len() {
        return Err(invalid(format!(
            "plan has {} weights for {} pairs",
            plan.weights.len(),
            set.pairs.len()
        )));
    }
    let sampler = plan.sampler()?;
    let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, p) in set.pairs.iter().enumerate() {
        groups.entry(p.instance_id.as_str()).or_default().push(i);
    }
    let mut rng = seed::rng(seed);
    let mut batches = Vec::with_capacity(n_batches);
    for _ in 0..n_batches {
        let first = sampler.sample(&mut rng);
        let mut batch = vec![first];
        if homogeneous {
            let group = &groups[set.pairs[first].instance_id.as_str()];
            let mut rest: Vec<usize> = group.iter().copied().filter(|&i| i != first).collect();
            rest.shuffle(&mut rng);
            batch.extend(rest.into_iter().take(batch_size - 1));
            while batch.len() < batch_size {
                batch.push(group[rng.random_range(0..group.len())]);
            }
        } else {
            while batch.len() < batch_size {
                batch.push(sampler.sample(&mut rng));
            }
        }
        batches.push(batch);
    }
    Ok(batches)
}

/// A single batch; see [`draw_batches`].
pub fn draw_batch(
    plan: &SamplingPlan,
    set: &InstructionSet,
    batch_size: usize,
    homogeneous: bool,
    seed: u64,
) -> Result<Vec<InstructionPair>> {
    let mut b = draw_batches(plan, set, 1, batch_size, homogeneous, seed)?;
    Ok(b.pop().unwrap().into_iter().map(|i| set.pairs[i].clone()).collect())
}

/// Prompt representation with the label of its pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub vector: Vec<f64>,
    pub label: OptimizerId,
}

/// `G = (1 − cos(a, b)) / 2`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(invalid(format!("embedding lengths {} and {}", a.len(), b.len())));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if !(na > 0.0 && nb > 0.0) || !na.is_finite() || !nb.is_finite() {
        return Err(invalid("embedding with zero or non-finite norm"));
    }
    let cos = (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0);
    Ok(0.5 * (1.0 - cos))
}

pub fn contrastive_loss(a: &[f64], b: &[f64], same_label: bool, margin: f64) -> Result<f64> {
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(invalid(format!("margin must lie in (0, 1], got {margin}")));
    }
    let g = cosine_distance(a, b)?;
    Ok(if same_label { g } else { (margin - g).max(0.0) })
}

/// Mean pair loss over all unordered pairs of the batch.
pub fn batch_contrastive_loss(batch: &[Embedding], margin: f64) -> Result<f64> {
    if batch.len() < 2 {
        return Err(invalid("contrastive loss needs at least two embeddings"));
    }
    let mut total = 0.0;
    let mut n = 0usize;
    for i in 0..batch.len() {
        for j in i + 1..batch.len() {
            let (a, b) = (&batch[i], &batch[j]);
            total += contrastive_loss(&a.vector, &b.vector, a.label == b.label, margin)?;
            n += 1;
        }
    }
    Ok(total / n as f64)
}
