//! Cross-entropy losses, analytic gradients, and minibatch gradient descent
//! for both task models, with the combined labeled+pseudo objective
//! `L = sum_labeled CE + lambda * sum_pseudo CE`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{ArgumentSet, Flattened, Instance, TokenSeq};
use crate::error::CoreError;
use crate::rng::rng_from_seed;

use super::task_a::{role_b_label, A_ROLES};
use super::task_b::{DELETE, END, KEEP, START};
use super::{softmax, LinearModel, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs_per_iteration: usize,
    /// Weight of the pseudo-label loss term.
    pub lambda: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            batch_size: 16,
            epochs_per_iteration: 3,
            lambda: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.learning_rate > 0.0) {
            return Err(CoreError::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.lambda < 0.0 {
            return Err(CoreError::InvalidConfig("lambda must be >= 0".into()));
        }
        if self.batch_size < 1 {
            return Err(CoreError::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Gradient buffer with the same shape as the model it accumulates for.
#[derive(Debug, Clone)]
pub struct GradAccum {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl GradAccum {
    pub fn zeros_like(model: &LinearModel) -> Self {
        GradAccum {
            dim: model.dim,
            weights: vec![0.0; model.weights.len()],
            bias: vec![0.0; model.bias.len()],
        }
    }

    pub fn clear(&mut self) {
        self.weights.iter_mut().for_each(|w| *w = 0.0);
        self.bias.iter_mut().for_each(|b| *b = 0.0);
    }

    /// Softmax-CE contribution: `(p - y)` spread over the active features of
    /// each label row.
    fn add_ce(&mut self, probs: &[f64], gold: usize, feats_per_label: &[&[u32]], scale: f64) {
        for (label, p) in probs.iter().enumerate() {
            let delta = scale * (p - f64::from(label == gold));
            self.bias[label] += delta;
            let row = &mut self.weights[label * self.dim..(label + 1) * self.dim];
            for &f in feats_per_label[label] {
                row[f as usize] += delta;
            }
        }
    }

    /// Shared-feature variant: every label row sees the same active features.
    fn add_ce_shared(&mut self, probs: &[f64], gold: usize, feats: &[u32], scale: f64) {
        let shared: Vec<&[u32]> = vec![feats; probs.len()];
        self.add_ce(probs, gold, &shared, scale);
    }
}

/// Targets for one labeling-task example: argument sets per predicate index.
/// Labeled data carries every predicate; partial pseudo selection may carry
/// a subset.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskATargets {
    pub predicate_args: Vec<(usize, ArgumentSet)>,
}

pub fn task_a_gold_targets(instance: &Instance) -> Result<TaskATargets, CoreError> {
    let gold = instance
        .gold_a
        .as_ref()
        .ok_or_else(|| CoreError::InvalidInstance(format!("{}: missing gold_a", instance.id)))?;
    Ok(TaskATargets {
        predicate_args: gold.iter().cloned().enumerate().collect(),
    })
}

/// Sequence-labeling targets for one rewriting-task example over slots
/// 0..=L: keep/delete per token plus an optional global insertion span per
/// slot. A missing insertion trains the span scorers toward the
/// start=1/end=0 sentinel, which is exactly the no-insertion decode.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqTargets {
    pub keep: Vec<bool>,
    pub insert: Vec<Option<(usize, usize)>>,
}

/// Derive keep/insert targets from a target rewrite by token-LCS alignment:
/// unmatched source tokens are deletions, unmatched target runs become
/// insertions at the current source slot (insert wins alignment ties, which
/// reproduces the canonical pronoun encoding: insert at the pronoun's slot,
/// then delete it). Each run must occur contiguously in the dialogue; the
/// rightmost context occurrence is used, falling back to any occurrence.
pub fn derive_rewrite_targets(
    instance: &Instance,
    target: &TokenSeq,
) -> Result<SeqTargets, CoreError> {
    let flat = Flattened::new(instance);
    let src = instance.last_utterance().tokens.tokens();
    let tgt = target.tokens();
    let (n, m) = (src.len(), tgt.len());

    // lcs[i][j] = LCS length of src[i..] and tgt[j..].
    let mut lcs = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if src[i] == tgt[j] {
                lcs[i + 1][j + 1] + 1
            } else {
                lcs[i + 1][j].max(lcs[i][j + 1])
            };
        }
    }

    let mut keep = vec![false; n];
    let mut runs: Vec<(usize, Vec<String>)> = Vec::new();
    let push_tok = |runs: &mut Vec<(usize, Vec<String>)>, slot: usize, tok: &str| {
        match runs.last_mut() {
            Some((s, toks)) if *s == slot => toks.push(tok.to_string()),
            _ => runs.push((slot, vec![tok.to_string()])),
        }
    };
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        let slot_occupied = matches!(runs.last(), Some((s, _)) if *s == i);
        if src[i] == tgt[j] && lcs[i][j] == lcs[i + 1][j + 1] + 1 {
            keep[i] = true;
            i += 1;
            j += 1;
        } else if lcs[i][j] == lcs[i + 1][j] && slot_occupied {
            // A slot takes at most one insertion span; once this slot holds
            // a run, close it by deleting the source token when that keeps
            // the alignment optimal (adjacent pronoun replacements).
            i += 1;
        } else if lcs[i][j] == lcs[i][j + 1] {
            push_tok(&mut runs, i, &tgt[j]);
            j += 1;
        } else {
            i += 1;
        }
    }
    while j < m {
        push_tok(&mut runs, n, &tgt[j]);
        j += 1;
    }

    let mut insert = vec![None; n + 1];
    for (slot, toks) in runs {
        let span = find_contiguous(&flat, &toks).ok_or_else(|| {
            CoreError::UnencodableRewrite(format!(
                "{}: inserted run {:?} is not a contiguous dialogue span",
                instance.id, toks
            ))
        })?;
        insert[slot] = Some(span);
    }
    Ok(SeqTargets { keep, insert })
}

/// Rightmost contiguous occurrence, preferring the context region.
fn find_contiguous(flat: &Flattened<'_>, run: &[String]) -> Option<(usize, usize)> {
    let total = flat.total();
    if run.is_empty() || run.len() > total {
        return None;
    }
    let matches_at =
        |start: usize| (0..run.len()).all(|k| flat.token(start + k) == run[k].as_str());
    let last_start = flat.last_start();
    let context_starts = (0..=total - run.len())
        .rev()
        .filter(|&s| s + run.len() <= last_start);
    for s in context_starts {
        if matches_at(s) {
            return Some((s, s + run.len() - 1));
        }
    }
    (0..=total - run.len()).rev().find_map(|s| {
        if matches_at(s) {
            Some((s, s + run.len() - 1))
        } else {
            None
        }
    })
}

/// Loss and gradient of one labeling-task example. Returns the summed CE
/// over (predicate, token) decisions; gradients are scaled by `scale`.
pub fn loss_grad_a(
    model: &LinearModel,
    instance: &Instance,
    targets: &TaskATargets,
    scale: f64,
    grad: Option<&mut GradAccum>,
) -> Result<f64, CoreError> {
    model.expect_task(TaskKind::A)?;
    let flat = Flattened::new(instance);
    let mut feats = Vec::with_capacity(4);
    let mut loss = 0.0;
    let mut grad = grad;
    for (pred_idx, args) in &targets.predicate_args {
        let pred = instance
            .predicates
            .get(*pred_idx)
            .ok_or(CoreError::IndexOutOfRange {
                index: *pred_idx,
                len: instance.predicates.len(),
            })?;
        let pred_global = flat.global(pred.utt, pred.idx);
        let gold_labels = gold_label_sequence(&flat, args)?;
        for (t, &gold) in gold_labels.iter().enumerate() {
            model.space.a_features(&flat, pred_global, t, &mut feats);
            let mut probs = [0.0f64; 7];
            for (label, s) in probs.iter_mut().enumerate() {
                *s = model.score(label, &feats);
            }
            softmax(&mut probs);
            loss += -probs[gold].max(f64::MIN_POSITIVE).ln();
            if let Some(g) = grad.as_deref_mut() {
                g.add_ce_shared(&probs, gold, &feats, scale);
            }
        }
    }
    Ok(loss)
}

/// Per-token gold label indices for one predicate's argument set.
fn gold_label_sequence(
    flat: &Flattened<'_>,
    args: &ArgumentSet,
) -> Result<Vec<usize>, CoreError> {
    let mut labels = vec![0usize; flat.total()];
    for (role, span) in args.iter() {
        if !A_ROLES.contains(&role) {
            return Err(CoreError::ModelMismatch(format!(
                "role {role} has no tags in the task A label space"
            )));
        }
        flat.instance.check_span(&span)?;
        let b = role_b_label(role);
        for idx in span.start..=span.end {
            let g = flat.global(span.utt, idx);
            labels[g] = if idx == span.start { b } else { b + 1 };
        }
    }
    Ok(labels)
}

/// Loss and gradient of one rewriting-task example: keep/delete CE per
/// token plus start/end CE per slot (sentinel targets 1/0 when no
/// insertion).
pub fn loss_grad_b(
    model: &LinearModel,
    instance: &Instance,
    targets: &SeqTargets,
    scale: f64,
    grad: Option<&mut GradAccum>,
) -> Result<f64, CoreError> {
    model.expect_task(TaskKind::B)?;
    if instance.utterances.len() < 2 {
        return Err(CoreError::NoContext);
    }
    let flat = Flattened::new(instance);
    let last_len = instance.last_utterance().tokens.len();
    if targets.keep.len() != last_len || targets.insert.len() != last_len + 1 {
        return Err(CoreError::InvalidInstance(format!(
            "{}: rewrite targets do not match utterance length",
            instance.id
        )));
    }
    let total = flat.total();
    let mut feats = Vec::with_capacity(8);
    let mut loss = 0.0;
    let mut grad = grad;

    for (j, &keep) in targets.keep.iter().enumerate() {
        let global = flat.last_start() + j;
        model.space.keep_features(&flat, global, &mut feats);
        let mut probs = [model.score(KEEP, &feats), model.score(DELETE, &feats)];
        softmax(&mut probs);
        let gold = if keep { KEEP } else { DELETE };
        loss += -probs[gold].max(f64::MIN_POSITIVE).ln();
        if let Some(g) = grad.as_deref_mut() {
            // Only the keep/delete rows participate in this softmax.
            let full = [probs[0], probs[1], 0.0, 0.0];
            let rows: [&[u32]; 4] = [&feats, &feats, &[], &[]];
            g.add_ce(&full, gold, &rows, scale);
        }
    }

    let mut st_scores = vec![0.0f64; total];
    let mut ed_scores = vec![0.0f64; total];
    let mut slot_feats: Vec<Vec<u32>> = Vec::new();
    for (slot, ins) in targets.insert.iter().enumerate() {
        let (gold_st, gold_ed) = ins.unwrap_or((1, 0));
        if gold_st >= total || gold_ed >= total {
            return Err(CoreError::InvalidInstance(format!(
                "{}: insertion target outside the dialogue",
                instance.id
            )));
        }
        slot_feats.clear();
        for cand in 0..total {
            model.space.span_features(&flat, cand, slot, &mut feats);
            st_scores[cand] = model.score(START, &feats);
            ed_scores[cand] = model.score(END, &feats);
            slot_feats.push(feats.clone());
        }
        softmax(&mut st_scores);
        softmax(&mut ed_scores);
        loss += -st_scores[gold_st].max(f64::MIN_POSITIVE).ln();
        loss += -ed_scores[gold_ed].max(f64::MIN_POSITIVE).ln();
        if let Some(g) = grad.as_deref_mut() {
            for cand in 0..total {
                let fs = &slot_feats[cand];
                let d_st = scale * (st_scores[cand] - f64::from(cand == gold_st));
                let d_ed = scale * (ed_scores[cand] - f64::from(cand == gold_ed));
                g.bias[START] += d_st;
                g.bias[END] += d_ed;
                let st_row = START * g.dim;
                let ed_row = END * g.dim;
                for &f in fs {
                    g.weights[st_row + f as usize] += d_st;
                    g.weights[ed_row + f as usize] += d_ed;
                }
            }
        }
    }
    Ok(loss)
}

/// Summed loss of a weighted batch, for finite-difference checks.
pub fn batch_loss_a(
    model: &LinearModel,
    batch: &[(&Instance, &TaskATargets, f64)],
) -> Result<f64, CoreError> {
    batch.iter().try_fold(0.0, |acc, (inst, tgt, w)| {
        Ok(acc + w * loss_grad_a(model, inst, tgt, 1.0, None)?)
    })
}

pub fn batch_loss_b(
    model: &LinearModel,
    batch: &[(&Instance, &SeqTargets, f64)],
) -> Result<f64, CoreError> {
    batch.iter().try_fold(0.0, |acc, (inst, tgt, w)| {
        Ok(acc + w * loss_grad_b(model, inst, tgt, 1.0, None)?)
    })
}

/// Minibatch SGD over labeled (weight 1) and pseudo (weight lambda)
/// examples; deterministic shuffling from the seed. Returns the updated
/// model and the per-epoch mean loss trace.
fn sgd_epochs<T>(
    mut model: LinearModel,
    examples: &[(&Instance, T, f64)],
    cfg: &TrainConfig,
    seed: u64,
    loss_grad: impl Fn(
        &LinearModel,
        &Instance,
        &T,
        f64,
        Option<&mut GradAccum>,
    ) -> Result<f64, CoreError>,
) -> Result<(LinearModel, Vec<f64>), CoreError> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(CoreError::EmptyTrainingSet);
    }
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut grad = GradAccum::zeros_like(&model);
    let mut trace = Vec::with_capacity(cfg.epochs_per_iteration);
    for _ in 0..cfg.epochs_per_iteration {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.clear();
            let mut batch_loss = 0.0;
            for &idx in batch {
                let (inst, tgt, w) = &examples[idx];
                batch_loss += w * loss_grad(&model, inst, tgt, *w, Some(&mut grad))?;
            }
            epoch_loss += batch_loss;
            let step = cfg.learning_rate / batch.len() as f64;
            for (w, g) in model.weights.iter_mut().zip(&grad.weights) {
                *w -= step * g;
            }
            for (b, g) in model.bias.iter_mut().zip(&grad.bias) {
                *b -= step * g;
            }
        }
        trace.push(epoch_loss / examples.len() as f64);
    }
    model.check_finite()?;
    Ok((model, trace))
}

pub fn train_a_epochs(
    model: LinearModel,
    labeled: &[(&Instance, TaskATargets)],
    pseudo: &[(&Instance, TaskATargets)],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(LinearModel, Vec<f64>), CoreError> {
    let examples = weighted(labeled, pseudo, cfg.lambda)?;
    sgd_epochs(model, &examples, cfg, seed, |m, i, t, s, g| {
        loss_grad_a(m, i, t, s, g)
    })
}

pub fn train_b_epochs(
    model: LinearModel,
    labeled: &[(&Instance, SeqTargets)],
    pseudo: &[(&Instance, SeqTargets)],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(LinearModel, Vec<f64>), CoreError> {
    let examples = weighted(labeled, pseudo, cfg.lambda)?;
    sgd_epochs(model, &examples, cfg, seed, |m, i, t, s, g| {
        loss_grad_b(m, i, t, s, g)
    })
}

/// Interleave labeled and pseudo examples with their loss weights. A zero
/// lambda drops the pseudo set entirely: the objective is identical and the
/// optimization trajectory matches training on labeled data alone.
fn weighted<'a, T: Clone>(
    labeled: &'a [(&'a Instance, T)],
    pseudo: &'a [(&'a Instance, T)],
    lambda: f64,
) -> Result<Vec<(&'a Instance, T, f64)>, CoreError> {
    let mut out: Vec<(&Instance, T, f64)> = Vec::with_capacity(labeled.len() + pseudo.len());
    for (inst, tgt) in labeled {
        out.push((inst, tgt.clone(), 1.0));
    }
    if lambda > 0.0 {
        for (inst, tgt) in pseudo {
            out.push((inst, tgt.clone(), lambda));
        }
    }
    if out.is_empty() {
        return Err(CoreError::EmptyTrainingSet);
    }
    Ok(out)
}
