//! Rewriting task model: keep/delete per last-utterance token plus span
//! insertion in front of each token, with a trailing slot for insertions at
//! the end of the utterance. Start index above end index means no insertion.

use crate::data::{Flattened, Instance, TokenSeq};
use crate::error::CoreError;
use crate::num::Score;

use super::{argmax, softmax, LinearModel, TaskKind};

pub const TASK_B_LABELS: [&str; 4] = ["keep", "delete", "start", "end"];
pub(crate) const KEEP: usize = 0;
pub(crate) const DELETE: usize = 1;
pub(crate) const START: usize = 2;
pub(crate) const END: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct TaskBPrediction {
    pub rewrite: TokenSeq,
    pub confidence: Score,
    /// Keep decision per last-utterance token.
    pub keep: Vec<bool>,
    /// Decoded insertion (global token span) per slot 0..=L.
    pub insertions: Vec<Option<(usize, usize)>>,
}

/// Raw decision distributions, exposed for gradient and invariant checks.
#[derive(Debug, Clone)]
pub struct TaskBDistributions {
    /// Per last-utterance token: [P(keep), P(delete)].
    pub keep: Vec<[f64; 2]>,
    /// Per slot 0..=L: start-index distribution over all dialogue positions.
    pub start: Vec<Vec<f64>>,
    /// Per slot 0..=L: end-index distribution over all dialogue positions.
    pub end: Vec<Vec<f64>>,
}

pub fn task_b_distributions(
    model: &LinearModel,
    instance: &Instance,
) -> Result<TaskBDistributions, CoreError> {
    model.expect_task(TaskKind::B)?;
    if instance.utterances.len() < 2 {
        return Err(CoreError::NoContext);
    }
    let flat = Flattened::new(instance);
    let last_len = instance.last_utterance().tokens.len();
    let total = flat.total();
    let mut feats = Vec::with_capacity(8);

    let mut keep = Vec::with_capacity(last_len);
    for j in 0..last_len {
        let global = flat.last_start() + j;
        model.space.keep_features(&flat, global, &mut feats);
        let mut scores = [model.score(KEEP, &feats), model.score(DELETE, &feats)];
        softmax(&mut scores);
        keep.push(scores);
    }

    let mut start = Vec::with_capacity(last_len + 1);
    let mut end = Vec::with_capacity(last_len + 1);
    for slot in 0..=last_len {
        let mut st = Vec::with_capacity(total);
        let mut ed = Vec::with_capacity(total);
        for cand in 0..total {
            model.space.span_features(&flat, cand, slot, &mut feats);
            st.push(model.score(START, &feats));
            ed.push(model.score(END, &feats));
        }
        softmax(&mut st);
        softmax(&mut ed);
        start.push(st);
        end.push(ed);
    }
    Ok(TaskBDistributions { keep, start, end })
}

pub fn predict_b(model: &LinearModel, instance: &Instance) -> Result<TaskBPrediction, CoreError> {
    let dists = task_b_distributions(model, instance)?;
    let flat = Flattened::new(instance);
    let last = instance.last_utterance().tokens.tokens();

    let mut confidence = 1.0f64;
    let keep: Vec<bool> = dists
        .keep
        .iter()
        .map(|probs| {
            // Tie goes to keep.
            let keep = probs[KEEP] >= probs[DELETE];
            confidence *= probs[if keep { KEEP } else { DELETE }];
            keep
        })
        .collect();

    let mut insertions = Vec::with_capacity(last.len() + 1);
    let mut rewrite: Vec<String> = Vec::with_capacity(last.len() + 2);
    for slot in 0..=last.len() {
        let s_st = argmax(&dists.start[slot]);
        let s_ed = argmax(&dists.end[slot]);
        if s_st <= s_ed {
            insertions.push(Some((s_st, s_ed)));
            confidence *= dists.start[slot][s_st] * dists.end[slot][s_ed];
            for g in s_st..=s_ed {
                rewrite.push(flat.token(g).to_string());
            }
        } else {
            insertions.push(None);
        }
        if slot < last.len() && keep[slot] {
            rewrite.push(last[slot].clone());
        }
    }

    Ok(TaskBPrediction {
        rewrite: TokenSeq::new(rewrite).expect("instance tokens are whitespace-free"),
        confidence: Score::clamped(confidence),
        keep,
        insertions,
    })
}
