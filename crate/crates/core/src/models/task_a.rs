//! Span-labeling task model: per-token BIO distributions conditioned on a
//! predicate, decoded by argmax with orphan-I repair.

use crate::data::{ArgumentSet, Flattened, Instance, Role, Span};
use crate::error::CoreError;
use crate::num::{geometric_mean, Score};

use super::{argmax, softmax, LinearModel, TaskKind};

/// Fixed label order; ties in the per-token argmax resolve to the earliest
/// label, so an untrained model decodes everything as O.
pub const TASK_A_LABELS: [&str; 7] = [
    "O", "B-ARG0", "I-ARG0", "B-ARG1", "I-ARG1", "B-ARG2", "I-ARG2",
];

pub(crate) const A_ROLES: [Role; 3] = [Role::Arg0, Role::Arg1, Role::Arg2];

/// Role and span-position of a non-O label index.
fn label_role(label: usize) -> Option<(Role, bool)> {
    match label {
        1 => Some((Role::Arg0, true)),
        2 => Some((Role::Arg0, false)),
        3 => Some((Role::Arg1, true)),
        4 => Some((Role::Arg1, false)),
        5 => Some((Role::Arg2, true)),
        6 => Some((Role::Arg2, false)),
        _ => None,
    }
}

pub(crate) fn role_b_label(role: Role) -> usize {
    match role {
        Role::Arg0 => 1,
        Role::Arg1 => 3,
        Role::Arg2 => 5,
        _ => unreachable!("task A label space only covers ARG0..ARG2"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicatePrediction {
    pub arguments: ArgumentSet,
    pub confidence: Score,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskAPrediction {
    pub predicates: Vec<PredicatePrediction>,
}

impl TaskAPrediction {
    pub fn argument_sets(&self) -> Vec<ArgumentSet> {
        self.predicates.iter().map(|p| p.arguments.clone()).collect()
    }
}

/// Per-predicate, per-token label distributions over the flattened dialogue.
pub fn task_a_distributions(
    model: &LinearModel,
    instance: &Instance,
) -> Result<Vec<Vec<[f64; 7]>>, CoreError> {
    model.expect_task(TaskKind::A)?;
    let flat = Flattened::new(instance);
    let mut feats = Vec::with_capacity(4);
    let mut out = Vec::with_capacity(instance.predicates.len());
    for pred in &instance.predicates {
        let pred_global = flat.global(pred.utt, pred.idx);
        let mut rows = Vec::with_capacity(flat.total());
        for t in 0..flat.total() {
            model.space.a_features(&flat, pred_global, t, &mut feats);
            let mut scores = [0.0f64; 7];
            for (label, s) in scores.iter_mut().enumerate() {
                *s = model.score(label, &feats);
            }
            softmax(&mut scores);
            rows.push(scores);
        }
        out.push(rows);
    }
    Ok(out)
}

pub fn predict_a(model: &LinearModel, instance: &Instance) -> Result<TaskAPrediction, CoreError> {
    let dists = task_a_distributions(model, instance)?;
    let flat = Flattened::new(instance);
    let predicates = dists
        .into_iter()
        .map(|rows| decode_predicate(&flat, &rows))
        .collect();
    Ok(TaskAPrediction { predicates })
}

/// Extract BIO spans from per-token argmax labels. Spans never cross
/// utterance boundaries; an I tag without a live same-role span is repaired
/// to B (it opens a new span). Returns (role, span, chosen-prob product).
pub(crate) fn extract_spans(
    flat: &Flattened<'_>,
    chosen: &[usize],
    rows: &[[f64; 7]],
) -> Vec<(Role, Span, f64)> {
    let mut spans: Vec<(Role, Span, f64)> = Vec::new();
    let mut open: Option<(Role, Span, f64)> = None;
    for g in 0..rows.len() {
        let (utt, idx) = flat.loc(g);
        let prob = rows[g][chosen[g]];
        let next = match label_role(chosen[g]) {
            None => None,
            Some((role, is_begin)) => {
                let continues = !is_begin
                    && idx > 0
                    && matches!(&open, Some((r, s, _)) if *r == role && s.utt == utt);
                if continues {
                    if let Some((_, span, conf)) = open.as_mut() {
                        span.end = idx;
                        *conf *= prob;
                    }
                    continue;
                }
                Some((role, Span::single(utt, idx), prob))
            }
        };
        if let Some(done) = open.take() {
            spans.push(done);
        }
        open = next;
    }
    if let Some(done) = open.take() {
        spans.push(done);
    }
    spans
}

fn decode_predicate(flat: &Flattened<'_>, rows: &[[f64; 7]]) -> PredicatePrediction {
    let chosen: Vec<usize> = rows.iter().map(|r| argmax(r)).collect();
    let spans = extract_spans(flat, &chosen, rows);

    // One span per role: highest confidence wins, ties to the earliest span.
    let mut arguments = ArgumentSet::new();
    let mut confidences: Vec<(Role, f64)> = Vec::new();
    for role in A_ROLES {
        let best = spans
            .iter()
            .filter(|(r, _, _)| *r == role)
            .max_by(|(_, sa, ca), (_, sb, cb)| {
                ca.partial_cmp(cb)
                    .unwrap()
                    .then_with(|| sb.cmp(sa)) // earlier span wins ties
            });
        if let Some(&(_, span, conf)) = best {
            arguments.insert(role, span);
            confidences.push((role, conf));
        }
    }
    let confidence = if confidences.is_empty() {
        Score::ZERO
    } else {
        let scores: Vec<Score> = confidences
            .iter()
            .map(|(_, c)| Score::clamped(*c))
            .collect();
        geometric_mean(&scores).expect("nonempty")
    };
    PredicatePrediction {
        arguments,
        confidence,
    }
}
