//! Translation matcher: both tasks' predictions are mapped into the shared
//! argument-set space and compared per predicate by normalized edit distance
//! over canonical argument concatenations.
//!
//! The labeling task translates as the identity on its argument sets; the
//! rewriting task translates by running the fixed sentence-level labeler
//! over the rewrite at each predicate's occurrence. Gold labels of the
//! generated world always translate to the same point, so gold-vs-gold
//! matches at exactly 1.

use crate::data::{ArgumentSet, Instance, TokenSeq};
use crate::datagen::oracle_labeler;
use crate::error::CoreError;
use crate::models::{TaskAPrediction, TaskBPrediction};
use crate::num::{geometric_mean, norm_edit_distance_score, Score};

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Matching score per predicate, in instance predicate order.
    pub per_predicate: Vec<Score>,
    /// Geometric mean of the per-predicate scores.
    pub overall: Score,
}

/// Concatenate the tokens of present roles in canonical order, resolving
/// spans against the instance. Absent roles contribute nothing.
pub fn canonical_concat(args: &ArgumentSet, instance: &Instance) -> Result<TokenSeq, CoreError> {
    let mut out: Vec<String> = Vec::new();
    for (_, span) in args.iter() {
        out.extend(instance.span_tokens(&span)?.iter().cloned());
    }
    TokenSeq::new(out)
}

/// As [`canonical_concat`], resolving spans inside a bare token sequence
/// (spans must carry utterance index 0).
pub fn canonical_concat_in(args: &ArgumentSet, seq: &TokenSeq) -> Result<TokenSeq, CoreError> {
    let mut out: Vec<String> = Vec::new();
    for (_, span) in args.iter() {
        if span.utt != 0 || span.start > span.end || span.end >= seq.len() {
            return Err(CoreError::InvalidSpan {
                utt: span.utt,
                start: span.start,
                end: span.end,
                reason: "span outside sequence".into(),
            });
        }
        out.extend(seq.tokens()[span.start..=span.end].iter().cloned());
    }
    TokenSeq::new(out)
}

/// Match per-predicate argument sets against a rewrite. A predicate whose
/// token occurs n-th in surface left-to-right order among same-token
/// predicates is located at the n-th occurrence of that token in the
/// rewrite, so the alignment does not depend on predicate list order. A
/// predicate missing from the rewrite yields an empty translated set rather
/// than an error.
pub fn match_sets(
    args_a: &[ArgumentSet],
    rewrite: &TokenSeq,
    instance: &Instance,
) -> Result<MatchResult, CoreError> {
    if args_a.len() != instance.predicates.len() {
        return Err(CoreError::InvalidInstance(format!(
            "{}: {} argument sets for {} predicates",
            instance.id,
            args_a.len(),
            instance.predicates.len()
        )));
    }
    let tokens: Vec<&str> = instance
        .predicates
        .iter()
        .map(|p| {
            instance
                .token(p.utt, p.idx)
                .ok_or(CoreError::IndexOutOfRange {
                    index: p.idx,
                    len: instance.utterances[p.utt].tokens.len(),
                })
        })
        .collect::<Result<_, _>>()?;
    let mut per_predicate = Vec::with_capacity(args_a.len());
    for (k, (pred, args)) in instance.predicates.iter().zip(args_a).enumerate() {
        let tok = tokens[k];
        let ordinal = instance
            .predicates
            .iter()
            .enumerate()
            .filter(|(j, other)| {
                tokens[*j] == tok && (other.idx, *j) < (pred.idx, k)
            })
            .count();
        let position = rewrite
            .iter()
            .enumerate()
            .filter(|(_, t)| *t == tok)
            .map(|(i, _)| i)
            .nth(ordinal);
        let translated_b = match position {
            Some(idx) => oracle_labeler(rewrite, &[idx])?.pop().expect("one predicate"),
            None => ArgumentSet::new(),
        };
        let concat_a = canonical_concat(args, instance)?;
        let concat_b = canonical_concat_in(&translated_b, rewrite)?;
        per_predicate.push(norm_edit_distance_score(&concat_a, &concat_b));
    }
    let overall = geometric_mean(&per_predicate)?;
    Ok(MatchResult {
        per_predicate,
        overall,
    })
}

/// Matching score for a pair of task predictions on one instance.
pub fn match_instance(
    pred_a: &TaskAPrediction,
    pred_b: &TaskBPrediction,
    instance: &Instance,
) -> Result<MatchResult, CoreError> {
    let args: Vec<ArgumentSet> = pred_a
        .predicates
        .iter()
        .map(|p| p.arguments.clone())
        .collect();
    match_sets(&args, &pred_b.rewrite, instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Role, Span};
    use crate::datagen::{generate_corpus, WorldConfig};

    fn seq(tokens: &[&str]) -> TokenSeq {
        TokenSeq::new(tokens.iter().map(|t| t.to_string()).collect()).unwrap()
    }

    fn instance_with_last(last: &[&str], preds: &[usize]) -> Instance {
        let utt: Vec<String> = last.iter().map(|t| t.to_string()).collect();
        let preds: Vec<serde_json::Value> = preds
            .iter()
            .map(|&i| serde_json::json!({"utt": 1, "idx": i}))
            .collect();
        serde_json::from_value(serde_json::json!({
            "id": "t",
            "utterances": [
                {"speaker": "A", "tokens": ["E03", "v9", "E07"]},
                {"speaker": "B", "tokens": utt},
            ],
            "predicates": preds,
        }))
        .unwrap()
    }

    #[test]
    fn canonical_concat_ordering() {
        let inst = instance_with_last(&["E03", "v1", "E07"], &[1]);
        let mut args = ArgumentSet::new();
        args.insert(Role::Arg1, Span::single(1, 2));
        args.insert(Role::Arg0, Span::single(1, 0));
        // Insertion order reversed; canonical order prevails.
        assert_eq!(
            canonical_concat(&args, &inst).unwrap(),
            seq(&["E03", "E07"])
        );
        assert_eq!(
            canonical_concat(&ArgumentSet::new(), &inst).unwrap(),
            seq(&[])
        );
        let bad: ArgumentSet = [(Role::Arg0, Span::single(5, 0))].into_iter().collect();
        assert!(canonical_concat(&bad, &inst).is_err());
    }

    #[test]
    fn match_examples() {
        let inst = instance_with_last(&["PRN", "v1", "E07"], &[1]);
        let rewrite = seq(&["E03", "v1", "E07"]);

        // Total agreement.
        let full: ArgumentSet = [
            (Role::Arg0, Span::single(0, 0)),
            (Role::Arg1, Span::single(1, 2)),
        ]
        .into_iter()
        .collect();
        let m = match_sets(&[full], &rewrite, &inst).unwrap();
        assert_eq!(m.per_predicate[0].get(), 1.0);
        assert_eq!(m.overall.get(), 1.0);

        // ARG0 only vs both: concats ["E03"] vs ["E03","E07"], dist 1/2.
        let partial: ArgumentSet = [(Role::Arg0, Span::single(0, 0))].into_iter().collect();
        let m = match_sets(&[partial], &rewrite, &inst).unwrap();
        assert_eq!(m.per_predicate[0].get(), 0.5);
    }

    #[test]
    fn overall_is_geometric_mean() {
        let inst = instance_with_last(&["E03", "v1", "E07", "E05", "v2", "E03"], &[1, 4]);
        let rewrite = seq(&["E03", "v1", "E07", "E05", "v2", "E03"]);
        let a1: ArgumentSet = [
            (Role::Arg0, Span::single(1, 0)),
            (Role::Arg1, Span::single(1, 2)),
        ]
        .into_iter()
        .collect();
        // Wrong second set: concats ["E07"] vs ["E05","E03"] -> dist 2/2 -> 0.
        // Instead pick one yielding 0.25: need dist such that 1-d/m = 0.25.
        // Use args whose concat is ["E05","E05","E05","E07"] vs oracle
        // ["E05","E03"]: dist 3, max len 4 -> 0.25.
        let a2: ArgumentSet = [
            (Role::Arg0, Span { utt: 1, start: 3, end: 3 }),
            (Role::Arg1, Span { utt: 1, start: 3, end: 3 }),
            (Role::Arg2, Span { utt: 1, start: 3, end: 3 }),
            (Role::Arg3, Span { utt: 1, start: 2, end: 2 }),
        ]
        .into_iter()
        .collect();
        let m = match_sets(&[a1, a2], &rewrite, &inst).unwrap();
        assert_eq!(m.per_predicate[0].get(), 1.0);
        assert_eq!(m.per_predicate[1].get(), 0.25);
        assert_eq!(m.overall.get(), 0.5);
    }

    #[test]
    fn predicate_missing_from_rewrite_scores_against_empty() {
        let inst = instance_with_last(&["E03", "v1", "E07"], &[1]);
        let rewrite = seq(&["E03", "E07"]); // rewriter destroyed the predicate
        let args: ArgumentSet = [(Role::Arg0, Span::single(1, 0))].into_iter().collect();
        let m = match_sets(&[args], &rewrite, &inst).unwrap();
        // concats ["E03"] vs [] -> dist 1, max 1 -> 0.
        assert_eq!(m.per_predicate[0].get(), 0.0);

        // Both empty: vacuous agreement.
        let m = match_sets(&[ArgumentSet::new()], &rewrite, &inst).unwrap();
        assert_eq!(m.per_predicate[0].get(), 1.0);
    }

    #[test]
    fn duplicate_predicates_align_by_occurrence() {
        let inst = instance_with_last(&["E03", "v1", "E07", "E05", "v1", "E03"], &[1, 4]);
        let rewrite = seq(&["E03", "v1", "E07", "E05", "v1", "E03"]);
        let a1: ArgumentSet = [
            (Role::Arg0, Span::single(1, 0)),
            (Role::Arg1, Span::single(1, 2)),
        ]
        .into_iter()
        .collect();
        let a2: ArgumentSet = [
            (Role::Arg0, Span::single(1, 3)),
            (Role::Arg1, Span::single(1, 5)),
        ]
        .into_iter()
        .collect();
        let m = match_sets(&[a1, a2], &rewrite, &inst).unwrap();
        assert_eq!(m.per_predicate, vec![Score::ONE, Score::ONE]);
    }

    #[test]
    fn gold_translations_always_match() {
        let corpus = generate_corpus(31, 1_000, &WorldConfig::default()).unwrap();
        for inst in &corpus {
            let m = match_sets(
                inst.gold_a.as_ref().unwrap(),
                inst.gold_b.as_ref().unwrap(),
                inst,
            )
            .unwrap();
            assert!(
                m.per_predicate.iter().all(|s| s.get() == 1.0),
                "instance {} scored {:?}",
                inst.id,
                m.per_predicate
            );
        }
    }

    #[test]
    fn permutation_covariance() {
        let corpus = generate_corpus(33, 200, &WorldConfig::default()).unwrap();
        for inst in corpus.iter().filter(|i| i.predicates.len() == 2) {
            let gold = inst.gold_a.as_ref().unwrap().clone();
            let rewrite = inst.gold_b.as_ref().unwrap();
            // Swap predicate order (and argument sets with them).
            let mut swapped = inst.clone();
            swapped.predicates.reverse();
            let mut rev_gold = gold.clone();
            rev_gold.reverse();
            let m1 = match_sets(&gold, rewrite, inst).unwrap();
            let m2 = match_sets(&rev_gold, rewrite, &swapped).unwrap();
            let mut rev1 = m1.per_predicate.clone();
            rev1.reverse();
            assert_eq!(rev1, m2.per_predicate);
            assert_eq!(m1.overall, m2.overall);
        }
    }
}
