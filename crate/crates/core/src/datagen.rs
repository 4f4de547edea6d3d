//! Seeded generator for the synthetic friend-task world, plus the
//! deterministic sentence-level labeler used as the translation oracle.
//!
//! The world: context utterances are SVO triples `Ei vk Ej` with an optional
//! leading filler, so subject and object antecedents always exist. The last
//! utterance is one or more SVO clauses whose subject/object slots are an
//! explicit entity, the pronoun `PRN`, or elided. Gold for the span task
//! points each ARG0/ARG1 at the resolved entity occurrence (context
//! occurrence for pronominal/elided slots), and gold for the rewriting task
//! is the fully resolved last utterance — so the two golds always translate
//! to the same point of the shared argument space.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{
    ArgumentSet, Instance, PredicateRef, Role, Span, Speaker, TokenSeq, Utterance,
};
use crate::error::CoreError;
use crate::rng::{derive_seed, rng_from_seed};

pub const PRONOUN_TOKEN: &str = "PRN";
pub const N_FILLERS: usize = 5;
const FILLER_RATE: f64 = 0.3;

pub fn entity_token(i: usize) -> String {
    format!("E{i:02}")
}

pub fn predicate_token(i: usize) -> String {
    format!("v{i}")
}

pub fn filler_token(i: usize) -> String {
    format!("f{i}")
}

/// Entity test used by the oracle labeler: `E` followed by digits.
pub fn is_entity_token(tok: &str) -> bool {
    tok.strip_prefix('E')
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub n_entities: usize,
    pub n_predicates: usize,
    pub context_min: usize,
    pub context_max: usize,
    pub pronoun_rate: f64,
    pub ellipsis_rate: f64,
    pub max_predicates_last: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            n_entities: 20,
            n_predicates: 10,
            context_min: 2,
            context_max: 4,
            pronoun_rate: 0.4,
            ellipsis_rate: 0.3,
            max_predicates_last: 2,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        let err = |m: &str| Err(CoreError::InvalidConfig(m.into()));
        if self.n_entities < 1 || self.n_predicates < 1 || self.max_predicates_last < 1 {
            return err("vocabulary and predicate counts must be >= 1");
        }
        if self.context_min < 1 || self.context_min > self.context_max {
            return err("context utterance range must satisfy 1 <= min <= max");
        }
        if !(0.0..=1.0).contains(&self.pronoun_rate) || !(0.0..=1.0).contains(&self.ellipsis_rate)
        {
            return err("pronoun_rate and ellipsis_rate must be in [0,1]");
        }
        if self.pronoun_rate + self.ellipsis_rate > 1.0 {
            return err("pronoun_rate + ellipsis_rate must not exceed 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Subject,
    Object,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotForm {
    Explicit,
    Pronoun,
    Elided,
}

/// One sampling decision of the generator, exposed for distribution tests.
#[derive(Debug, Clone, Copy)]
pub struct SlotTrace {
    pub clause: usize,
    pub kind: SlotKind,
    pub eligible: bool,
    pub form: SlotForm,
}

#[derive(Debug, Clone, Default)]
pub struct GenTrace {
    pub slots: Vec<SlotTrace>,
}

/// Deterministic corpus generation; bit-identical for equal `(seed, n, cfg)`.
pub fn generate_corpus(seed: u64, n: usize, cfg: &WorldConfig) -> Result<Vec<Instance>, CoreError> {
    Ok(generate_corpus_traced(seed, n, cfg)?
        .into_iter()
        .map(|(inst, _)| inst)
        .collect())
}

/// As [`generate_corpus`], also returning the per-instance sampling traces.
pub fn generate_corpus_traced(
    seed: u64,
    n: usize,
    cfg: &WorldConfig,
) -> Result<Vec<(Instance, GenTrace)>, CoreError> {
    if n < 1 {
        return Err(CoreError::InvalidConfig("corpus size must be >= 1".into()));
    }
    cfg.validate()?;
    (0..n)
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            Ok(generate_instance(&mut rng, cfg, format!("s{seed}-{i:05}")))
        })
        .collect()
}

struct ContextMention {
    utt: usize,
    idx: usize,
    entity: String,
}

fn generate_instance(rng: &mut ChaCha8Rng, cfg: &WorldConfig, id: String) -> (Instance, GenTrace) {
    let n_ctx = rng.gen_range(cfg.context_min..=cfg.context_max);
    let mut utterances = Vec::with_capacity(n_ctx + 1);
    let mut subjects: Vec<ContextMention> = Vec::with_capacity(n_ctx);
    let mut objects: Vec<ContextMention> = Vec::with_capacity(n_ctx);

    for u in 0..n_ctx {
        let mut tokens: Vec<String> = Vec::with_capacity(4);
        if rng.gen_bool(FILLER_RATE) {
            tokens.push(filler_token(rng.gen_range(0..N_FILLERS)));
        }
        let subj = entity_token(rng.gen_range(0..cfg.n_entities));
        subjects.push(ContextMention {
            utt: u,
            idx: tokens.len(),
            entity: subj.clone(),
        });
        tokens.push(subj);
        tokens.push(predicate_token(rng.gen_range(0..cfg.n_predicates)));
        let obj = entity_token(rng.gen_range(0..cfg.n_entities));
        objects.push(ContextMention {
            utt: u,
            idx: tokens.len(),
            entity: obj.clone(),
        });
        tokens.push(obj);
        utterances.push(Utterance {
            speaker: speaker_for(u),
            tokens: TokenSeq::new(tokens).expect("vocabulary tokens are whitespace-free"),
        });
    }

    // Most recent context mentions; recency makes the antecedent unique.
    let antecedent_subject = subjects.last().expect("context_min >= 1");
    let antecedent_object = objects.last().expect("context_min >= 1");

    let n_clauses = rng.gen_range(1..=cfg.max_predicates_last);
    let last_utt_index = n_ctx;
    let mut trace = GenTrace::default();
    let mut surface: Vec<String> = Vec::new();
    let mut resolved: Vec<String> = Vec::new();
    let mut predicates = Vec::with_capacity(n_clauses);
    let mut gold_a = Vec::with_capacity(n_clauses);
    let mut prev_object_elided = false;

    for clause in 0..n_clauses {
        let pred_tok = predicate_token(rng.gen_range(0..cfg.n_predicates));

        // A subject right after an elided object would need a second
        // insertion at the same slot, which the one-span-per-slot rewrite
        // decode cannot express; such slots are ineligible and stay explicit.
        let subj_eligible = !(clause > 0 && prev_object_elided);
        let subj_form = sample_form(rng, cfg, subj_eligible);
        trace.slots.push(SlotTrace {
            clause,
            kind: SlotKind::Subject,
            eligible: subj_eligible,
            form: subj_form,
        });
        let subj_span = match subj_form {
            SlotForm::Explicit => {
                let entity = entity_token(rng.gen_range(0..cfg.n_entities));
                surface.push(entity.clone());
                resolved.push(entity);
                Span::single(last_utt_index, surface.len() - 1)
            }
            SlotForm::Pronoun => {
                surface.push(PRONOUN_TOKEN.to_string());
                resolved.push(antecedent_subject.entity.clone());
                Span::single(antecedent_subject.utt, antecedent_subject.idx)
            }
            SlotForm::Elided => {
                resolved.push(antecedent_subject.entity.clone());
                Span::single(antecedent_subject.utt, antecedent_subject.idx)
            }
        };

        surface.push(pred_tok.clone());
        resolved.push(pred_tok);
        predicates.push(PredicateRef {
            utt: last_utt_index,
            idx: surface.len() - 1,
        });

        let obj_form = sample_form(rng, cfg, true);
        trace.slots.push(SlotTrace {
            clause,
            kind: SlotKind::Object,
            eligible: true,
            form: obj_form,
        });
        let obj_span = match obj_form {
            SlotForm::Explicit => {
                let entity = entity_token(rng.gen_range(0..cfg.n_entities));
                surface.push(entity.clone());
                resolved.push(entity);
                Span::single(last_utt_index, surface.len() - 1)
            }
            SlotForm::Pronoun => {
                surface.push(PRONOUN_TOKEN.to_string());
                resolved.push(antecedent_object.entity.clone());
                Span::single(antecedent_object.utt, antecedent_object.idx)
            }
            SlotForm::Elided => {
                resolved.push(antecedent_object.entity.clone());
                Span::single(antecedent_object.utt, antecedent_object.idx)
            }
        };
        prev_object_elided = obj_form == SlotForm::Elided;

        let mut args = ArgumentSet::new();
        args.insert(Role::Arg0, subj_span);
        args.insert(Role::Arg1, obj_span);
        gold_a.push(args);
    }

    utterances.push(Utterance {
        speaker: speaker_for(n_ctx),
        tokens: TokenSeq::new(surface).expect("vocabulary tokens are whitespace-free"),
    });

    let instance = Instance {
        id,
        utterances,
        predicates,
        gold_a: Some(gold_a),
        gold_b: Some(TokenSeq::new(resolved).expect("vocabulary tokens are whitespace-free")),
    };
    debug_assert!(instance.validate().is_ok());
    (instance, trace)
}

fn speaker_for(utt: usize) -> Speaker {
    if utt % 2 == 0 {
        Speaker::A
    } else {
        Speaker::B
    }
}

fn sample_form(rng: &mut ChaCha8Rng, cfg: &WorldConfig, eligible: bool) -> SlotForm {
    if !eligible {
        return SlotForm::Explicit;
    }
    let u: f64 = rng.gen();
    if u < cfg.pronoun_rate {
        SlotForm::Pronoun
    } else if u < cfg.pronoun_rate + cfg.ellipsis_rate {
        SlotForm::Elided
    } else {
        SlotForm::Explicit
    }
}

/// Fixed, parameter-free sentence-level labeler: for each predicate index,
/// ARG0 is the single-token span right before it when that token is an
/// entity token, ARG1 the one right after. Spans index into the given
/// sequence (utterance 0).
pub fn oracle_labeler(
    utterance: &TokenSeq,
    predicates: &[usize],
) -> Result<Vec<ArgumentSet>, CoreError> {
    predicates
        .iter()
        .map(|&idx| {
            if idx >= utterance.len() {
                return Err(CoreError::IndexOutOfRange {
                    index: idx,
                    len: utterance.len(),
                });
            }
            let mut args = ArgumentSet::new();
            if idx > 0 && is_entity_token(utterance.get(idx - 1).expect("checked")) {
                args.insert(Role::Arg0, Span::single(0, idx - 1));
            }
            if let Some(next) = utterance.get(idx + 1) {
                if is_entity_token(next) {
                    args.insert(Role::Arg1, Span::single(0, idx + 1));
                }
            }
            Ok(args)
        })
        .collect()
}
