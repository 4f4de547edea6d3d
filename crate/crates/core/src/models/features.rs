//! Sparse indicator features over the synthetic world's vocabulary. These
//! stand in for a contextual encoder: token identity, position buckets
//! relative to the conditioning predicate, utterance flags, and distance
//! buckets for span scoring.

use serde::{Deserialize, Serialize};

use crate::data::Flattened;
use crate::datagen::{WorldConfig, N_FILLERS, PRONOUN_TOKEN};

/// Bump when the feature layout changes; stored in checkpoints.
pub const FEATURE_SPACE_VERSION: u32 = 1;

const REL_CLIP: i64 = 5;
const ABS_BUCKETS: usize = 8;
const DIST_LO: i64 = -4;
const DIST_HI: i64 = 11;
const DIST_BUCKETS: usize = (DIST_HI - DIST_LO + 1) as usize;

/// Candidate feature block per slot type: candidate identity one-hots
/// (validated at construction to a fixed width), candidate class (4),
/// absolute position buckets, distance buckets, in-last-utterance flag, the
/// two local-syntax flags, and a most-recent-context-utterance flag. The
/// identity block carries no signal for antecedent choice by construction
/// of the world, which keeps small-sample models honestly imperfect.
const SPAN_STRUCT: usize = 4 + ABS_BUCKETS + DIST_BUCKETS + 4;
/// Slot types: own-token class (entity/predicate/pronoun/other/trailing)
/// crossed with left-neighbor class (subject-like entity / object-like
/// entity / predicate / pronoun / other-or-none). An entity right after a
/// predicate is object-like; the distinction separates "the subject is
/// standing right there" from "that entity is the previous clause's
/// object". A pronoun on the left must not share a class with an absent
/// neighbor: a predicate after a pronoun needs no insertion (the pronoun's
/// own slot takes it), a predicate at utterance start always does.
const SLOT_TYPES: usize = 5 * 5;
/// Per-predicate-frame structural block for the labeling task: relative
/// position buckets, same-utterance flag, two syntax flags, the
/// most-recent-context flag, and the two argument-filled flags.
const A_BLOCK: usize = (2 * REL_CLIP as usize + 1) + 1 + 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokenClass {
    Entity = 0,
    Predicate = 1,
    Pronoun = 2,
    Other = 3,
}

/// Token sits in the last context utterance (the one right before the
/// utterance being labeled or rewritten).
fn in_latest_context(flat: &Flattened<'_>, global: usize) -> bool {
    let (utt, _) = flat.loc(global);
    utt + 1 == flat.instance.last_index()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub n_entities: usize,
    pub n_predicates: usize,
}

impl Default for FeatureSpace {
    fn default() -> Self {
        FeatureSpace::from_world(&WorldConfig::default())
    }
}

impl FeatureSpace {
    pub fn from_world(cfg: &WorldConfig) -> Self {
        FeatureSpace {
            n_entities: cfg.n_entities,
            n_predicates: cfg.n_predicates,
        }
    }

    /// Entities, predicates, pronoun, fillers, and an unknown bucket.
    pub fn vocab_size(&self) -> usize {
        self.n_entities + self.n_predicates + 1 + N_FILLERS + 1
    }

    pub fn token_id(&self, tok: &str) -> usize {
        let unk = self.vocab_size() - 1;
        if tok == PRONOUN_TOKEN {
            return self.n_entities + self.n_predicates;
        }
        let parsed = |rest: &str| -> Option<usize> {
            if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            rest.parse().ok()
        };
        if let Some(i) = tok.strip_prefix('E').and_then(parsed) {
            if i < self.n_entities {
                return i;
            }
        } else if let Some(i) = tok.strip_prefix('v').and_then(parsed) {
            if i < self.n_predicates {
                return self.n_entities + i;
            }
        } else if let Some(i) = tok.strip_prefix('f').and_then(parsed) {
            if i < N_FILLERS {
                return self.n_entities + self.n_predicates + 1 + i;
            }
        }
        unk
    }

    /// Labeling-task features: identity, relative-position bucket clipped to
    /// +/-5, same-utterance-as-predicate flag, the two local-syntax flags
    /// (token sits right before / right after a predicate token in its
    /// utterance, the subject/object positions of the SVO world), a
    /// most-recent-context-utterance flag (where recency puts antecedents),
    /// and two context-token flags marking whether the conditioning
    /// predicate already has an explicit entity in its subject/object
    /// position. Without the last two, whether a context entity is an
    /// argument would be unknowable from the features and the model could
    /// only bet on corpus frequencies.
    pub fn dim_a(&self) -> usize {
        self.vocab_size() + (self.n_predicates + 1) * A_BLOCK
    }

    /// Predicate-frame index: each predicate token gets its own block of
    /// structural weights (out-of-vocabulary predicates share the last one).
    /// The world's argument rules do not depend on the predicate, so the
    /// per-frame split leaves the ceiling unchanged while giving each frame
    /// its own sample budget: a 100-instance training set genuinely
    /// underfits, the way a few-shot corpus should.
    fn frame(&self, tok: &str) -> usize {
        let id = self.token_id(tok);
        if (self.n_entities..self.n_entities + self.n_predicates).contains(&id) {
            id - self.n_entities
        } else {
            self.n_predicates
        }
    }

    /// Rewriting-task keep/delete features live in one identity block; the
    /// span scorers use slot-type-conditioned blocks of structural candidate
    /// features. A slot's type is the pair (its own token class, its left
    /// neighbor's class): the per-slot softmax over candidates only sees
    /// feature *differences*, so slot information must gate which candidate
    /// weights apply rather than add a constant offset.
    pub fn dim_b(&self) -> usize {
        self.vocab_size() + SLOT_TYPES * (self.n_predicates + 1) * self.span_block()
    }

    fn span_block(&self) -> usize {
        self.vocab_size() + SPAN_STRUCT
    }

    /// Frame of the predicate governing an insertion slot: the nearest
    /// predicate token of the last utterance by absolute distance, ties to
    /// the right (subjects precede their predicate, objects follow theirs).
    fn governing_frame(&self, flat: &Flattened<'_>, slot_global: usize) -> usize {
        let last_start = flat.last_start();
        let total = flat.total();
        let mut best: Option<(usize, usize)> = None; // (distance, frame)
        for g in last_start..total {
            if self.token_class(flat.token(g)) == TokenClass::Predicate {
                let dist = slot_global.abs_diff(g) * 2 + usize::from(g < slot_global);
                let frame = self.frame(flat.token(g));
                if best.is_none_or(|(d, _)| dist < d) {
                    best = Some((dist, frame));
                }
            }
        }
        best.map(|(_, f)| f).unwrap_or(self.n_predicates)
    }

    /// (right-before-predicate, right-after-predicate) within the token's
    /// own utterance.
    fn syntax_flags(&self, flat: &Flattened<'_>, global: usize) -> (bool, bool) {
        let (utt, idx) = flat.loc(global);
        let tokens = &flat.instance.utterances[utt].tokens;
        let next_is_pred = tokens
            .get(idx + 1)
            .is_some_and(|t| self.token_class(t) == TokenClass::Predicate);
        let prev_is_pred = idx > 0
            && tokens
                .get(idx - 1)
                .is_some_and(|t| self.token_class(t) == TokenClass::Predicate);
        (next_is_pred, prev_is_pred)
    }

    fn token_class(&self, tok: &str) -> TokenClass {
        let id = self.token_id(tok);
        if id < self.n_entities {
            TokenClass::Entity
        } else if id < self.n_entities + self.n_predicates {
            TokenClass::Predicate
        } else if id == self.n_entities + self.n_predicates {
            TokenClass::Pronoun
        } else {
            TokenClass::Other
        }
    }

    pub(crate) fn a_features(
        &self,
        flat: &Flattened<'_>,
        pred_global: usize,
        token_global: usize,
        out: &mut Vec<u32>,
    ) {
        out.clear();
        let v = self.vocab_size();
        out.push(self.token_id(flat.token(token_global)) as u32);
        let base = v + self.frame(flat.token(pred_global)) * A_BLOCK;
        let rel = (token_global as i64 - pred_global as i64).clamp(-REL_CLIP, REL_CLIP);
        out.push((base + (rel + REL_CLIP) as usize) as u32);
        let (tok_utt, _) = flat.loc(token_global);
        let (pred_utt, _) = flat.loc(pred_global);
        let flags_base = base + 2 * REL_CLIP as usize + 1;
        if tok_utt == pred_utt {
            out.push(flags_base as u32);
        }
        let (next_is_pred, prev_is_pred) = self.syntax_flags(flat, token_global);
        if next_is_pred {
            out.push((flags_base + 1) as u32);
        }
        if prev_is_pred {
            out.push((flags_base + 2) as u32);
        }
        if in_latest_context(flat, token_global) {
            out.push((flags_base + 3) as u32);
        }
        if tok_utt != pred_utt {
            let (pred_u, pred_i) = flat.loc(pred_global);
            let tokens = &flat.instance.utterances[pred_u].tokens;
            let class = |i: usize| tokens.get(i).map(|t| self.token_class(t));
            // Subject filled in place: entity right before the predicate
            // that is not itself the previous clause's object (an entity
            // right after a predicate is object-like).
            let subj_filled = pred_i > 0
                && class(pred_i - 1) == Some(TokenClass::Entity)
                && !(pred_i > 1 && class(pred_i - 2) == Some(TokenClass::Predicate));
            // Object filled in place: entity right after the predicate that
            // is not the next clause's subject (entity followed by another
            // predicate stays ambiguous).
            let obj_filled = class(pred_i + 1) == Some(TokenClass::Entity)
                && class(pred_i + 2) != Some(TokenClass::Predicate);
            if subj_filled {
                out.push((flags_base + 4) as u32);
            }
            if obj_filled {
                out.push((flags_base + 5) as u32);
            }
        }
    }

    /// Keep/delete decision features for a last-utterance token: identity.
    pub(crate) fn keep_features(&self, flat: &Flattened<'_>, global: usize, out: &mut Vec<u32>) {
        out.clear();
        out.push(self.token_id(flat.token(global)) as u32);
    }

    /// The insertion slot's type: its own token class crossed with its left
    /// neighbor's class, both read off the surface utterance. Pronoun slots
    /// call for replacement, predicate-token slots may need a restored
    /// subject, predicate-left slots may need a restored object; the slot
    /// type lets each case learn its own candidate scorer, including the
    /// no-insertion sentinel.
    fn slot_type(&self, flat: &Flattened<'_>, slot_global: usize) -> usize {
        let own = if slot_global < flat.total() {
            self.token_class(flat.token(slot_global)) as usize
        } else {
            4 // trailing slot
        };
        let last_start = flat.last_start();
        let left = if slot_global > last_start {
            match self.token_class(flat.token(slot_global - 1)) {
                TokenClass::Entity => {
                    let object_like = slot_global - 1 > last_start
                        && self.token_class(flat.token(slot_global - 2))
                            == TokenClass::Predicate;
                    if object_like {
                        1
                    } else {
                        0
                    }
                }
                TokenClass::Predicate => 2,
                TokenClass::Pronoun => 3,
                TokenClass::Other => 4,
            }
        } else {
            4 // slot at utterance start
        };
        own * 5 + left
    }

    /// Span-scoring features for candidate `cand` against insertion slot `slot`
    /// (slot in 0..=L over the last utterance; slot L is the trailing slot).
    pub(crate) fn span_features(
        &self,
        flat: &Flattened<'_>,
        cand: usize,
        slot: usize,
        out: &mut Vec<u32>,
    ) {
        out.clear();
        let slot_global = flat.last_start() + slot;
        let v = self.vocab_size();
        let block = self.slot_type(flat, slot_global) * (self.n_predicates + 1)
            + self.governing_frame(flat, slot_global);
        let base = v + block * self.span_block();

        out.push((base + self.token_id(flat.token(cand))) as u32);
        let s = base + v;
        out.push((s + self.token_class(flat.token(cand)) as usize) as u32);
        out.push((s + 4 + cand.min(ABS_BUCKETS - 1)) as u32);
        let dist = (slot_global as i64 - cand as i64).clamp(DIST_LO, DIST_HI);
        out.push((s + 4 + ABS_BUCKETS + (dist - DIST_LO) as usize) as u32);
        let flags = s + 4 + ABS_BUCKETS + DIST_BUCKETS;
        if flat.in_last(cand) {
            out.push(flags as u32);
        }
        let (next_is_pred, prev_is_pred) = self.syntax_flags(flat, cand);
        if next_is_pred {
            out.push((flags + 1) as u32);
        }
        if prev_is_pred {
            out.push((flags + 2) as u32);
        }
        if in_latest_context(flat, cand) {
            out.push((flags + 3) as u32);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Instance;

    #[test]
    fn token_ids_partition_vocabulary() {
        let space = FeatureSpace::default();
        assert_eq!(space.vocab_size(), 20 + 10 + 1 + 5 + 1);
        assert_eq!(space.token_id("E00"), 0);
        assert_eq!(space.token_id("E19"), 19);
        assert_eq!(space.token_id("v0"), 20);
        assert_eq!(space.token_id("v9"), 29);
        assert_eq!(space.token_id("PRN"), 30);
        assert_eq!(space.token_id("f0"), 31);
        assert_eq!(space.token_id("f4"), 35);
        // Out-of-vocabulary tokens share the unknown bucket.
        assert_eq!(space.token_id("E99"), 36);
        assert_eq!(space.token_id("whatever"), 36);
        assert_eq!(space.token_id("Exy"), 36);
    }

    #[test]
    fn feature_indices_stay_in_bounds() {
        let space = FeatureSpace::default();
        let inst: Instance = serde_json::from_str(
            r#"{"id":"t","utterances":[
                {"speaker":"A","tokens":["f1","E01","v2","E05"]},
                {"speaker":"B","tokens":["PRN","v3","E01"]}],
               "predicates":[{"utt":1,"idx":1}]}"#,
        )
        .unwrap();
        let flat = Flattened::new(&inst);
        let mut buf = Vec::new();
        let pred = flat.global(1, 1);
        for t in 0..flat.total() {
            space.a_features(&flat, pred, t, &mut buf);
            assert!(buf.iter().all(|&f| (f as usize) < space.dim_a()));
        }
        let last_len = inst.last_utterance().tokens.len();
        for slot in 0..=last_len {
            for cand in 0..flat.total() {
                space.span_features(&flat, cand, slot, &mut buf);
                assert!(buf.iter().all(|&f| (f as usize) < space.dim_b()));
                assert!(buf.len() >= 5 && buf.len() <= 8);
            }
        }
    }
}
