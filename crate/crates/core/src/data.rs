//! Domain types shared across the crate: token sequences, dialogue
//! instances, predicate references, spans, and argument sets.
//!
//! The serde layout of [`Instance`] is the on-disk JSONL schema: keys
//! `id`, `utterances`, `predicates`, `gold_a`, `gold_b`, with role maps
//! serialized in canonical argument order. Serialization is canonical, so
//! parse → re-serialize round-trips byte-identically.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// An ordered list of whitespace-free token identifiers. May be empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Result<Self, CoreError> {
        for t in &tokens {
            if t.chars().any(char::is_whitespace) {
                return Err(CoreError::InvalidToken(t.clone()));
            }
        }
        Ok(TokenSeq(tokens))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, idx: usize) -> Option<&str> {
        self.0.get(idx).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl TryFrom<Vec<String>> for TokenSeq {
    type Error = CoreError;
    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        TokenSeq::new(tokens)
    }
}

impl From<TokenSeq> for Vec<String> {
    fn from(seq: TokenSeq) -> Vec<String> {
        seq.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    A,
    B,
}

/// One dialogue turn. Tokens are nonempty (validated with the instance).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub tokens: TokenSeq,
}

/// A predicate token position; always inside the last utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateRef {
    pub utt: usize,
    pub idx: usize,
}

/// An inclusive token span inside one utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub utt: usize,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn single(utt: usize, idx: usize) -> Self {
        Span {
            utt,
            start: idx,
            end: idx,
        }
    }
}

/// Semantic roles in canonical concatenation order. The derived `Ord`
/// follows declaration order, which is the canonical order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Role {
    #[serde(rename = "ARG0")]
    Arg0,
    #[serde(rename = "ARG1")]
    Arg1,
    #[serde(rename = "ARG2")]
    Arg2,
    #[serde(rename = "ARG3")]
    Arg3,
    #[serde(rename = "ARG4")]
    Arg4,
    #[serde(rename = "ARGM-TMP")]
    ArgmTmp,
    #[serde(rename = "ARGM-LOC")]
    ArgmLoc,
    #[serde(rename = "ARGM-PRP")]
    ArgmPrp,
}

pub const ALL_ROLES: [Role; 8] = [
    Role::Arg0,
    Role::Arg1,
    Role::Arg2,
    Role::Arg3,
    Role::Arg4,
    Role::ArgmTmp,
    Role::ArgmLoc,
    Role::ArgmPrp,
];

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Arg0 => "ARG0",
            Role::Arg1 => "ARG1",
            Role::Arg2 => "ARG2",
            Role::Arg3 => "ARG3",
            Role::Arg4 => "ARG4",
            Role::ArgmTmp => "ARGM-TMP",
            Role::ArgmLoc => "ARGM-LOC",
            Role::ArgmPrp => "ARGM-PRP",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-predicate role→span mapping; the common translation space. Each role
/// appears at most once; iteration is always in canonical role order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArgumentSet {
    pub roles: BTreeMap<Role, Span>,
}

impl ArgumentSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, role: Role, span: Span) {
        self.roles.insert(role, span);
    }

    pub fn get(&self, role: Role) -> Option<&Span> {
        self.roles.get(&role)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Role, Span)> + '_ {
        self.roles.iter().map(|(r, s)| (*r, *s))
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }
}

impl FromIterator<(Role, Span)> for ArgumentSet {
    fn from_iter<I: IntoIterator<Item = (Role, Span)>>(iter: I) -> Self {
        ArgumentSet {
            roles: iter.into_iter().collect(),
        }
    }
}

/// A synthetic multi-utterance dialogue with predicates in the last
/// utterance and optional gold labels for both tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct Instance {
    pub id: String,
    pub utterances: Vec<Utterance>,
    pub predicates: Vec<PredicateRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold_a: Option<Vec<ArgumentSet>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold_b: Option<TokenSeq>,
}

#[derive(Deserialize)]
struct RawInstance {
    id: String,
    utterances: Vec<Utterance>,
    predicates: Vec<PredicateRef>,
    #[serde(default)]
    gold_a: Option<Vec<ArgumentSet>>,
    #[serde(default)]
    gold_b: Option<TokenSeq>,
}

impl TryFrom<RawInstance> for Instance {
    type Error = CoreError;
    fn try_from(raw: RawInstance) -> Result<Self, Self::Error> {
        let instance = Instance {
            id: raw.id,
            utterances: raw.utterances,
            predicates: raw.predicates,
            gold_a: raw.gold_a,
            gold_b: raw.gold_b,
        };
        instance.validate()?;
        Ok(instance)
    }
}

impl Instance {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.utterances.is_empty() {
            return Err(CoreError::InvalidInstance("no utterances".into()));
        }
        for (i, utt) in self.utterances.iter().enumerate() {
            if utt.tokens.is_empty() {
                return Err(CoreError::InvalidInstance(format!("utterance {i} is empty")));
            }
        }
        if self.predicates.is_empty() {
            return Err(CoreError::InvalidInstance("no predicates".into()));
        }
        let last = self.utterances.len() - 1;
        for p in &self.predicates {
            if p.utt != last {
                return Err(CoreError::InvalidInstance(format!(
                    "predicate at utterance {} is not in the last utterance",
                    p.utt
                )));
            }
            let tok = self
                .token(p.utt, p.idx)
                .ok_or(CoreError::IndexOutOfRange {
                    index: p.idx,
                    len: self.utterances[p.utt].tokens.len(),
                })?;
            if !tok.starts_with('v') {
                return Err(CoreError::InvalidInstance(format!(
                    "predicate token {tok:?} is not in the predicate vocabulary"
                )));
            }
        }
        if let Some(gold_a) = &self.gold_a {
            if gold_a.len() != self.predicates.len() {
                return Err(CoreError::InvalidInstance(format!(
                    "gold_a has {} argument sets for {} predicates",
                    gold_a.len(),
                    self.predicates.len()
                )));
            }
            for args in gold_a {
                for (_, span) in args.iter() {
                    self.check_span(&span)?;
                }
            }
        }
        Ok(())
    }

    pub fn token(&self, utt: usize, idx: usize) -> Option<&str> {
        self.utterances.get(utt).and_then(|u| u.tokens.get(idx))
    }

    pub fn last_utterance(&self) -> &Utterance {
        self.utterances.last().expect("validated nonempty")
    }

    pub fn last_index(&self) -> usize {
        self.utterances.len() - 1
    }

    pub fn check_span(&self, span: &Span) -> Result<(), CoreError> {
        let invalid = |reason: &str| CoreError::InvalidSpan {
            utt: span.utt,
            start: span.start,
            end: span.end,
            reason: reason.into(),
        };
        let utt = self
            .utterances
            .get(span.utt)
            .ok_or_else(|| invalid("utterance index out of range"))?;
        if span.start > span.end {
            return Err(invalid("start after end"));
        }
        if span.end >= utt.tokens.len() {
            return Err(invalid("end past utterance length"));
        }
        Ok(())
    }

    /// Tokens covered by a span, after validity checks.
    pub fn span_tokens(&self, span: &Span) -> Result<&[String], CoreError> {
        self.check_span(span)?;
        Ok(&self.utterances[span.utt].tokens.tokens()[span.start..=span.end])
    }
}

/// Flattened view of an instance: the dialogue as one token sequence with
/// global positions, as the task models see it.
#[derive(Debug)]
pub struct Flattened<'a> {
    pub instance: &'a Instance,
    offsets: Vec<usize>,
    total: usize,
}

impl<'a> Flattened<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        let mut offsets = Vec::with_capacity(instance.utterances.len());
        let mut total = 0;
        for utt in &instance.utterances {
            offsets.push(total);
            total += utt.tokens.len();
        }
        Flattened {
            instance,
            offsets,
            total,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn global(&self, utt: usize, idx: usize) -> usize {
        self.offsets[utt] + idx
    }

    /// (utterance, token) location of a global position.
    pub fn loc(&self, global: usize) -> (usize, usize) {
        debug_assert!(global < self.total);
        let utt = match self.offsets.binary_search(&global) {
            Ok(u) => u,
            Err(u) => u - 1,
        };
        (utt, global - self.offsets[utt])
    }

    pub fn token(&self, global: usize) -> &str {
        let (utt, idx) = self.loc(global);
        self.instance.token(utt, idx).expect("in range")
    }

    /// Global position of the first last-utterance token.
    pub fn last_start(&self) -> usize {
        *self.offsets.last().expect("validated nonempty")
    }

    pub fn in_last(&self, global: usize) -> bool {
        global >= self.last_start()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.instance
            .utterances
            .iter()
            .flat_map(|u| u.tokens.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_instance() -> Instance {
        serde_json::from_str(
            r#"{"id":"t0","utterances":[
                {"speaker":"A","tokens":["E01","v2","E05"]},
                {"speaker":"B","tokens":["PRN","v3","E01"]}],
               "predicates":[{"utt":1,"idx":1}],
               "gold_a":[{"ARG0":{"utt":0,"start":0,"end":0},"ARG1":{"utt":1,"start":2,"end":2}}],
               "gold_b":["E05","v3","E01"]}"#,
        )
        .unwrap()
    }

    #[test]
    fn roundtrip_is_byte_identical_and_canonical() {
        let inst = toy_instance();
        let ser = serde_json::to_string(&inst).unwrap();
        let reparsed: Instance = serde_json::from_str(&ser).unwrap();
        assert_eq!(serde_json::to_string(&reparsed).unwrap(), ser);

        // Role keys deserialized in reverse order serialize canonically.
        let scrambled = r#"{"ARG1":{"utt":0,"start":1,"end":1},"ARG0":{"utt":0,"start":0,"end":0}}"#;
        let args: ArgumentSet = serde_json::from_str(scrambled).unwrap();
        let ser = serde_json::to_string(&args).unwrap();
        assert!(ser.starts_with(r#"{"ARG0""#), "canonical role order: {ser}");
    }

    #[test]
    fn token_seq_rejects_whitespace() {
        assert!(TokenSeq::new(vec!["a b".into()]).is_err());
        assert!(TokenSeq::new(vec![]).unwrap().is_empty());
    }

    #[test]
    fn instance_validation_catches_bad_shapes() {
        let no_preds = r#"{"id":"x","utterances":[{"speaker":"A","tokens":["E01"]}],"predicates":[]}"#;
        assert!(serde_json::from_str::<Instance>(no_preds).is_err());

        let pred_not_last = r#"{"id":"x","utterances":[
            {"speaker":"A","tokens":["v1"]},{"speaker":"B","tokens":["v2"]}],
            "predicates":[{"utt":0,"idx":0}]}"#;
        assert!(serde_json::from_str::<Instance>(pred_not_last).is_err());

        let gold_a_mismatch = r#"{"id":"x","utterances":[{"speaker":"A","tokens":["E01"]},
            {"speaker":"B","tokens":["v2"]}],
            "predicates":[{"utt":1,"idx":0}],"gold_a":[]}"#;
        assert!(serde_json::from_str::<Instance>(gold_a_mismatch).is_err());
    }

    #[test]
    fn flattened_positions() {
        let inst = toy_instance();
        let flat = Flattened::new(&inst);
        assert_eq!(flat.total(), 6);
        assert_eq!(flat.global(1, 0), 3);
        assert_eq!(flat.loc(4), (1, 1));
        assert_eq!(flat.token(0), "E01");
        assert_eq!(flat.token(5), "E01");
        assert_eq!(flat.last_start(), 3);
        assert!(flat.in_last(3) && !flat.in_last(2));
    }

    #[test]
    fn span_tokens_validates() {
        let inst = toy_instance();
        let ok = Span { utt: 0, start: 0, end: 1 };
        assert_eq!(inst.span_tokens(&ok).unwrap(), &["E01", "v2"]);
        let bad = Span { utt: 0, start: 2, end: 5 };
        assert!(inst.span_tokens(&bad).is_err());
    }
}
