//! Numeric primitives shared by all modules: bounded scores, geometric mean,
//! and normalized token-level edit distance.

use serde::{Deserialize, Serialize};

use crate::data::TokenSeq;
use crate::error::CoreError;

/// A real number in [0,1]. Construction outside the range is an error.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Score(f64);

impl Score {
    pub const ZERO: Score = Score(0.0);
    pub const ONE: Score = Score(1.0);

    pub fn new(value: f64) -> Result<Self, CoreError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Score(value))
        } else {
            Err(CoreError::ScoreOutOfRange(value))
        }
    }

    /// Clamp into [0,1]. For values produced by convex blends of scores,
    /// where roundoff may land a hair outside the interval.
    pub fn clamped(value: f64) -> Self {
        Score(value.clamp(0.0, 1.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Score {
    type Error = CoreError;
    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Score::new(value)
    }
}

impl From<Score> for f64 {
    fn from(s: Score) -> f64 {
        s.0
    }
}

/// Geometric mean of a nonempty list of scores. Exactly 0 if any value is 0.
pub fn geometric_mean(values: &[Score]) -> Result<Score, CoreError> {
    match values {
        [] => Err(CoreError::EmptyAggregate),
        [single] => Ok(*single),
        _ => {
            if values.iter().any(|v| v.get() == 0.0) {
                return Ok(Score::ZERO);
            }
            let product: f64 = values.iter().map(|v| v.get()).product();
            let mean = if values.len() == 2 {
                product.sqrt()
            } else {
                product.powf(1.0 / values.len() as f64)
            };
            Ok(Score::clamped(mean))
        }
    }
}

/// Token-level Levenshtein distance with unit insert/delete/substitute costs.
pub fn levenshtein(a: &[String], b: &[String]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ta) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, tb) in b.iter().enumerate() {
            let sub = diag + usize::from(ta != tb);
            diag = row[j + 1];
            row[j + 1] = sub.min(diag + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

/// 1 - dist(a,b)/max(len(a),len(b)); 1.0 when both sequences are empty
/// (vacuous agreement).
pub fn norm_edit_distance_score(a: &TokenSeq, b: &TokenSeq) -> Score {
    let max_len = a.len().max(b.len());
    if max_len == 0 {
        return Score::ONE;
    }
    let dist = levenshtein(a.tokens(), b.tokens());
    Score::clamped(1.0 - dist as f64 / max_len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(tokens: &[&str]) -> TokenSeq {
        TokenSeq::new(tokens.iter().map(|t| t.to_string()).collect()).unwrap()
    }

    /// Plain recursive Levenshtein, memoized nowhere on purpose: the oracle
    /// the DP implementation is checked against.
    fn lev_oracle(a: &[String], b: &[String]) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        let sub = lev_oracle(&a[1..], &b[1..]) + usize::from(a[0] != b[0]);
        let del = lev_oracle(&a[1..], b) + 1;
        let ins = lev_oracle(a, &b[1..]) + 1;
        sub.min(del).min(ins)
    }

    #[test]
    fn score_rejects_out_of_range() {
        assert!(Score::new(-0.1).is_err());
        assert!(Score::new(1.1).is_err());
        assert!(Score::new(f64::NAN).is_err());
        assert_eq!(Score::new(0.0).unwrap().get(), 0.0);
        assert_eq!(Score::new(1.0).unwrap().get(), 1.0);
    }

    #[test]
    fn geometric_mean_examples() {
        let gm = |vals: &[f64]| {
            let scores: Vec<Score> = vals.iter().map(|&v| Score::new(v).unwrap()).collect();
            geometric_mean(&scores).unwrap().get()
        };
        assert_eq!(gm(&[0.25, 1.0]), 0.5);
        assert_eq!(gm(&[0.9]), 0.9);
        assert_eq!(gm(&[0.0, 0.8, 0.7]), 0.0);
    }

    #[test]
    fn geometric_mean_empty_errors() {
        assert!(matches!(
            geometric_mean(&[]),
            Err(CoreError::EmptyAggregate)
        ));
    }

    #[test]
    fn norm_edit_examples() {
        // dist=1, max len=2, from the recursive oracle below.
        let a = seq(&["E03"]);
        let b = seq(&["E03", "E07"]);
        assert_eq!(lev_oracle(a.tokens(), b.tokens()), 1);
        assert_eq!(norm_edit_distance_score(&a, &b).get(), 0.5);

        assert_eq!(
            norm_edit_distance_score(&seq(&["E03", "v1"]), &seq(&["E03", "v1"])).get(),
            1.0
        );
        assert_eq!(
            norm_edit_distance_score(&seq(&[]), &seq(&["E03", "E07"])).get(),
            0.0
        );
        // Both empty: vacuous agreement.
        assert_eq!(norm_edit_distance_score(&seq(&[]), &seq(&[])).get(), 1.0);
    }

    #[test]
    fn triangle_inequality_exhaustive() {
        // All token sequences of length <= 3 over a 3-token alphabet.
        let alphabet = ["a", "b", "c"];
        let mut seqs: Vec<Vec<String>> = vec![vec![]];
        let mut frontier = vec![vec![]];
        for _ in 0..3 {
            let mut next = Vec::new();
            for s in &frontier {
                for t in alphabet {
                    let mut s2: Vec<String> = s.clone();
                    s2.push(t.to_string());
                    next.push(s2);
                }
            }
            seqs.extend(next.iter().cloned());
            frontier = next;
        }
        assert_eq!(seqs.len(), 40);
        for a in &seqs {
            for b in &seqs {
                assert_eq!(levenshtein(a, b), levenshtein(b, a), "symmetry");
                for c in &seqs {
                    assert!(
                        levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c),
                        "triangle violated for {a:?} {b:?} {c:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn levenshtein_matches_recursive_oracle() {
        let alphabet = ["x", "y", "z"];
        let mut seqs: Vec<Vec<String>> = vec![vec![]];
        let mut frontier = vec![vec![]];
        for _ in 0..3 {
            let mut next = Vec::new();
            for s in &frontier {
                for t in alphabet {
                    let mut s2: Vec<String> = s.clone();
                    s2.push(t.to_string());
                    next.push(s2);
                }
            }
            seqs.extend(next.iter().cloned());
            frontier = next;
        }
        for a in &seqs {
            for b in &seqs {
                assert_eq!(levenshtein(a, b), lev_oracle(a, b));
            }
        }
    }

    proptest! {
        #[test]
        fn gm_bounded_by_min_max(vals in proptest::collection::vec(0.0f64..=1.0, 1..8)) {
            let scores: Vec<Score> = vals.iter().map(|&v| Score::new(v).unwrap()).collect();
            let gm = geometric_mean(&scores).unwrap().get();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(gm >= lo - 1e-12 && gm <= hi + 1e-12);
        }

        #[test]
        fn norm_edit_symmetric_and_reflexive(
            a in proptest::collection::vec("[a-c]{1,2}", 0..6),
            b in proptest::collection::vec("[a-c]{1,2}", 0..6),
        ) {
            let sa = TokenSeq::new(a).unwrap();
            let sb = TokenSeq::new(b).unwrap();
            prop_assert_eq!(
                norm_edit_distance_score(&sa, &sb).get(),
                norm_edit_distance_score(&sb, &sa).get()
            );
            prop_assert_eq!(norm_edit_distance_score(&sa, &sa).get(), 1.0);
        }
    }
}
