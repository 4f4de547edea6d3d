//! Evaluation metrics: span precision/recall/F1 for the labeling task;
//! word error rate, Rouge-L, and exact match for the rewriting task.
//!
//! Corpus-level aggregation is micro-averaged throughout: counts are summed
//! before division, and reports label the averaging accordingly.

use serde::{Deserialize, Serialize};

use crate::data::{ArgumentSet, TokenSeq};
use crate::error::CoreError;
use crate::num::levenshtein;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Micro-average counts for span PRF: sum across instances, divide once.
#[derive(Debug, Clone, Copy, Default)]
pub struct PrfCounts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl PrfCounts {
    /// Accumulate one instance: argument sets are parallel per predicate and
    /// an argument is correct iff predicate index, role, and span all match.
    pub fn add_sets(&mut self, predicted: &[ArgumentSet], gold: &[ArgumentSet]) {
        debug_assert_eq!(predicted.len(), gold.len());
        for (p, g) in predicted.iter().zip(gold) {
            self.predicted += p.len();
            self.gold += g.len();
            self.correct += p
                .iter()
                .filter(|(role, span)| g.get(*role) == Some(span))
                .count();
        }
    }

    pub fn prf(&self) -> Prf {
        let precision = if self.predicted == 0 {
            if self.gold == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.correct as f64 / self.predicted as f64
        };
        let recall = if self.gold == 0 {
            if self.predicted == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.correct as f64 / self.gold as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

/// PRF over one instance's predicted vs gold argument sets.
pub fn span_prf(predicted: &[ArgumentSet], gold: &[ArgumentSet]) -> Prf {
    let mut counts = PrfCounts::default();
    counts.add_sets(predicted, gold);
    counts.prf()
}

/// Token-level Levenshtein(hyp, ref) / len(ref); may exceed 1.
pub fn wer(hyp: &TokenSeq, reference: &TokenSeq) -> Result<f64, CoreError> {
    if reference.is_empty() {
        return Err(CoreError::EmptyReference);
    }
    Ok(levenshtein(hyp.tokens(), reference.tokens()) as f64 / reference.len() as f64)
}

/// Length of the longest common subsequence of two token sequences.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; b.len() + 1];
    for ta in a {
        let mut diag = 0;
        for (j, tb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if ta == tb {
                diag + 1
            } else {
                up.max(row[j])
            };
            diag = up;
        }
    }
    row[b.len()]
}

/// LCS-based balanced F1: P = LCS/len(hyp), R = LCS/len(ref).
pub fn rouge_l(hyp: &TokenSeq, reference: &TokenSeq) -> f64 {
    if hyp.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(hyp.tokens(), reference.tokens()) as f64;
    let p = lcs / hyp.len() as f64;
    let r = lcs / reference.len() as f64;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn exact_match(hyp: &TokenSeq, reference: &TokenSeq) -> bool {
    hyp == reference
}

/// Micro-averaged corpus metrics for the rewriting task.
#[derive(Debug, Clone, Copy, Default)]
pub struct RewriteEval {
    dist_sum: usize,
    ref_len_sum: usize,
    lcs_sum: usize,
    hyp_len_sum: usize,
    em_count: usize,
    n: usize,
}

impl RewriteEval {
    pub fn add(&mut self, hyp: &TokenSeq, reference: &TokenSeq) -> Result<(), CoreError> {
        if reference.is_empty() {
            return Err(CoreError::EmptyReference);
        }
        self.dist_sum += levenshtein(hyp.tokens(), reference.tokens());
        self.ref_len_sum += reference.len();
        self.lcs_sum += lcs_len(hyp.tokens(), reference.tokens());
        self.hyp_len_sum += hyp.len();
        self.em_count += usize::from(exact_match(hyp, reference));
        self.n += 1;
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn wer(&self) -> f64 {
        if self.ref_len_sum == 0 {
            0.0
        } else {
            self.dist_sum as f64 / self.ref_len_sum as f64
        }
    }

    pub fn rouge_l(&self) -> f64 {
        if self.hyp_len_sum == 0 || self.ref_len_sum == 0 {
            return 0.0;
        }
        let p = self.lcs_sum as f64 / self.hyp_len_sum as f64;
        let r = self.lcs_sum as f64 / self.ref_len_sum as f64;
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn em(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.em_count as f64 / self.n as f64
        }
    }
}
