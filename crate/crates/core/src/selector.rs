//! Augmented selector: blend model confidence with matching scores and gate
//! on pick thresholds. Selection for the two tasks is independent, so an
//! instance may enter one task's pseudo set and not the other's.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::matcher::MatchResult;
use crate::models::{TaskAPrediction, TaskBPrediction};
use crate::num::Score;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorConfig {
    pub alpha: f64,
    pub beta: f64,
    pub threshold_a: f64,
    pub threshold_b: f64,
    /// When set, an instance enters the labeling task's pseudo set if any
    /// predicate passes, and only passing predicates are trained on.
    pub per_predicate_selection: bool,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            alpha: 0.2,
            beta: 0.2,
            threshold_a: 0.6,
            threshold_b: 0.6,
            per_predicate_selection: false,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.beta) {
            return Err(CoreError::InvalidConfig("alpha/beta out of [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold_a) || !(0.0..=1.0).contains(&self.threshold_b) {
            return Err(CoreError::InvalidConfig("threshold out of [0,1]".into()));
        }
        Ok(())
    }
}

/// Per-pseudo-label selection outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRecord {
    pub instance_id: String,
    /// Blended per-predicate scores s_k.
    pub s_k: Vec<Score>,
    /// Blended rewrite score r_t.
    pub r_t: Score,
    /// Per-predicate threshold passes.
    pub passed_a: Vec<bool>,
    pub q_a: bool,
    pub q_b: bool,
}

/// s_k = alpha * confidence + (1 - alpha) * m_k.
pub fn score_predicate(confidence: Score, m_k: Score, alpha: f64) -> Score {
    Score::clamped(alpha * confidence.get() + (1.0 - alpha) * m_k.get())
}

/// r_t = beta * confidence + (1 - beta) * m'.
pub fn score_rewrite(confidence: Score, m_prime: Score, beta: f64) -> Score {
    Score::clamped(beta * confidence.get() + (1.0 - beta) * m_prime.get())
}

/// Threshold comparisons are >= on both tasks.
pub fn select(
    match_result: &MatchResult,
    pred_a: &TaskAPrediction,
    pred_b: &TaskBPrediction,
    instance_id: &str,
    cfg: &SelectorConfig,
) -> SelectionRecord {
    assert_eq!(
        match_result.per_predicate.len(),
        pred_a.predicates.len(),
        "predicate counts disagree between matcher and prediction"
    );
    let s_k: Vec<Score> = pred_a
        .predicates
        .iter()
        .zip(&match_result.per_predicate)
        .map(|(p, m)| score_predicate(p.confidence, *m, cfg.alpha))
        .collect();
    let passed_a: Vec<bool> = s_k.iter().map(|s| s.get() >= cfg.threshold_a).collect();
    let q_a = if cfg.per_predicate_selection {
        passed_a.iter().any(|&p| p)
    } else {
        passed_a.iter().all(|&p| p)
    };
    let r_t = score_rewrite(pred_b.confidence, match_result.overall, cfg.beta);
    let q_b = r_t.get() >= cfg.threshold_b;
    SelectionRecord {
        instance_id: instance_id.to_string(),
        s_k,
        r_t,
        passed_a,
        q_a,
        q_b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ArgumentSet;
    use crate::models::{PredicatePrediction, TaskAPrediction, TaskBPrediction};
    use crate::num::geometric_mean;
    use crate::data::TokenSeq;
    use proptest::prelude::*;

    fn s(v: f64) -> Score {
        Score::new(v).unwrap()
    }

    fn pred_a(confs: &[f64]) -> TaskAPrediction {
        TaskAPrediction {
            predicates: confs
                .iter()
                .map(|&c| PredicatePrediction {
                    arguments: ArgumentSet::new(),
                    confidence: s(c),
                })
                .collect(),
        }
    }

    fn pred_b(conf: f64) -> TaskBPrediction {
        TaskBPrediction {
            rewrite: TokenSeq::default(),
            confidence: s(conf),
            keep: vec![],
            insertions: vec![],
        }
    }

    fn match_of(per: &[f64]) -> MatchResult {
        let per_predicate: Vec<Score> = per.iter().map(|&m| s(m)).collect();
        let overall = geometric_mean(&per_predicate).unwrap();
        MatchResult {
            per_predicate,
            overall,
        }
    }

    #[test]
    fn blend_examples() {
        assert!((score_predicate(s(0.9), s(0.5), 0.2).get() - 0.58).abs() < 1e-12);
        assert_eq!(score_predicate(s(0.3), s(0.7), 1.0).get(), 0.3);
        assert_eq!(score_predicate(s(0.3), s(0.7), 0.0).get(), 0.7);
        assert!((score_rewrite(s(0.5), s(1.0), 0.2).get() - 0.9).abs() < 1e-12);
        assert_eq!(score_rewrite(s(1.0), s(1.0), 0.37).get(), 1.0);
        assert_eq!(score_rewrite(s(0.0), s(0.0), 0.37).get(), 0.0);
    }

    #[test]
    fn boundary_and_min_aggregation() {
        let cfg = SelectorConfig::default();
        // All s_k exactly at the threshold: >= semantics selects.
        let rec = select(&match_of(&[0.6, 0.6]), &pred_a(&[0.6, 0.6]), &pred_b(0.5), "x", &cfg);
        assert!(rec.s_k.iter().all(|v| (v.get() - 0.6).abs() < 1e-12));
        assert!(rec.q_a);

        // Min aggregation: one failing predicate rejects the instance.
        let rec = select(&match_of(&[1.0, 0.4]), &pred_a(&[0.5, 0.9]), &pred_b(0.5), "x", &cfg);
        assert!(rec.s_k[0].get() >= 0.6 && rec.s_k[1].get() < 0.6);
        assert!(!rec.q_a);
        assert_eq!(rec.passed_a, vec![true, false]);

        // Per-predicate mode keeps the passing predicate.
        let cfg_pp = SelectorConfig {
            per_predicate_selection: true,
            ..cfg
        };
        let rec = select(&match_of(&[1.0, 0.4]), &pred_a(&[0.5, 0.9]), &pred_b(0.5), "x", &cfg_pp);
        assert!(rec.q_a);
    }

    #[test]
    fn threshold_one_dominates() {
        let cfg = SelectorConfig {
            threshold_a: 1.0,
            threshold_b: 1.0,
            ..SelectorConfig::default()
        };
        let rec = select(&match_of(&[0.999]), &pred_a(&[0.999]), &pred_b(0.999), "x", &cfg);
        assert!(!rec.q_a && !rec.q_b);
        let bad = SelectorConfig {
            threshold_a: 1.01,
            ..SelectorConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn alpha_beta_one_is_confidence_only() {
        let cfg = SelectorConfig {
            alpha: 1.0,
            beta: 1.0,
            ..SelectorConfig::default()
        };
        for m in [0.0, 0.3, 1.0] {
            let rec = select(&match_of(&[m]), &pred_a(&[0.7]), &pred_b(0.55), "x", &cfg);
            assert_eq!(rec.s_k[0].get(), 0.7);
            assert_eq!(rec.r_t.get(), 0.55);
            assert!(rec.q_a && !rec.q_b);
        }
    }

    proptest! {
        #[test]
        fn monotone_in_confidence_and_match(
            c1 in 0.0f64..=1.0, c2 in 0.0f64..=1.0,
            m1 in 0.0f64..=1.0, m2 in 0.0f64..=1.0,
            alpha in 0.0f64..=1.0, thr in 0.0f64..=1.0,
        ) {
            let lo_c = c1.min(c2); let hi_c = c1.max(c2);
            let lo_m = m1.min(m2); let hi_m = m1.max(m2);
            let cfg = SelectorConfig { alpha, threshold_a: thr, ..SelectorConfig::default() };
            let low = select(&match_of(&[lo_m]), &pred_a(&[lo_c]), &pred_b(0.5), "x", &cfg);
            let high = select(&match_of(&[hi_m]), &pred_a(&[hi_c]), &pred_b(0.5), "x", &cfg);
            // Raising confidence or match never flips selection off.
            prop_assert!(!low.q_a || high.q_a);
        }

        #[test]
        fn selected_sets_nested_in_threshold(
            c in 0.0f64..=1.0, m in 0.0f64..=1.0,
            t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0,
        ) {
            let (lo, hi) = (t1.min(t2), t1.max(t2));
            let base = SelectorConfig::default();
            let rec_lo = select(&match_of(&[m]), &pred_a(&[c]), &pred_b(c),
                "x", &SelectorConfig { threshold_a: lo, threshold_b: lo, ..base });
            let rec_hi = select(&match_of(&[m]), &pred_a(&[c]), &pred_b(c),
                "x", &SelectorConfig { threshold_a: hi, threshold_b: hi, ..base });
            prop_assert!(!rec_hi.q_a || rec_lo.q_a);
            prop_assert!(!rec_hi.q_b || rec_lo.q_b);
        }
    }
}
