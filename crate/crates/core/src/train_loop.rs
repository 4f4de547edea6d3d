//! Iterative co-training orchestration: pretrain both task models, then
//! repeat pseudo-label → match → select → retrain. Pseudo sets are rebuilt
//! from scratch every iteration. Modes: friend (matcher-gated selection),
//! self_train (confidence-only selection, alpha=beta=1), and frozen-friend
//! variants that keep one model fixed after pretraining.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Instance;
use crate::error::CoreError;
use crate::matcher::match_instance;
use crate::metrics::{Prf, PrfCounts, RewriteEval};
use crate::models::{
    predict_a, predict_b, task_a_gold_targets, train_a_epochs, train_b_epochs,
    derive_rewrite_targets, FeatureSpace, LinearModel, SeqTargets, TaskAPrediction,
    TaskATargets, TaskBPrediction, TaskKind, TrainConfig,
};
use crate::rng::derive_seed;
use crate::selector::{select, SelectionRecord, SelectorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Friend,
    #[serde(alias = "self-train")]
    SelfTrain,
    #[serde(alias = "frozen-friend-a")]
    FrozenFriendA,
    #[serde(alias = "frozen-friend-b")]
    FrozenFriendB,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Friend => "friend",
            Mode::SelfTrain => "self_train",
            Mode::FrozenFriendA => "frozen_friend_a",
            Mode::FrozenFriendB => "frozen_friend_b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrainPolicy {
    /// Resume each iteration's update from the current weights.
    Continue,
    /// Restart from zero weights each iteration.
    Reinit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub max_iterations: usize,
    pub mode: Mode,
    pub selector: SelectorConfig,
    pub train: TrainConfig,
    pub retrain_policy: RetrainPolicy,
    /// Epochs for the initial supervised pretraining of both models.
    pub pretrain_epochs: usize,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            max_iterations: 5,
            mode: Mode::Friend,
            selector: SelectorConfig::default(),
            train: TrainConfig::default(),
            retrain_policy: RetrainPolicy::Continue,
            pretrain_epochs: 30,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.max_iterations < 1 {
            return Err(CoreError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        self.selector.validate()?;
        self.train.validate()?;
        if self.mode == Mode::SelfTrain
            && (self.selector.alpha != 1.0 || self.selector.beta != 1.0)
        {
            return Err(CoreError::ConfigContradiction(
                "self_train requires alpha = beta = 1 (confidence-only selection)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevMetricsB {
    pub wer: f64,
    pub rouge_l: f64,
    pub em: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub selected_count_a: usize,
    pub selected_count_b: usize,
    pub pool_size: usize,
    /// Oracle error of the selected pseudo sets (0 when nothing selected).
    pub oracle_pseudo_error_a: f64,
    pub oracle_pseudo_error_b: f64,
    /// Oracle error of the full predicted pool.
    pub oracle_pool_error_a: f64,
    pub oracle_pool_error_b: f64,
    pub dev_a: Prf,
    pub dev_b: DevMetricsB,
}

#[derive(Debug)]
pub struct LoopOutcome {
    pub model_a: LinearModel,
    pub model_b: LinearModel,
    pub pretrain_dev_a: Prf,
    pub pretrain_dev_b: DevMetricsB,
    pub reports: Vec<IterationReport>,
}

/// Predictions and selection outcome for one pool instance.
#[derive(Debug)]
pub struct PoolDecision {
    pub index: usize,
    pub pred_a: TaskAPrediction,
    pub pred_b: TaskBPrediction,
    pub record: SelectionRecord,
}

/// Pseudo-label, match, and select over the whole pool. Pure per instance
/// and embarrassingly parallel; results come back in pool order.
pub fn label_match_select(
    pool: &[Instance],
    predict_a_fn: impl Fn(&Instance) -> Result<TaskAPrediction, CoreError> + Sync,
    predict_b_fn: impl Fn(&Instance) -> Result<TaskBPrediction, CoreError> + Sync,
    selector: &SelectorConfig,
) -> Result<Vec<PoolDecision>, CoreError> {
    pool.par_iter()
        .enumerate()
        .map(|(index, instance)| {
            let pred_a = predict_a_fn(instance)?;
            let pred_b = predict_b_fn(instance)?;
            let matched = match_instance(&pred_a, &pred_b, instance)?;
            let record = select(&matched, &pred_a, &pred_b, &instance.id, selector);
            Ok(PoolDecision {
                index,
                pred_a,
                pred_b,
                record,
            })
        })
        .collect()
}

/// Micro-averaged span PRF of a labeling model over a dev set.
pub fn evaluate_task_a(model: &LinearModel, dev: &[Instance]) -> Result<Prf, CoreError> {
    let mut counts = PrfCounts::default();
    for inst in dev {
        let gold = inst
            .gold_a
            .as_ref()
            .ok_or_else(|| CoreError::InvalidInstance(format!("{}: missing gold_a", inst.id)))?;
        let pred = predict_a(model, inst)?;
        counts.add_sets(&pred.argument_sets(), gold);
    }
    Ok(counts.prf())
}

/// Micro-averaged WER/Rouge-L/EM of a rewriting model over a dev set.
pub fn evaluate_task_b(model: &LinearModel, dev: &[Instance]) -> Result<DevMetricsB, CoreError> {
    let mut eval = RewriteEval::default();
    for inst in dev {
        let gold = inst
            .gold_b
            .as_ref()
            .ok_or_else(|| CoreError::InvalidInstance(format!("{}: missing gold_b", inst.id)))?;
        let pred = predict_b(model, inst)?;
        eval.add(&pred.rewrite, gold)?;
    }
    Ok(DevMetricsB {
        wer: eval.wer(),
        rouge_l: eval.rouge_l(),
        em: eval.em(),
    })
}

/// Predicate-level oracle error of labeling predictions against hidden gold:
/// the fraction of (instance, predicate) pairs whose predicted argument set
/// differs from gold. Empty input counts as error 0.
fn oracle_error_a<'a>(
    items: impl Iterator<Item = (&'a Instance, &'a TaskAPrediction, Option<&'a [bool]>)>,
) -> f64 {
    let (mut wrong, mut total) = (0usize, 0usize);
    for (inst, pred, mask) in items {
        let gold = inst.gold_a.as_ref().expect("pool gold checked by run()");
        for (k, gold_args) in gold.iter().enumerate() {
            if let Some(mask) = mask {
                if !mask[k] {
                    continue;
                }
            }
            total += 1;
            if pred.predicates[k].arguments != *gold_args {
                wrong += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        wrong as f64 / total as f64
    }
}

/// Sentence-level non-exact-match rate against hidden gold rewrites.
fn oracle_error_b<'a>(
    items: impl Iterator<Item = (&'a Instance, &'a TaskBPrediction)>,
) -> f64 {
    let (mut wrong, mut total) = (0usize, 0usize);
    for (inst, pred) in items {
        let gold = inst.gold_b.as_ref().expect("pool gold checked by run()");
        total += 1;
        if pred.rewrite != *gold {
            wrong += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        wrong as f64 / total as f64
    }
}

fn require_gold(
    set: &[Instance],
    name: &str,
    need_a: bool,
    need_b: bool,
) -> Result<(), CoreError> {
    for inst in set {
        if need_a && inst.gold_a.is_none() {
            return Err(CoreError::InvalidInstance(format!(
                "{name} instance {} is missing gold_a",
                inst.id
            )));
        }
        if need_b && inst.gold_b.is_none() {
            return Err(CoreError::InvalidInstance(format!(
                "{name} instance {} is missing gold_b",
                inst.id
            )));
        }
    }
    Ok(())
}

/// Run the full loop. The pool's gold labels are hidden from training and
/// used only to report oracle pseudo-error rates.
#[allow(clippy::too_many_arguments)]
pub fn run(
    labeled_a: &[Instance],
    labeled_b: &[Instance],
    pool: &[Instance],
    dev_a: &[Instance],
    dev_b: &[Instance],
    space: FeatureSpace,
    cfg: &LoopConfig,
    seed: u64,
) -> Result<LoopOutcome, CoreError> {
    cfg.validate()?;
    if labeled_a.is_empty() || labeled_b.is_empty() {
        return Err(CoreError::EmptyTrainingSet);
    }
    if pool.is_empty() {
        return Err(CoreError::InvalidConfig("unlabeled pool is empty".into()));
    }
    require_gold(labeled_a, "labeled_a", true, false)?;
    require_gold(labeled_b, "labeled_b", false, true)?;
    require_gold(dev_a, "dev_a", true, false)?;
    require_gold(dev_b, "dev_b", false, true)?;
    // Hidden gold on the pool makes oracle pseudo-error measurable.
    require_gold(pool, "pool", true, true)?;

    let labeled_targets_a: Vec<(&Instance, TaskATargets)> = labeled_a
        .iter()
        .map(|i| Ok((i, task_a_gold_targets(i)?)))
        .collect::<Result<_, CoreError>>()?;
    let labeled_targets_b: Vec<(&Instance, SeqTargets)> = labeled_b
        .iter()
        .map(|i| Ok((i, derive_rewrite_targets(i, i.gold_b.as_ref().expect("checked"))?)))
        .collect::<Result<_, CoreError>>()?;

    let pretrain_cfg = TrainConfig {
        epochs_per_iteration: cfg.pretrain_epochs,
        ..cfg.train
    };
    let (mut model_a, _) = train_a_epochs(
        LinearModel::zeros(TaskKind::A, space),
        &labeled_targets_a,
        &[],
        &pretrain_cfg,
        derive_seed(seed, 1),
    )?;
    let (mut model_b, _) = train_b_epochs(
        LinearModel::zeros(TaskKind::B, space),
        &labeled_targets_b,
        &[],
        &pretrain_cfg,
        derive_seed(seed, 2),
    )?;

    let pretrain_dev_a = evaluate_task_a(&model_a, dev_a)?;
    let pretrain_dev_b = evaluate_task_b(&model_b, dev_b)?;

    let mut reports = Vec::with_capacity(cfg.max_iterations);
    for iteration in 1..=cfg.max_iterations {
        // Pseudo sets are rebuilt from scratch: selection is a function of
        // the current models and the pool only.
        let decisions = label_match_select(
            pool,
            |i| predict_a(&model_a, i),
            |i| predict_b(&model_b, i),
            &cfg.selector,
        )?;

        let selected_a: Vec<&PoolDecision> =
            decisions.iter().filter(|d| d.record.q_a).collect();
        let selected_b: Vec<&PoolDecision> =
            decisions.iter().filter(|d| d.record.q_b).collect();

        let oracle_pseudo_error_a = oracle_error_a(selected_a.iter().map(|d| {
            let mask = cfg
                .selector
                .per_predicate_selection
                .then_some(d.record.passed_a.as_slice());
            (&pool[d.index], &d.pred_a, mask)
        }));
        let oracle_pool_error_a =
            oracle_error_a(decisions.iter().map(|d| (&pool[d.index], &d.pred_a, None)));
        let oracle_pseudo_error_b =
            oracle_error_b(selected_b.iter().map(|d| (&pool[d.index], &d.pred_b)));
        let oracle_pool_error_b =
            oracle_error_b(decisions.iter().map(|d| (&pool[d.index], &d.pred_b)));

        let pseudo_a: Vec<(&Instance, TaskATargets)> = selected_a
            .iter()
            .map(|d| {
                let predicate_args = d
                    .pred_a
                    .predicates
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| {
                        !cfg.selector.per_predicate_selection || d.record.passed_a[*k]
                    })
                    .map(|(k, p)| (k, p.arguments.clone()))
                    .collect();
                (&pool[d.index], TaskATargets { predicate_args })
            })
            .collect();
        // Pseudo rewrites whose insertions cannot be expressed as contiguous
        // dialogue spans are dropped from the training set (they stay in the
        // selected counts above).
        let pseudo_b: Vec<(&Instance, SeqTargets)> = selected_b
            .iter()
            .filter_map(|d| {
                derive_rewrite_targets(&pool[d.index], &d.pred_b.rewrite)
                    .ok()
                    .map(|t| (&pool[d.index], t))
            })
            .collect();

        let update_a = !matches!(cfg.mode, Mode::FrozenFriendA);
        let update_b = !matches!(cfg.mode, Mode::FrozenFriendB);
        if update_a {
            let start = match cfg.retrain_policy {
                RetrainPolicy::Continue => model_a.clone(),
                RetrainPolicy::Reinit => LinearModel::zeros(TaskKind::A, space),
            };
            let (next, _) = train_a_epochs(
                start,
                &labeled_targets_a,
                &pseudo_a,
                &cfg.train,
                derive_seed(seed, 100 + iteration as u64),
            )?;
            model_a = next;
        }
        if update_b {
            let start = match cfg.retrain_policy {
                RetrainPolicy::Continue => model_b.clone(),
                RetrainPolicy::Reinit => LinearModel::zeros(TaskKind::B, space),
            };
            let (next, _) = train_b_epochs(
                start,
                &labeled_targets_b,
                &pseudo_b,
                &cfg.train,
                derive_seed(seed, 200 + iteration as u64),
            )?;
            model_b = next;
        }

        reports.push(IterationReport {
            iteration,
            selected_count_a: selected_a.len(),
            selected_count_b: selected_b.len(),
            pool_size: pool.len(),
            oracle_pseudo_error_a,
            oracle_pseudo_error_b,
            oracle_pool_error_a,
            oracle_pool_error_b,
            dev_a: evaluate_task_a(&model_a, dev_a)?,
            dev_b: evaluate_task_b(&model_b, dev_b)?,
        });
    }

    Ok(LoopOutcome {
        model_a,
        model_b,
        pretrain_dev_a,
        pretrain_dev_b,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_corpus, WorldConfig};
    use crate::num::Score;
    use crate::selector::SelectorConfig;

    fn world() -> (Vec<Instance>, Vec<Instance>, Vec<Instance>, Vec<Instance>, Vec<Instance>) {
        let cfg = WorldConfig::default();
        (
            generate_corpus(1001, 30, &cfg).unwrap(),
            generate_corpus(1002, 30, &cfg).unwrap(),
            generate_corpus(1003, 60, &cfg).unwrap(),
            generate_corpus(1004, 40, &cfg).unwrap(),
            generate_corpus(1005, 40, &cfg).unwrap(),
        )
    }

    fn small_cfg(mode: Mode) -> LoopConfig {
        let mut cfg = LoopConfig {
            max_iterations: 2,
            mode,
            pretrain_epochs: 10,
            ..LoopConfig::default()
        };
        if mode == Mode::SelfTrain {
            cfg.selector.alpha = 1.0;
            cfg.selector.beta = 1.0;
        }
        cfg
    }

    #[test]
    fn deterministic_end_to_end() {
        let (la, lb, pool, da, db) = world();
        let cfg = small_cfg(Mode::Friend);
        let space = FeatureSpace::default();
        let r1 = run(&la, &lb, &pool, &da, &db, space, &cfg, 9).unwrap();
        let r2 = run(&la, &lb, &pool, &da, &db, space, &cfg, 9).unwrap();
        assert_eq!(r1.model_a, r2.model_a);
        assert_eq!(r1.model_b, r2.model_b);
        assert_eq!(r1.reports, r2.reports);
    }

    #[test]
    fn impossible_thresholds_keep_models_at_pretrain() {
        let (la, lb, pool, da, db) = world();
        let mut cfg = small_cfg(Mode::Friend);
        cfg.selector.threshold_a = 1.0;
        cfg.selector.threshold_b = 1.0;
        let space = FeatureSpace::default();
        let out = run(&la, &lb, &pool, &da, &db, space, &cfg, 4).unwrap();
        // Weak pretrained models never reach a blended score of exactly 1.
        for rep in &out.reports {
            assert_eq!(rep.selected_count_a, 0);
            assert_eq!(rep.selected_count_b, 0);
        }
        // No pseudo data: every retrain sees identical labeled batches, and
        // dev metrics keep moving only through extra labeled epochs; the
        // pretrain-only reference is a run with zero iterations of pseudo
        // data but the same total labeled epochs.
        let pretrain_cfg = TrainConfig {
            epochs_per_iteration: cfg.pretrain_epochs,
            ..cfg.train
        };
        let labeled_targets: Vec<(&Instance, TaskATargets)> = la
            .iter()
            .map(|i| (i, task_a_gold_targets(i).unwrap()))
            .collect();
        let (mut reference, _) = train_a_epochs(
            LinearModel::zeros(TaskKind::A, space),
            &labeled_targets,
            &[],
            &pretrain_cfg,
            derive_seed(4, 1),
        )
        .unwrap();
        for t in 1..=cfg.max_iterations {
            let (next, _) = train_a_epochs(
                reference,
                &labeled_targets,
                &[],
                &cfg.train,
                derive_seed(4, 100 + t as u64),
            )
            .unwrap();
            reference = next;
        }
        assert_eq!(out.model_a, reference);
    }

    #[test]
    fn gold_replay_stubs_select_everything() {
        let (_, _, pool, _, _) = world();
        let selector = SelectorConfig::default();
        let decisions = label_match_select(
            &pool,
            |inst| {
                Ok(TaskAPrediction {
                    predicates: inst
                        .gold_a
                        .as_ref()
                        .unwrap()
                        .iter()
                        .map(|args| crate::models::PredicatePrediction {
                            arguments: args.clone(),
                            confidence: Score::ONE,
                        })
                        .collect(),
                })
            },
            |inst| {
                Ok(TaskBPrediction {
                    rewrite: inst.gold_b.clone().unwrap(),
                    confidence: Score::ONE,
                    keep: vec![],
                    insertions: vec![],
                })
            },
            &selector,
        )
        .unwrap();
        assert_eq!(decisions.len(), pool.len());
        for d in &decisions {
            assert!(d.record.s_k.iter().all(|s| s.get() == 1.0));
            assert_eq!(d.record.r_t.get(), 1.0);
            assert!(d.record.q_a && d.record.q_b);
        }
    }

    #[test]
    fn self_train_equals_friend_with_unit_blend() {
        let (la, lb, pool, da, db) = world();
        let space = FeatureSpace::default();
        let self_cfg = small_cfg(Mode::SelfTrain);
        let mut friend_cfg = small_cfg(Mode::Friend);
        friend_cfg.selector.alpha = 1.0;
        friend_cfg.selector.beta = 1.0;
        let a = run(&la, &lb, &pool, &da, &db, space, &self_cfg, 7).unwrap();
        let b = run(&la, &lb, &pool, &da, &db, space, &friend_cfg, 7).unwrap();
        assert_eq!(a.reports, b.reports);
        assert_eq!(a.model_a, b.model_a);
        assert_eq!(a.model_b, b.model_b);
    }

    #[test]
    fn self_train_with_blended_selector_is_contradictory() {
        let cfg = LoopConfig {
            mode: Mode::SelfTrain,
            ..LoopConfig::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(CoreError::ConfigContradiction(_))
        ));
    }

    #[test]
    fn frozen_modes_keep_the_frozen_model() {
        let (la, lb, pool, da, db) = world();
        let space = FeatureSpace::default();
        let cfg = small_cfg(Mode::FrozenFriendA);
        let out = run(&la, &lb, &pool, &da, &db, space, &cfg, 5).unwrap();
        // The frozen model equals its pretrain-only state.
        let labeled_targets: Vec<(&Instance, TaskATargets)> = la
            .iter()
            .map(|i| (i, task_a_gold_targets(i).unwrap()))
            .collect();
        let pretrain_cfg = TrainConfig {
            epochs_per_iteration: cfg.pretrain_epochs,
            ..cfg.train
        };
        let (pretrained, _) = train_a_epochs(
            LinearModel::zeros(TaskKind::A, space),
            &labeled_targets,
            &[],
            &pretrain_cfg,
            derive_seed(5, 1),
        )
        .unwrap();
        assert_eq!(out.model_a, pretrained);

        let cfg_b = small_cfg(Mode::FrozenFriendB);
        let out_b = run(&la, &lb, &pool, &da, &db, space, &cfg_b, 5).unwrap();
        assert_ne!(out_b.model_a, pretrained); // task A still updates
    }

    #[test]
    fn empty_labeled_set_is_an_error() {
        let (la, lb, pool, da, db) = world();
        let cfg = small_cfg(Mode::Friend);
        let space = FeatureSpace::default();
        assert!(run(&[], &lb, &pool, &da, &db, space, &cfg, 1).is_err());
        assert!(run(&la, &lb, &[], &da, &db, space, &cfg, 1).is_err());
    }
}
