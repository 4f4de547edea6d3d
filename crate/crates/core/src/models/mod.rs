//! Trainable surrogate task models: linear-softmax scorers over sparse
//! hand-crafted features, one for the span-labeling task (per-token BIO
//! conditioned on a predicate) and one for the rewriting task (keep/delete
//! per token plus span insertion).

mod checkpoint;
mod features;
mod task_a;
mod task_b;
mod train;

pub use checkpoint::{checkpoint_from_json, checkpoint_to_json, FORMAT_VERSION};
pub use features::{FeatureSpace, FEATURE_SPACE_VERSION};
pub use task_a::{
    predict_a, task_a_distributions, PredicatePrediction, TaskAPrediction, TASK_A_LABELS,
};
pub use task_b::{predict_b, task_b_distributions, TaskBDistributions, TaskBPrediction};
pub use train::{
    batch_loss_a, batch_loss_b, derive_rewrite_targets, loss_grad_a, loss_grad_b,
    task_a_gold_targets, train_a_epochs, train_b_epochs, GradAccum, SeqTargets, TaskATargets,
    TrainConfig,
};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    A,
    B,
}

impl TaskKind {
    pub fn label_names(self) -> &'static [&'static str] {
        match self {
            TaskKind::A => &TASK_A_LABELS,
            TaskKind::B => &task_b::TASK_B_LABELS,
        }
    }
}

/// A linear-softmax model: one weight row and bias per label over a fixed
/// sparse feature space. All features are indicator features, so a label
/// score is the bias plus the sum of the active rows' weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub task: TaskKind,
    pub space: FeatureSpace,
    pub dim: usize,
    pub labels: usize,
    /// Row-major `labels x dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(task: TaskKind, space: FeatureSpace) -> Self {
        let dim = match task {
            TaskKind::A => space.dim_a(),
            TaskKind::B => space.dim_b(),
        };
        let labels = task.label_names().len();
        LinearModel {
            task,
            space,
            dim,
            labels,
            weights: vec![0.0; labels * dim],
            bias: vec![0.0; labels],
        }
    }

    pub fn score(&self, label: usize, feats: &[u32]) -> f64 {
        let row = &self.weights[label * self.dim..(label + 1) * self.dim];
        self.bias[label] + feats.iter().map(|&f| row[f as usize]).sum::<f64>()
    }

    pub fn check_finite(&self) -> Result<(), CoreError> {
        if self.weights.iter().chain(self.bias.iter()).all(|w| w.is_finite()) {
            Ok(())
        } else {
            Err(CoreError::ModelMismatch("non-finite weight".into()))
        }
    }

    pub(crate) fn expect_task(&self, task: TaskKind) -> Result<(), CoreError> {
        if self.task != task {
            return Err(CoreError::ModelMismatch(format!(
                "expected a task {task:?} model, got {:?}",
                self.task
            )));
        }
        let expected = match task {
            TaskKind::A => self.space.dim_a(),
            TaskKind::B => self.space.dim_b(),
        };
        if self.dim != expected || self.weights.len() != self.labels * self.dim {
            return Err(CoreError::ModelMismatch(format!(
                "feature dimensionality mismatch: model dim {} vs space dim {expected}",
                self.dim
            )));
        }
        Ok(())
    }
}

/// Softmax over label scores, numerically stabilized.
pub(crate) fn softmax(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        z += *s;
    }
    for s in scores.iter_mut() {
        *s /= z;
    }
}

/// Index of the maximum; ties resolve to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_shapes() {
        let space = FeatureSpace::default();
        let a = LinearModel::zeros(TaskKind::A, space);
        assert_eq!(a.labels, 7);
        assert_eq!(a.weights.len(), 7 * space.dim_a());
        let b = LinearModel::zeros(TaskKind::B, space);
        assert_eq!(b.labels, 4);
        assert!(a.expect_task(TaskKind::A).is_ok());
        assert!(a.expect_task(TaskKind::B).is_err());
        assert!(b.expect_task(TaskKind::B).is_ok());
    }

    #[test]
    fn softmax_normalizes_and_argmax_breaks_ties_low() {
        let mut s = [0.0, 0.0, 0.0];
        softmax(&mut s);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(argmax(&s), 0);
        let mut s = [1.0, 3.0, 3.0];
        softmax(&mut s);
        assert_eq!(argmax(&s), 1);
    }
}
