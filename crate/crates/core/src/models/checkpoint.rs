//! Checkpoint serialization: a JSON document with feature-space metadata,
//! the label order, and nonzero (label, feature, weight) triples. Values
//! round-trip bit-exactly (shortest-roundtrip float formatting).

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

use super::{FeatureSpace, LinearModel, TaskKind, FEATURE_SPACE_VERSION};

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "friendtrain-model";

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    feature_space_version: u32,
    task: TaskKind,
    feature_space: FeatureSpace,
    labels: Vec<String>,
    dim: usize,
    weights: Vec<(usize, usize, f64)>,
    bias: Vec<f64>,
}

pub fn checkpoint_to_json(model: &LinearModel) -> String {
    let mut triples = Vec::new();
    for label in 0..model.labels {
        for f in 0..model.dim {
            let w = model.weights[label * model.dim + f];
            if w != 0.0 {
                triples.push((label, f, w));
            }
        }
    }
    let file = CheckpointFile {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        feature_space_version: FEATURE_SPACE_VERSION,
        task: model.task,
        feature_space: model.space,
        labels: model
            .task
            .label_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        dim: model.dim,
        weights: triples,
        bias: model.bias.clone(),
    };
    serde_json::to_string(&file).expect("checkpoint serialization cannot fail")
}

pub fn checkpoint_from_json(json: &str) -> Result<LinearModel, CoreError> {
    let file: CheckpointFile =
        serde_json::from_str(json).map_err(|e| CoreError::Checkpoint(e.to_string()))?;
    if file.format != FORMAT_NAME {
        return Err(CoreError::Checkpoint(format!(
            "unknown format {:?}",
            file.format
        )));
    }
    if file.version != FORMAT_VERSION || file.feature_space_version != FEATURE_SPACE_VERSION {
        return Err(CoreError::Checkpoint(format!(
            "unsupported version {} / feature space {}",
            file.version, file.feature_space_version
        )));
    }
    let expected_labels: Vec<&str> = file.task.label_names().to_vec();
    if file.labels != expected_labels {
        return Err(CoreError::Checkpoint("label order mismatch".into()));
    }
    let mut model = LinearModel::zeros(file.task, file.feature_space);
    if file.dim != model.dim || file.bias.len() != model.labels {
        return Err(CoreError::Checkpoint(format!(
            "dimension mismatch: checkpoint dim {} vs feature space dim {}",
            file.dim, model.dim
        )));
    }
    model.bias = file.bias;
    for (label, f, w) in file.weights {
        if label >= model.labels || f >= model.dim {
            return Err(CoreError::Checkpoint(format!(
                "weight index ({label},{f}) out of range"
            )));
        }
        model.weights[label * model.dim + f] = w;
    }
    model.check_finite()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut model = LinearModel::zeros(TaskKind::A, FeatureSpace::default());
        let mut state = 0xdeadbeefu64;
        for w in model.weights.iter_mut().skip(3).step_by(7) {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            *w = (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
        }
        model.bias[2] = 0.1 + 0.2; // deliberately non-representable sum
        let json = checkpoint_to_json(&model);
        let loaded = checkpoint_from_json(&json).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(checkpoint_to_json(&loaded), json);
    }

    #[test]
    fn rejects_mismatches() {
        let model = LinearModel::zeros(TaskKind::B, FeatureSpace::default());
        let json = checkpoint_to_json(&model);
        assert!(checkpoint_from_json(&json.replace("friendtrain-model", "other")).is_err());
        assert!(checkpoint_from_json(&json.replace("\"keep\"", "\"hold\"")).is_err());
        assert!(checkpoint_from_json("not json").is_err());
    }

    #[test]
    fn rejects_non_finite_and_out_of_range() {
        let model = LinearModel::zeros(TaskKind::A, FeatureSpace::default());
        let json = checkpoint_to_json(&model);
        let bad = json.replace("\"weights\":[]", "\"weights\":[[0,999999,1.0]]");
        assert!(checkpoint_from_json(&bad).is_err());
    }
}
