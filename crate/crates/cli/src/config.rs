//! Run configuration: a JSON document plus command-line overrides. Flags win
//! over file values; the fully resolved config is echoed into the report
//! directory next to the results it produced.

use std::fs;
use std::path::{Path, PathBuf};

use friendtrain::datagen::WorldConfig;
use friendtrain::models::TrainConfig;
use friendtrain::selector::SelectorConfig;
use friendtrain::train_loop::{LoopConfig, Mode, RetrainPolicy};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub world: Option<WorldConfig>,
    pub train: Option<TrainConfig>,
    pub selector: Option<FileSelector>,
    #[serde(rename = "loop")]
    pub loop_: Option<FileLoop>,
    pub paths: Option<FilePaths>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSelector {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub threshold_a: Option<f64>,
    pub threshold_b: Option<f64>,
    pub per_predicate_selection: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileLoop {
    pub max_iterations: Option<usize>,
    pub retrain_policy: Option<RetrainPolicy>,
    pub pretrain_epochs: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilePaths {
    pub labeled_a: PathBuf,
    pub labeled_b: PathBuf,
    pub unlabeled: PathBuf,
    pub dev_a: PathBuf,
    pub dev_b: PathBuf,
    pub report_dir: PathBuf,
}

/// Command-line overrides for `run`.
#[derive(Debug, Default, Clone, Copy)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub max_iterations: Option<usize>,
    pub threshold_a: Option<f64>,
    pub threshold_b: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
}

/// Fully resolved configuration, serialized as the effective-config echo.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub mode: Mode,
    pub world: WorldConfig,
    #[serde(rename = "loop")]
    pub loop_cfg: LoopConfig,
    pub paths: FilePaths,
}

pub fn load_run_config(
    config_path: &Path,
    mode: Mode,
    over: &RunOverrides,
) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(config_path).map_err(|e| {
        CliError::Usage(format!("cannot read config {}: {e}", config_path.display()))
    })?;
    let file: FileConfig = serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!("bad config {}: {e}", config_path.display()))
    })?;

    let world = file.world.unwrap_or_default();
    world.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let mut train = file.train.unwrap_or_default();
    if let Some(lambda) = over.lambda {
        train.lambda = lambda;
    }

    let fsel = file.selector.unwrap_or_default();
    let alpha_explicit = over.alpha.or(fsel.alpha);
    let beta_explicit = over.beta.or(fsel.beta);
    if mode == Mode::SelfTrain {
        if alpha_explicit.is_some_and(|a| a != 1.0) || beta_explicit.is_some_and(|b| b != 1.0) {
            return Err(CliError::Usage(
                "self-train mode selects on confidence only; alpha/beta must be 1 or unset"
                    .into(),
            ));
        }
    }
    let defaults = SelectorConfig::default();
    let unit = mode == Mode::SelfTrain;
    let selector = SelectorConfig {
        alpha: alpha_explicit.unwrap_or(if unit { 1.0 } else { defaults.alpha }),
        beta: beta_explicit.unwrap_or(if unit { 1.0 } else { defaults.beta }),
        threshold_a: over
            .threshold_a
            .or(fsel.threshold_a)
            .unwrap_or(defaults.threshold_a),
        threshold_b: over
            .threshold_b
            .or(fsel.threshold_b)
            .unwrap_or(defaults.threshold_b),
        per_predicate_selection: fsel
            .per_predicate_selection
            .unwrap_or(defaults.per_predicate_selection),
    };

    let floop = file.loop_.unwrap_or_default();
    let loop_defaults = LoopConfig::default();
    let loop_cfg = LoopConfig {
        max_iterations: over
            .max_iterations
            .or(floop.max_iterations)
            .unwrap_or(loop_defaults.max_iterations),
        mode,
        selector,
        train,
        retrain_policy: floop.retrain_policy.unwrap_or(loop_defaults.retrain_policy),
        pretrain_epochs: floop
            .pretrain_epochs
            .unwrap_or(loop_defaults.pretrain_epochs),
    };
    loop_cfg
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let paths = file
        .paths
        .ok_or_else(|| CliError::Usage("config is missing the \"paths\" section".into()))?;

    Ok(RunConfig {
        seed: over.seed.or(file.seed).unwrap_or(0),
        mode,
        world,
        loop_cfg,
        paths,
    })
}
