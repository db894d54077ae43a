use std::fs;
use std::path::{Path, PathBuf};

use dante_core::data::TargetColumns;
use dante_core::{
    ActivationKind, DatasetKind, LossKind, NetworkSpec, NormalizationMode, TrainConfig,
};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// One experiment, read from a single JSON document. Unknown keys are
/// rejected at every level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label used in comparison tables; defaults to the output directory name.
    #[serde(default)]
    pub name: Option<String>,
    pub dataset: DatasetConfig,
    pub architecture: ArchitectureConfig,
    pub train: TrainConfig,
    /// Replace targets by inputs (reconstruction objective).
    #[serde(default)]
    pub autoencoder: bool,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// IDX files `train-images-idx3-ubyte` etc. in `dir`; the t10k files are
    /// the test set.
    Mnist {
        #[serde(default)]
        dir: Option<PathBuf>,
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
        #[serde(default)]
        normalization: NormalizationMode,
    },
    /// Numeric table split into train/test by a seeded permutation.
    Delimited {
        path: PathBuf,
        #[serde(default)]
        targets: TargetColumns,
        #[serde(default = "regression")]
        task: DatasetKind,
        #[serde(default)]
        normalization: NormalizationMode,
        /// Min-max scale each target column to [0, 1] before splitting.
        #[serde(default)]
        scale_targets: bool,
        #[serde(default = "default_split")]
        split: f64,
    },
    /// Planted GLM `y = phi(X w*) + noise` with inputs in the unit ball.
    Glm {
        d: usize,
        m: usize,
        #[serde(default = "one")]
        d_prime: usize,
        #[serde(default = "unit")]
        weight_bound: f64,
        activation: ActivationKind,
        /// Half-width of the uniform label noise; 0 gives the idealized GLM.
        #[serde(default)]
        noise: f64,
        #[serde(default = "default_split")]
        split: f64,
    },
    /// Targets produced by a planted network with standard-normal weights
    /// and the configured architecture, on inputs from the unit ball.
    Teacher {
        m: usize,
        #[serde(default = "default_split")]
        split: f64,
    },
}

fn regression() -> DatasetKind {
    DatasetKind::Regression
}
fn default_split() -> f64 {
    0.8
}
fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureConfig {
    /// `[d_0, d_1, ..., d_L]`.
    pub dims: Vec<usize>,
    pub hidden: ActivationKind,
    pub output: ActivationKind,
    pub loss: LossKind,
    #[serde(default)]
    pub bias: bool,
}

impl ArchitectureConfig {
    pub fn spec(&self) -> Result<NetworkSpec> {
        Ok(NetworkSpec::mlp(
            &self.dims,
            self.hidden,
            self.output,
            self.loss,
            self.bias,
        )?)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config; relative dataset paths are resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        let mut cfg = Self::from_json(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        match &mut cfg.dataset {
            DatasetConfig::Mnist { dir: Some(dir), .. } if dir.is_relative() => {
                *dir = base.join(&*dir)
            }
            DatasetConfig::Delimited { path, .. } if path.is_relative() => {
                *path = base.join(&*path)
            }
            _ => {}
        }
        Ok(cfg)
    }

    /// Checks everything that can be checked without touching data.
    pub fn validate(&self) -> Result<NetworkSpec> {
        let spec = self.architecture.spec()?;
        self.train.validate()?;
        let split = match &self.dataset {
            DatasetConfig::Mnist { .. } => None,
            DatasetConfig::Delimited { split, .. }
            | DatasetConfig::Glm { split, .. }
            | DatasetConfig::Teacher { split, .. } => Some(*split),
        };
        if let Some(s) = split {
            if !(s > 0.0 && s < 1.0) {
                return Err(CliError::Config(format!(
                    "split must lie in (0, 1), got {s}"
                )));
            }
        }
        if let DatasetConfig::Glm { noise, .. } = &self.dataset {
            if !(0.0..=1.0).contains(noise) {
                return Err(CliError::Config(format!(
                    "noise must lie in [0, 1], got {noise}"
                )));
            }
        }
        if self.autoencoder && spec.input_dim() != spec.output_dim() {
            return Err(CliError::Config(format!(
                "autoencoder needs equal input and output widths, got {} and {}",
                spec.input_dim(),
                spec.output_dim()
            )));
        }
        Ok(spec)
    }
}
