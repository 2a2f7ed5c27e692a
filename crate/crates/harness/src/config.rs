//! Experiment configuration: one JSON file describes one experiment cell.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cvnn_core::models::{real_equivalent, Family, ModelSpec};
use cvnn_core::nn::{Domain, SoftmaxMode};
use cvnn_core::polsar::{generate_scene, read_scene, PolsarField, Representation, SceneRecipe};
use cvnn_core::{Error, Result};

/// How train/val/test membership is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Uniform pixel (or patch) sampling over the whole scene.
    RandomSampling,
    /// 70/15/15 vertical strips; keeps train and test spatially apart.
    SpatialSplit,
}

/// Class-imbalance correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Balancing {
    None,
    /// Equal per-class sampling (MLP/CNN) or two-phase patch balancing (FCNN).
    Dataset,
    /// Per-label weight n_min / n_c inside the loss.
    WeightedLoss,
}

/// Where the scene comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneSource {
    Recipe(SceneRecipe),
    File(PathBuf),
    /// Built-in four-class synthetic stand-in.
    DefaultSynthetic { height: usize, width: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// None picks the model family default.
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: usize,
    /// Early stop after this many epochs without validation-OA
    /// improvement; off by default.
    pub patience: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: None,
            epochs: None,
            batch_size: 32,
            patience: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct PatchConfig {
    /// None picks the family default (12 for MLP/CNN, 128 for FCNN).
    pub size: Option<usize>,
    /// Sliding-window stride for FCNN patch extraction.
    pub stride: Option<usize>,
}


#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub train_rate: f64,
    pub val_rate: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            train_rate: 0.08,
            val_rate: 0.02,
        }
    }
}

/// One experiment cell: model family, value domain, input representation,
/// split mode, balancing mode, trial count, seed, scene source.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub domain: Domain,
    pub representation: Representation,
    pub split: SplitMode,
    pub balancing: Balancing,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub scene: SceneSource,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_boxcar")]
    pub boxcar: usize,
    #[serde(default)]
    pub patch: PatchConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    /// Override of the complex architecture's widths / filter ladder.
    #[serde(default)]
    pub hidden: Option<Vec<usize>>,
    /// Output softmax variant for complex models (plane-wise default).
    #[serde(default)]
    pub softmax: SoftmaxMode,
}

fn default_trials() -> usize {
    10
}

fn default_seed() -> u64 {
    1234
}

fn default_boxcar() -> usize {
    3
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Contract(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Contract("trials must be >= 1".into()));
        }
        if self.boxcar.is_multiple_of(2) {
            return Err(Error::Contract(format!(
                "boxcar must be odd, got {}",
                self.boxcar
            )));
        }
        let s = &self.sampling;
        if s.train_rate <= 0.0 || s.val_rate < 0.0 || s.train_rate + s.val_rate >= 1.0 {
            return Err(Error::Contract(format!(
                "sampling rates ({}, {}) must be positive and sum below 1",
                s.train_rate, s.val_rate
            )));
        }
        if self.optimizer.batch_size == 0 {
            return Err(Error::Contract("batch size must be >= 1".into()));
        }
        if self.family == Family::Fcnn && self.balancing == Balancing::WeightedLoss {
            eprintln!(
                "note: FCNN with weighted loss is supported but has not \
                 produced good results; consider dataset balancing"
            );
        }
        self.model_spec(2)?.validate()
    }

    /// Loads or generates the scene.
    pub fn load_scene(&self) -> Result<PolsarField> {
        match &self.scene {
            SceneSource::Recipe(r) => generate_scene(r),
            SceneSource::File(p) => read_scene(p),
            SceneSource::DefaultSynthetic {
                height,
                width,
                seed,
            } => generate_scene(&SceneRecipe::default_synthetic(*height, *width, *seed)),
        }
    }

    pub fn patch_size(&self) -> usize {
        self.patch.size.unwrap_or(match self.family {
            Family::Mlp | Family::Cnn => 12,
            Family::Fcnn => 128,
        })
    }

    pub fn patch_stride(&self) -> usize {
        self.patch.stride.unwrap_or(25)
    }

    /// Resolves the model for this cell. Real-domain cells are dimensioned
    /// from their complex twin by the real-equivalent search.
    pub fn model_spec(&self, classes: usize) -> Result<ModelSpec> {
        let mut cv = match self.family {
            Family::Mlp => ModelSpec::cv_mlp(self.representation, classes),
            Family::Cnn => ModelSpec::cv_cnn(self.representation, classes),
            Family::Fcnn => ModelSpec::cv_fcnn(self.representation, classes),
        };
        cv.patch_size = self.patch_size();
        cv.softmax = self.softmax;
        if let Some(hidden) = &self.hidden {
            cv.hidden = hidden.clone();
        }
        if let Some(lr) = self.optimizer.learning_rate {
            cv.learning_rate = lr;
        }
        if let Some(epochs) = self.optimizer.epochs {
            cv.epochs = epochs;
        }
        cv.validate()?;
        match self.domain {
            Domain::Complex => Ok(cv),
            Domain::Real => real_equivalent(&cv),
        }
    }
}
