//! Run configuration: defaults, JSON config files and flag overrides.
//!
//! Keys in a config file are the long flag names, e.g.
//!
//! ```json
//! { "tau": 0.3, "epochs": 50, "per-class": 20, "dataset": "data/manifest.json" }
//! ```
//!
//! Values are resolved as flags > config file > defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureSource, FeatureStorage, GraphFormat, SplitSpec, SyntheticSpec};
use crate::error::{Error, Result};
use crate::features::{EncoderConfig, EncoderKind};
use crate::gcn::{Activation, ModelConfig, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Storage {
    Inline,
    #[default]
    Blob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    #[default]
    Fraction,
    Subject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    #[default]
    Tau,
    Patch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    #[default]
    Test,
    Train,
    All,
}

/// Every tunable of every subcommand, flattened into one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,

    pub classes: usize,
    pub per_class: usize,
    pub landmarks: usize,
    pub feature_dim: usize,
    pub displacement: f64,
    pub landmark_noise: f64,
    pub feature_noise: f64,
    pub images: bool,
    pub storage: Storage,

    pub tau: f64,
    pub feature_source: FeatureSource,
    pub patch_height: usize,
    pub patch_width: usize,
    pub encoder_dim: usize,
    pub encoder_seed: u64,

    pub activation: Activation,
    pub hidden: usize,
    pub layers: usize,
    pub dropout: f64,

    pub lr: f64,
    pub lr_min: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,

    pub split: SplitKind,
    pub test_fraction: f64,
    pub test_subjects: Vec<String>,

    pub param: SweepParam,
    pub grid: Option<Vec<f64>>,

    pub subset: Subset,
    pub format: GraphFormat,
    pub samples: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SyntheticSpec::default();
        let model = ModelConfig::default();
        let train = TrainConfig::default();
        let encoder = EncoderConfig::default();
        RunConfig {
            seed: train.seed,
            out_dir: PathBuf::from("expgraph-out"),
            threads: None,
            dataset: None,
            checkpoint: None,

            classes: synth.classes,
            per_class: synth.samples_per_class,
            landmarks: synth.landmarks,
            feature_dim: synth.feature_dim,
            displacement: synth.geometry_displacement_scale,
            landmark_noise: synth.landmark_noise_scale,
            feature_noise: synth.feature_noise_scale,
            images: synth.images,
            storage: Storage::default(),

            tau: 0.5,
            feature_source: FeatureSource::default(),
            patch_height: 70,
            patch_width: 70,
            encoder_dim: encoder.out_dim,
            encoder_seed: encoder.projection_seed,

            activation: model.activation,
            hidden: model.hidden_dim,
            layers: model.layers,
            dropout: model.dropout,

            lr: train.lr_init,
            lr_min: train.lr_min,
            weight_decay: train.weight_decay,
            epochs: train.epochs,
            batch_size: train.batch_size,

            split: SplitKind::default(),
            test_fraction: 0.2,
            test_subjects: Vec::new(),

            param: SweepParam::default(),
            grid: None,

            subset: Subset::default(),
            format: GraphFormat::default(),
            samples: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with the JSON document at `path`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::invalid(format!("cannot read config file {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("invalid config file {}: {e}", path.display())))
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            classes: self.classes,
            samples_per_class: self.per_class,
            landmarks: self.landmarks,
            feature_dim: self.feature_dim,
            geometry_displacement_scale: self.displacement,
            landmark_noise_scale: self.landmark_noise,
            feature_noise_scale: self.feature_noise,
            images: self.images,
            seed: self.seed,
        }
    }

    pub fn feature_storage(&self) -> FeatureStorage {
        match self.storage {
            Storage::Inline => FeatureStorage::Inline,
            Storage::Blob => FeatureStorage::Blob,
        }
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            kind: EncoderKind::ToyProjection,
            out_dim: self.encoder_dim,
            projection_seed: self.encoder_seed,
        }
    }

    pub fn model_config(&self, input_dim: usize, classes: usize) -> ModelConfig {
        ModelConfig {
            input_dim,
            hidden_dim: self.hidden,
            layers: self.layers,
            classes,
            activation: self.activation,
            dropout: self.dropout,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr_init: self.lr,
            lr_min: self.lr_min,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        match self.split {
            SplitKind::Fraction => SplitSpec::Fraction {
                test_fraction: self.test_fraction,
            },
            SplitKind::Subject => SplitSpec::Subject {
                test_subjects: self.test_subjects.clone(),
            },
        }
    }

    pub fn dataset_path(&self) -> Result<&Path> {
        self.dataset.as_deref().ok_or_else(|| {
            Error::invalid("no dataset given (use --dataset or the `dataset` config key)")
        })
    }

    pub fn checkpoint_path(&self) -> Result<&Path> {
        self.checkpoint.as_deref().ok_or_else(|| {
            Error::invalid("no checkpoint given (use --checkpoint or the `checkpoint` config key)")
        })
    }

    /// Writes the resolved configuration as `effective_config.json` in `dir`.
    pub fn echo(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("effective_config.json");
        let text = serde_json::to_string_pretty(self).expect("run config serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// Copies every flag that was given onto the matching config field.
macro_rules! overlay {
    ($flags:expr, $cfg:expr; $($field:ident),* $(,)?) => {
        $(if let Some(v) = &$flags.$field {
            $cfg.$field = v.clone();
        })*
    };
}

macro_rules! overlay_opt {
    ($flags:expr, $cfg:expr; $($field:ident),* $(,)?) => {
        $(if let Some(v) = &$flags.$field {
            $cfg.$field = Some(v.clone());
        })*
    };
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalFlags {
    /// JSON config file; keys are long flag names
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Random seed for synthesis, splitting and training [default: 1000]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving every output [default: expgraph-out]
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl GlobalFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        overlay!(self, cfg; seed, out_dir);
        overlay_opt!(self, cfg; threads);
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SynthFlags {
    /// Number of expression classes [default: 6]
    #[arg(long)]
    pub classes: Option<usize>,
    /// Samples per class [default: 40]
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Landmarks per face [default: 68]
    #[arg(long)]
    pub landmarks: Option<usize>,
    /// Feature dimension [default: 64]
    #[arg(long)]
    pub feature_dim: Option<usize>,
    /// Class-specific landmark displacement in pixels [default: 8]
    #[arg(long)]
    pub displacement: Option<f64>,
    /// Per-sample landmark jitter in pixels [default: 1]
    #[arg(long)]
    pub landmark_noise: Option<f64>,
    /// Feature noise scale [default: 0.5]
    #[arg(long)]
    pub feature_noise: Option<f64>,
    /// Also render a PGM image per sample
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub images: Option<bool>,
    /// Feature storage [default: blob]
    #[arg(long, value_enum)]
    pub storage: Option<Storage>,
}

impl SynthFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        overlay!(self, cfg; classes, per_class, landmarks, feature_dim, displacement,
            landmark_noise, feature_noise, images, storage);
    }
}

fn parse_feature_source(s: &str) -> std::result::Result<FeatureSource, String> {
    s.parse()
}

fn parse_graph_format(s: &str) -> std::result::Result<GraphFormat, String> {
    s.parse()
}

fn parse_activation(s: &str) -> std::result::Result<Activation, String> {
    s.parse()
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataFlags {
    /// Dataset manifest
    #[arg(long, value_name = "MANIFEST")]
    pub dataset: Option<PathBuf>,
    /// Edge threshold parameter [default: 0.5]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Feature source: auto, stored or image [default: auto]
    #[arg(long, value_parser = parse_feature_source)]
    pub feature_source: Option<FeatureSource>,
    /// Patch height in pixels for image features [default: 70]
    #[arg(long)]
    pub patch_height: Option<usize>,
    /// Patch width in pixels for image features [default: 70]
    #[arg(long)]
    pub patch_width: Option<usize>,
    /// Patch encoder output dimension [default: 64]
    #[arg(long)]
    pub encoder_dim: Option<usize>,
    /// Patch encoder projection seed [default: 1000]
    #[arg(long)]
    pub encoder_seed: Option<u64>,
}

impl DataFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        overlay!(self, cfg; tau, feature_source, patch_height, patch_width, encoder_dim, encoder_seed);
        overlay_opt!(self, cfg; dataset);
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelFlags {
    /// relu, gelu or elu [default: relu]
    #[arg(long, value_parser = parse_activation)]
    pub activation: Option<Activation>,
    /// Hidden width [default: 256]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Number of graph convolution layers [default: 2]
    #[arg(long)]
    pub layers: Option<usize>,
    /// Dropout rate [default: 0.2]
    #[arg(long)]
    pub dropout: Option<f64>,
}

impl ModelFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        overlay!(self, cfg; activation, hidden, layers, dropout);
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainFlags {
    /// Initial learning rate [default: 0.001]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Final learning rate of the cosine schedule [default: 0.0001]
    #[arg(long)]
    pub lr_min: Option<f64>,
    /// Decoupled weight decay [default: 0.0005]
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Training epochs [default: 100]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size [default: 32]
    #[arg(long)]
    pub batch_size: Option<usize>,
}

impl TrainFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        overlay!(self, cfg; lr, lr_min, weight_decay, epochs, batch_size);
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SplitFlags {
    /// Split protocol [default: fraction]
    #[arg(long, value_enum)]
    pub split: Option<SplitKind>,
    /// Per-class test fraction for the fraction split [default: 0.2]
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Test subject ids for the subject split
    #[arg(long, value_delimiter = ',')]
    pub test_subjects: Option<Vec<String>>,
}

impl SplitFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        overlay!(self, cfg; split, test_fraction, test_subjects);
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CheckpointFlag {
    /// Model checkpoint written by `train`
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
}

impl CheckpointFlag {
    pub fn apply(&self, cfg: &mut RunConfig) {
        overlay_opt!(self, cfg; checkpoint);
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvalFlags {
    /// Samples to evaluate [default: test]
    #[arg(long, value_enum)]
    pub subset: Option<Subset>,
}

impl EvalFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        overlay!(self, cfg; subset);
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepFlags {
    /// Swept parameter [default: tau]
    #[arg(long, value_enum)]
    pub param: Option<SweepParam>,
    /// Comma-separated grid [default: the standard grid of the parameter]
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}

impl SweepFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        overlay!(self, cfg; param);
        overlay_opt!(self, cfg; grid);
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExportGraphFlags {
    /// dot or json [default: dot]
    #[arg(long, value_parser = parse_graph_format)]
    pub format: Option<GraphFormat>,
    /// Comma-separated sample ids [default: every sample]
    #[arg(long, value_delimiter = ',')]
    pub samples: Option<Vec<String>>,
}

impl ExportGraphFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        overlay!(self, cfg; format, samples);
    }
}
