//! JSON dataset manifests.
//!
//! A manifest is a single JSON document:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "class_names": ["anger", "disgust"],
//!   "feature_dim": 64,
//!   "landmark_count": 68,
//!   "samples": [
//!     {
//!       "sample_id": "s0001",
//!       "label": 0,
//!       "subject_id": "subj03",
//!       "landmarks": [[112.0, 62.0], ...],
//!       "features": [[...], ...],
//!       "features_path": "features/s0001.bin",
//!       "image_path": "images/s0001.pgm"
//!     }
//!   ]
//! }
//! ```
//!
//! `subject_id`, `features`, `features_path` and `image_path` are optional,
//! but every sample needs features (inline or as a blob) or an image. Paths
//! are relative to the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::blob;
use crate::error::{Error, Result, SampleFault};
use crate::features::{features_for_sample, read_pgm, write_pgm, GrayImage, ToyEncoder};
use crate::graph::{build_graph, FeatureMatrix, GraphSample, LandmarkSet};

pub const FORMAT_VERSION: u32 = 1;

fn default_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub class_names: Vec<String>,
    pub feature_dim: usize,
    pub landmark_count: usize,
    pub samples: Vec<SampleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub label: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_id: Option<String>,
    pub landmarks: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
}

/// A validated sample held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSample {
    pub id: String,
    pub label: usize,
    pub subject_id: Option<String>,
    pub landmarks: LandmarkSet,
    pub features: Option<FeatureMatrix>,
    pub image: Option<GrayImage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub class_names: Vec<String>,
    pub feature_dim: usize,
    pub landmark_count: usize,
    pub samples: Vec<LoadedSample>,
}

/// Where per-landmark features come from when building graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    /// Stored features when present, otherwise encode the image.
    #[default]
    Auto,
    /// Stored features only.
    Stored,
    /// Always encode the image, ignoring stored features.
    Image,
}

impl std::str::FromStr for FeatureSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(FeatureSource::Auto),
            "stored" => Ok(FeatureSource::Stored),
            "image" => Ok(FeatureSource::Image),
            other => Err(format!(
                "unknown feature source `{other}` (auto, stored, image)"
            )),
        }
    }
}

/// Patch geometry and encoder used for image-derived features.
pub struct ImageEncoding<'a> {
    pub patch_height: usize,
    pub patch_width: usize,
    pub encoder: &'a ToyEncoder,
}

impl Dataset {
    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Resolves each sample's feature matrix according to `source`.
    pub fn feature_matrices(
        &self,
        source: FeatureSource,
        encoding: Option<&ImageEncoding<'_>>,
    ) -> Result<Vec<FeatureMatrix>> {
        use rayon::prelude::*;
        self.samples
            .par_iter()
            .map(|s| {
                let stored = match source {
                    FeatureSource::Image => None,
                    _ => s.features.clone(),
                };
                if let Some(f) = stored {
                    return Ok(f);
                }
                if source == FeatureSource::Stored {
                    return Err(Error::sample(
                        &s.id,
                        SampleFault::Invalid,
                        "no stored features",
                    ));
                }
                let image = s.image.as_ref().ok_or_else(|| {
                    Error::sample(&s.id, SampleFault::Invalid, "no image to encode")
                })?;
                let enc = encoding.ok_or_else(|| {
                    Error::invalid("image-derived features need an encoder configuration")
                })?;
                if enc.encoder.out_dim() != self.feature_dim {
                    return Err(Error::invalid(format!(
                        "encoder output dimension {} differs from manifest feature_dim {}",
                        enc.encoder.out_dim(),
                        self.feature_dim
                    )));
                }
                features_for_sample(
                    image,
                    &s.landmarks,
                    enc.patch_height,
                    enc.patch_width,
                    enc.encoder,
                )
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    }

    /// Builds one graph per sample at threshold parameter `tau`.
    pub fn build_graphs(
        &self,
        tau: f64,
        source: FeatureSource,
        encoding: Option<&ImageEncoding<'_>>,
    ) -> Result<Vec<GraphSample>> {
        use rayon::prelude::*;
        let features = self.feature_matrices(source, encoding)?;
        self.samples
            .par_iter()
            .zip(features.par_iter())
            .map(|(s, f)| build_graph(s.id.clone(), s.landmarks.clone(), f, tau, s.label))
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            class_names: self.class_names.clone(),
            feature_dim: self.feature_dim,
            landmark_count: self.landmark_count,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    base.join(rel)
}

fn sample_file_error(id: &str, err: Error) -> Error {
    match err {
        Error::MissingFile(path) => Error::sample(
            id,
            SampleFault::MissingFile,
            format!("{} does not exist", path.display()),
        ),
        Error::Parse { path, message } => Error::sample(
            id,
            SampleFault::Parse,
            format!("{}: {message}", path.display()),
        ),
        other => other,
    }
}

fn validate_record(
    record: &SampleRecord,
    manifest: &DatasetManifest,
    base: &Path,
) -> Result<LoadedSample> {
    let id = record.sample_id.as_str();
    let classes = manifest.class_names.len();
    if record.label >= classes {
        return Err(Error::sample(
            id,
            SampleFault::Label,
            format!("label {} but only {classes} classes", record.label),
        ));
    }
    if record.landmarks.len() != manifest.landmark_count {
        return Err(Error::sample(
            id,
            SampleFault::Dimension,
            format!(
                "{} landmarks, manifest declares {}",
                record.landmarks.len(),
                manifest.landmark_count
            ),
        ));
    }
    let landmarks = LandmarkSet::from_pairs(&record.landmarks)
        .map_err(|e| Error::sample(id, SampleFault::Invalid, e.to_string()))?;

    let features = match (&record.features, &record.features_path) {
        (Some(_), Some(_)) => {
            return Err(Error::sample(
                id,
                SampleFault::Invalid,
                "both inline features and features_path given",
            ))
        }
        (Some(rows), None) => Some(
            FeatureMatrix::from_rows(rows)
                .map_err(|e| Error::sample(id, SampleFault::Dimension, e.to_string()))?,
        ),
        (None, Some(rel)) => {
            let path = resolve(base, rel);
            let bytes = fs::read(&path).map_err(|e| sample_file_error(id, Error::io(&path, e)))?;
            let values =
                blob::decode(&bytes).map_err(|m| sample_file_error(id, Error::parse(&path, m)))?;
            Some(
                FeatureMatrix::new(values)
                    .map_err(|e| Error::sample(id, SampleFault::Invalid, e.to_string()))?,
            )
        }
        (None, None) => None,
    };
    if let Some(f) = &features {
        if f.rows() != manifest.landmark_count || f.dim() != manifest.feature_dim {
            return Err(Error::sample(
                id,
                SampleFault::Dimension,
                format!(
                    "features are {}x{}, manifest declares {}x{}",
                    f.rows(),
                    f.dim(),
                    manifest.landmark_count,
                    manifest.feature_dim
                ),
            ));
        }
    }
    let image = match &record.image_path {
        Some(rel) => Some(read_pgm(&resolve(base, rel)).map_err(|e| sample_file_error(id, e))?),
        None => None,
    };
    if features.is_none() && image.is_none() {
        return Err(Error::sample(
            id,
            SampleFault::Invalid,
            "needs features or an image",
        ));
    }
    Ok(LoadedSample {
        id: record.sample_id.clone(),
        label: record.label,
        subject_id: record.subject_id.clone(),
        landmarks,
        features,
        image,
    })
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::parse(
            path,
            format!("unsupported manifest version {}", manifest.format_version),
        ));
    }
    Ok(manifest)
}

/// Reads and fully validates a dataset. Side files resolve relative to the
/// manifest's directory.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    use rayon::prelude::*;
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut seen = std::collections::HashSet::new();
    for record in &manifest.samples {
        if !seen.insert(record.sample_id.as_str()) {
            return Err(Error::sample(
                &record.sample_id,
                SampleFault::Invalid,
                "duplicate sample_id",
            ));
        }
    }
    // validated in parallel, but the first failure in manifest order wins
    let samples = manifest
        .samples
        .par_iter()
        .map(|r| validate_record(r, &manifest, base))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        class_names: manifest.class_names,
        feature_dim: manifest.feature_dim,
        landmark_count: manifest.landmark_count,
        samples,
    })
}

/// How features are written by [`write_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureStorage {
    /// Inside the manifest as JSON numbers (exact for any `f64`).
    Inline,
    /// As `features/<sample_id>.bin` blobs (exact for `f32`-representable values).
    Blob,
}

/// Writes `manifest.json` plus side files into `dir` and returns the
/// manifest path. Images go to `images/<sample_id>.pgm`.
pub fn write_dataset(dir: &Path, dataset: &Dataset, storage: FeatureStorage) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut records = Vec::with_capacity(dataset.samples.len());
    for s in &dataset.samples {
        let mut record = SampleRecord {
            sample_id: s.id.clone(),
            label: s.label,
            subject_id: s.subject_id.clone(),
            landmarks: s.landmarks.to_pairs(),
            features: None,
            features_path: None,
            image_path: None,
        };
        if let Some(f) = &s.features {
            match storage {
                FeatureStorage::Inline => record.features = Some(f.to_rows()),
                FeatureStorage::Blob => {
                    let rel = format!("features/{}.bin", s.id);
                    let path = dir.join(&rel);
                    fs::create_dir_all(path.parent().unwrap()).map_err(|e| Error::io(dir, e))?;
                    fs::write(&path, blob::encode(f.values())).map_err(|e| Error::io(&path, e))?;
                    record.features_path = Some(rel);
                }
            }
        }
        if let Some(img) = &s.image {
            let rel = format!("images/{}.pgm", s.id);
            let path = dir.join(&rel);
            fs::create_dir_all(path.parent().unwrap()).map_err(|e| Error::io(dir, e))?;
            write_pgm(&path, img)?;
            record.image_path = Some(rel);
        }
        records.push(record);
    }
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        class_names: dataset.class_names.clone(),
        feature_dim: dataset.feature_dim,
        landmark_count: dataset.landmark_count,
        samples: records,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
