//! Deterministic synthetic expression datasets.
//!
//! Every class has a template constellation: landmarks evenly spaced on a
//! circle of radius 50 around the centre of a 224x224 frame, each pushed in a
//! class-specific direction by `geometry_displacement_scale` pixels. Each
//! landmark also has a class-specific unit feature prototype that mixes a
//! per-landmark direction shared by all classes with a class-specific one.
//! Samples jitter the template landmarks and perturb the prototypes with
//! Gaussian noise before re-normalizing.

use std::f64::consts::TAU;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::manifest::{Dataset, LoadedSample};
use crate::error::{Error, Result};
use crate::features::GrayImage;
use crate::graph::{LandmarkSet, Point};

pub const FRAME_SIZE: usize = 224;
pub const TEMPLATE_RADIUS: f64 = 50.0;
pub const TEMPLATE_CENTER: f64 = 112.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub samples_per_class: usize,
    pub landmarks: usize,
    pub feature_dim: usize,
    /// Pixels each template landmark moves in its class direction.
    pub geometry_displacement_scale: f64,
    /// Standard deviation (pixels) of per-sample landmark jitter.
    pub landmark_noise_scale: f64,
    /// Norm scale of the Gaussian perturbation added to each unit prototype.
    pub feature_noise_scale: f64,
    /// Also render a grayscale image per sample.
    pub images: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: 6,
            samples_per_class: 40,
            landmarks: 68,
            feature_dim: 64,
            geometry_displacement_scale: 8.0,
            landmark_noise_scale: 1.0,
            feature_noise_scale: 0.5,
            images: false,
            seed: 1000,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("classes", self.classes),
            ("samples_per_class", self.samples_per_class),
            ("feature_dim", self.feature_dim),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if self.landmarks < 2 {
            return Err(Error::invalid("landmarks must be at least 2"));
        }
        let scales = [
            (
                "geometry_displacement_scale",
                self.geometry_displacement_scale,
            ),
            ("landmark_noise_scale", self.landmark_noise_scale),
            ("feature_noise_scale", self.feature_noise_scale),
        ];
        for (name, v) in scales {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }
}

/// The noise-free constellation and prototypes of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTemplate {
    pub landmarks: Vec<Point>,
    /// `landmarks x feature_dim`, unit rows.
    pub features: Array2<f64>,
    /// Blob brightness per landmark, used when rendering images.
    pub intensities: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub templates: Vec<ClassTemplate>,
}

fn gaussian_vector(rng: &mut impl Rng, d: usize) -> Array1<f64> {
    Array1::from_shape_simple_fn(d, || StandardNormal.sample(rng))
}

fn unit(v: Array1<f64>) -> Array1<f64> {
    let norm = v.dot(&v).sqrt();
    if norm > 0.0 {
        v / norm
    } else {
        v
    }
}

/// Rounds to the nearest `f32` so values survive the blob format exactly.
fn to_f32_grid(v: f64) -> f64 {
    f64::from(v as f32)
}

fn templates(spec: &SyntheticSpec, rng: &mut impl Rng) -> Vec<ClassTemplate> {
    let (n, d) = (spec.landmarks, spec.feature_dim);
    let shared: Vec<Array1<f64>> = (0..n).map(|_| unit(gaussian_vector(rng, d))).collect();
    (0..spec.classes)
        .map(|_| {
            let mut landmarks = Vec::with_capacity(n);
            let mut features = Array2::zeros((n, d));
            let mut intensities = Vec::with_capacity(n);
            for (i, base) in shared.iter().enumerate() {
                let angle = TAU * i as f64 / n as f64;
                let push: f64 = rng.random_range(0.0..TAU);
                landmarks.push(Point::new(
                    TEMPLATE_CENTER
                        + TEMPLATE_RADIUS * angle.cos()
                        + spec.geometry_displacement_scale * push.cos(),
                    TEMPLATE_CENTER
                        + TEMPLATE_RADIUS * angle.sin()
                        + spec.geometry_displacement_scale * push.sin(),
                ));
                let own = unit(gaussian_vector(rng, d));
                features.row_mut(i).assign(&unit(base + &own));
                intensities.push(rng.random_range(60.0..220.0));
            }
            ClassTemplate {
                landmarks,
                features,
                intensities,
            }
        })
        .collect()
}

/// Draws blobs of the given brightness at each landmark over a dim
/// background, plus per-pixel noise.
fn render(landmarks: &[Point], intensities: &[f64], noise: f64, rng: &mut impl Rng) -> GrayImage {
    const SIGMA: f64 = 4.0;
    const RADIUS: i64 = 12;
    let mut canvas = vec![30.0f64; FRAME_SIZE * FRAME_SIZE];
    for (p, &amp) in landmarks.iter().zip(intensities) {
        let (cx, cy) = (p.x.round() as i64, p.y.round() as i64);
        for y in (cy - RADIUS).max(0)..=(cy + RADIUS).min(FRAME_SIZE as i64 - 1) {
            for x in (cx - RADIUS).max(0)..=(cx + RADIUS).min(FRAME_SIZE as i64 - 1) {
                let dx = x as f64 - p.x;
                let dy = y as f64 - p.y;
                canvas[y as usize * FRAME_SIZE + x as usize] +=
                    amp * (-(dx * dx + dy * dy) / (2.0 * SIGMA * SIGMA)).exp();
            }
        }
    }
    let pixels = canvas
        .into_iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            (v + 20.0 * noise * z).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(FRAME_SIZE, FRAME_SIZE, pixels).expect("frame dimensions are valid")
}

pub fn class_names(classes: usize) -> Vec<String> {
    const NAMES: [&str; 7] = [
        "anger",
        "disgust",
        "fear",
        "happiness",
        "sadness",
        "surprise",
        "neutral",
    ];
    (0..classes)
        .map(|c| match NAMES.get(c) {
            Some(name) if classes <= NAMES.len() => (*name).to_string(),
            _ => format!("class{c}"),
        })
        .collect()
}

/// Generates a dataset deterministically from `spec.seed`. Samples are
/// ordered class by class; sample `k` of class `c` has id `c{c}_s{k:04}` and
/// subject id `subj{k:04}`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let templates = templates(spec, &mut rng);
    let (n, d) = (spec.landmarks, spec.feature_dim);
    let per_coord_noise = spec.feature_noise_scale / (d as f64).sqrt();

    let mut samples = Vec::with_capacity(spec.classes * spec.samples_per_class);
    for (c, template) in templates.iter().enumerate() {
        for k in 0..spec.samples_per_class {
            let points: Vec<Point> = template
                .landmarks
                .iter()
                .map(|p| {
                    let jx: f64 = StandardNormal.sample(&mut rng);
                    let jy: f64 = StandardNormal.sample(&mut rng);
                    Point::new(
                        p.x + spec.landmark_noise_scale * jx,
                        p.y + spec.landmark_noise_scale * jy,
                    )
                })
                .collect();
            let mut features = Array2::zeros((n, d));
            for (mut row, proto) in features
                .rows_mut()
                .into_iter()
                .zip(template.features.rows())
            {
                let noisy = &proto + &(gaussian_vector(&mut rng, d) * per_coord_noise);
                row.assign(&unit(noisy).mapv(to_f32_grid));
            }
            let image = spec.images.then(|| {
                render(
                    &points,
                    &template.intensities,
                    spec.feature_noise_scale,
                    &mut rng,
                )
            });
            samples.push(LoadedSample {
                id: format!("c{c}_s{k:04}"),
                label: c,
                subject_id: Some(format!("subj{k:04}")),
                landmarks: LandmarkSet::new(points)?,
                features: Some(crate::graph::FeatureMatrix::new(features)?),
                image,
            });
        }
    }
    Ok(SyntheticDataset {
        dataset: Dataset {
            class_names: class_names(spec.classes),
            feature_dim: d,
            landmark_count: n,
            samples,
        },
        templates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            classes: 3,
            samples_per_class: 4,
            landmarks: 10,
            feature_dim: 8,
            seed,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn shape_and_labels() {
        let s = generate_synthetic(&small(1)).unwrap();
        assert_eq!(s.dataset.len(), 12);
        assert_eq!(s.dataset.labels(), vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
        for sample in &s.dataset.samples {
            let f = sample.features.as_ref().unwrap();
            assert_eq!((f.rows(), f.dim()), (10, 8));
            assert_eq!(sample.landmarks.len(), 10);
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_synthetic(&small(5)).unwrap();
        let b = generate_synthetic(&small(5)).unwrap();
        let c = generate_synthetic(&small(6)).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn zero_noise_makes_classes_constant() {
        let spec = SyntheticSpec {
            landmark_noise_scale: 0.0,
            feature_noise_scale: 0.0,
            images: true,
            ..small(2)
        };
        let s = generate_synthetic(&spec).unwrap();
        for class in s.dataset.samples.chunks(4) {
            for other in &class[1..] {
                assert_eq!(other.landmarks, class[0].landmarks);
                assert_eq!(other.features, class[0].features);
                assert_eq!(other.image, class[0].image);
            }
        }
    }

    #[test]
    fn features_are_f32_exact_and_unit() {
        let s = generate_synthetic(&small(3)).unwrap();
        for sample in &s.dataset.samples {
            for row in sample.features.as_ref().unwrap().values().rows() {
                assert!(row.iter().all(|&v| f64::from(v as f32) == v));
                assert!((row.dot(&row).sqrt() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_bad_spec() {
        let mut spec = small(1);
        spec.samples_per_class = 0;
        assert!(generate_synthetic(&spec).is_err());
        let mut spec = small(1);
        spec.feature_noise_scale = -1.0;
        assert!(generate_synthetic(&spec).is_err());
    }
}
