//! Train/test partitioning.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SplitSpec {
    /// Per-class seeded shuffle; `round(test_fraction * class_size)` samples
    /// of each class go to the test side.
    Fraction { test_fraction: f64 },
    /// Every sample whose `subject_id` is listed goes to the test side.
    Subject { test_subjects: Vec<String> },
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::Fraction { test_fraction: 0.2 }
    }
}

/// Sorted train and test indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_dataset(dataset: &Dataset, spec: &SplitSpec, seed: u64) -> Result<Split> {
    let mut test = BTreeSet::new();
    match spec {
        SplitSpec::Fraction { test_fraction } => {
            if !(0.0..=1.0).contains(test_fraction) {
                return Err(Error::invalid(format!(
                    "test fraction must lie in [0, 1], got {test_fraction}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for class in 0..dataset.classes() {
                let mut members: Vec<usize> = dataset
                    .samples
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.label == class)
                    .map(|(i, _)| i)
                    .collect();
                members.shuffle(&mut rng);
                let take = (test_fraction * members.len() as f64).round() as usize;
                test.extend(members.into_iter().take(take));
            }
        }
        SplitSpec::Subject { test_subjects } => {
            let wanted: BTreeSet<&str> = test_subjects.iter().map(String::as_str).collect();
            for (i, s) in dataset.samples.iter().enumerate() {
                if s.subject_id
                    .as_deref()
                    .is_some_and(|id| wanted.contains(id))
                {
                    test.insert(i);
                }
            }
        }
    }
    let train = (0..dataset.len()).filter(|i| !test.contains(i)).collect();
    Ok(Split {
        train,
        test: test.into_iter().collect(),
    })
}
