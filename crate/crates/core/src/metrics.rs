//! Classification metrics: accuracy, macro-F1, WAR and UAR.
//!
//! WAR is the support-weighted mean of per-class recall, which is the same
//! number as overall accuracy; both are reported. UAR averages recall over
//! the classes that actually occur in the evaluated labels.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `counts[t][p]` = number of samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if let Some(t) = counts.iter().position(|row| row.len() != c) {
            return Err(Error::invalid(format!(
                "confusion row {t} has {} entries, expected {c}",
                counts[t].len()
            )));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Number of samples whose true class is `t`.
    pub fn support(&self, t: usize) -> u64 {
        self.counts[t].iter().sum()
    }

    /// Number of samples predicted as `p`.
    pub fn predicted(&self, p: usize) -> u64 {
        self.counts.iter().map(|row| row[p]).sum()
    }
}

pub fn confusion(truth: &[usize], predicted: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            context: "true vs predicted label count",
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    let mut counts = vec![vec![0u64; classes]; classes];
    for (i, (&t, &p)) in truth.iter().zip(predicted).enumerate() {
        if t >= classes || p >= classes {
            return Err(Error::invalid(format!(
                "label pair ({t}, {p}) at position {i} is out of range for {classes} classes"
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub loss: f64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub war: f64,
    pub uar: f64,
    /// Recall per class; `None` for classes with no true samples.
    pub per_class_recall: Vec<Option<f64>>,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(confusion: &ConfusionMatrix, loss: f64) -> Result<MetricsReport> {
    let total = confusion.total();
    if confusion.classes() == 0 || total == 0 {
        return Err(Error::invalid("metrics need at least one evaluated sample"));
    }
    let c = confusion.classes();
    let accuracy = ratio(confusion.trace(), total);

    let per_class_recall: Vec<Option<f64>> = (0..c)
        .map(|t| {
            let support = confusion.support(t);
            (support > 0).then(|| ratio(confusion.get(t, t), support))
        })
        .collect();

    let present: Vec<f64> = per_class_recall.iter().flatten().copied().collect();
    let uar = present.iter().sum::<f64>() / present.len() as f64;

    // support_t / total * (tp_t / support_t): each weight cancels its recall's
    // denominator, so the weighted sum is formed over integer numerators
    let weighted_hits: u64 = per_class_recall
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_some())
        .map(|(t, _)| confusion.get(t, t))
        .sum();
    let war = ratio(weighted_hits, total);

    let mut f1_sum = 0.0;
    for k in 0..c {
        let tp = confusion.get(k, k);
        let precision = ratio(tp, confusion.predicted(k));
        let recall = ratio(tp, confusion.support(k));
        if precision + recall > 0.0 {
            f1_sum += 2.0 * precision * recall / (precision + recall);
        }
    }
    let macro_f1 = f1_sum / c as f64;

    Ok(MetricsReport {
        loss,
        accuracy,
        macro_f1,
        war,
        uar,
        per_class_recall,
        confusion: confusion.clone(),
    })
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>8}", "metric", "value")?;
        writeln!(f, "{:<10} {:>8.4}", "Loss", self.loss)?;
        writeln!(f, "{:<10} {:>8.4}", "Acc", self.accuracy)?;
        writeln!(f, "{:<10} {:>8.4}", "F1-Score", self.macro_f1)?;
        writeln!(f, "{:<10} {:>8.4}", "WAR", self.war)?;
        writeln!(f, "{:<10} {:>8.4}", "UAR", self.uar)?;
        writeln!(f)?;
        writeln!(f, "confusion (rows = true, cols = predicted)")?;
        for row in self.confusion.counts() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>5}")).collect();
            writeln!(f, "{}", cells.join(""))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_examples() {
        let m = confusion(&[0, 0, 0, 1], &[0, 0, 1, 0], 2).unwrap();
        assert_eq!(m.counts(), &[vec![2, 1], vec![1, 0]]);
        let m = confusion(&[0, 1, 2, 2], &[0, 1, 2, 2], 3).unwrap();
        assert_eq!(m.counts(), &[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]);
        let m = confusion(&[0, 1, 2], &[0, 0, 0], 3).unwrap();
        assert!((0..3).all(|t| m.get(t, 1) == 0 && m.get(t, 2) == 0));
        assert!(confusion(&[0, 3], &[0, 0], 3).is_err());
        assert!(confusion(&[0], &[0, 1], 3).is_err());
    }

    #[test]
    fn skewed_fixture() {
        let m = ConfusionMatrix::from_counts(vec![vec![3, 0], vec![1, 0]]).unwrap();
        let r = compute_metrics(&m, 0.0).unwrap();
        assert_eq!(r.per_class_recall, vec![Some(1.0), Some(0.0)]);
        assert_eq!(r.uar, 0.5);
        assert_eq!(r.war, 0.75);
        assert_eq!(r.accuracy, 0.75);
        assert!((r.macro_f1 - 0.428_571_428_571_428_6).abs() < 1e-12);
    }

    #[test]
    fn perfect_classifier() {
        let m = ConfusionMatrix::from_counts(vec![vec![5, 0, 0], vec![0, 5, 0], vec![0, 0, 5]])
            .unwrap();
        let r = compute_metrics(&m, 0.1).unwrap();
        assert_eq!((r.accuracy, r.war, r.uar, r.macro_f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn absent_class_excluded_from_uar() {
        let m = ConfusionMatrix::from_counts(vec![vec![2, 0, 0], vec![0, 0, 0], vec![1, 0, 1]])
            .unwrap();
        let r = compute_metrics(&m, 0.0).unwrap();
        assert_eq!(r.per_class_recall[1], None);
        assert_eq!(r.uar, 0.75);
    }

    #[test]
    fn empty_rejected() {
        let m = ConfusionMatrix::from_counts(vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert!(compute_metrics(&m, 0.0).is_err());
        assert!(compute_metrics(&ConfusionMatrix::from_counts(vec![]).unwrap(), 0.0).is_err());
    }

    /// Per-sample counting oracle, independent of the confusion matrix.
    fn oracle(truth: &[usize], pred: &[usize], c: usize) -> (f64, f64, f64) {
        let n = truth.len() as f64;
        let acc = truth.iter().zip(pred).filter(|(t, p)| t == p).count() as f64 / n;
        let mut recalls = vec![];
        let mut f1 = 0.0;
        for k in 0..c {
            let tp = truth
                .iter()
                .zip(pred)
                .filter(|&(&t, &p)| t == k && p == k)
                .count() as f64;
            let support = truth.iter().filter(|&&t| t == k).count() as f64;
            let predicted = pred.iter().filter(|&&p| p == k).count() as f64;
            if support > 0.0 {
                recalls.push(tp / support);
            }
            let prec = if predicted > 0.0 { tp / predicted } else { 0.0 };
            let rec = if support > 0.0 { tp / support } else { 0.0 };
            if prec + rec > 0.0 {
                f1 += 2.0 * prec * rec / (prec + rec);
            }
        }
        (
            acc,
            recalls.iter().sum::<f64>() / recalls.len() as f64,
            f1 / c as f64,
        )
    }

    proptest! {
        #[test]
        fn matches_counting_oracle(
            c in 1usize..=10,
            pairs in prop::collection::vec((0usize..10, 0usize..10), 1..1000),
        ) {
            let truth: Vec<usize> = pairs.iter().map(|p| p.0 % c).collect();
            let pred: Vec<usize> = pairs.iter().map(|p| p.1 % c).collect();
            let r = compute_metrics(&confusion(&truth, &pred, c).unwrap(), 0.0).unwrap();
            let (acc, uar, f1) = oracle(&truth, &pred, c);
            prop_assert_eq!(r.accuracy, acc);
            prop_assert!((r.uar - uar).abs() <= 1e-12);
            prop_assert!((r.macro_f1 - f1).abs() <= 1e-12);
            prop_assert!((r.war - r.accuracy).abs() <= 1e-12);
            for v in [r.accuracy, r.macro_f1, r.war, r.uar] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
