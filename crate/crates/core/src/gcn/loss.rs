use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Probabilities are clamped to this floor before taking the log.
pub const LOG_CLAMP: f64 = 1e-12;

/// Numerically stable softmax.
pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp = logits.mapv(|z| (z - max).exp());
    let total = exp.sum();
    exp / total
}

/// Mean negative log-likelihood of one-hot targets `y` under predictions
/// `y_hat`, both `samples x classes`.
pub fn cross_entropy(y: &Array2<f64>, y_hat: &Array2<f64>) -> Result<f64> {
    if y.dim() != y_hat.dim() {
        return Err(Error::invalid(format!(
            "label matrix {:?} and prediction matrix {:?} differ in shape",
            y.dim(),
            y_hat.dim()
        )));
    }
    let n = y.nrows();
    if n == 0 {
        return Err(Error::invalid("cross-entropy of an empty prediction set"));
    }
    let mut total = 0.0;
    for (t, p) in y.iter().zip(y_hat.iter()) {
        if *t != 0.0 {
            total += t * p.clamp(LOG_CLAMP, 1.0).ln();
        }
    }
    Ok(-total / n as f64)
}

/// Cross-entropy of a single prediction against class `target`.
pub fn sample_loss(probabilities: &Array1<f64>, target: usize) -> f64 {
    -probabilities[target].clamp(LOG_CLAMP, 1.0).ln()
}

/// One-hot label matrix for `labels` over `classes` classes.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<Array2<f64>> {
    let mut y = Array2::zeros((labels.len(), classes));
    for (j, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::invalid(format!(
                "label {label} at row {j} is out of range for {classes} classes"
            )));
        }
        y[[j, label]] = 1.0;
    }
    Ok(y)
}
