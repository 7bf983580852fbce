use ndarray::{Array1, Array2, Axis};

use super::model::{ForwardCache, GcnModel};
use crate::error::{Error, Result};

/// Parameter gradients, laid out like the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Array2<f64>>,
    pub head_weights: Array2<f64>,
    pub head_bias: Array1<f64>,
}

impl Gradients {
    pub fn zeros_like(model: &GcnModel) -> Self {
        Gradients {
            layers: model
                .layer_weights()
                .iter()
                .map(|w| Array2::zeros(w.raw_dim()))
                .collect(),
            head_weights: Array2::zeros(model.head_weights().raw_dim()),
            head_bias: Array1::zeros(model.head_bias().len()),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            *a += b;
        }
        self.head_weights += &other.head_weights;
        self.head_bias += &other.head_bias;
    }

    /// Flat slices in the same order as [`GcnModel::parameters`].
    pub fn as_slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self
            .layers
            .iter()
            .map(|g| g.as_slice().expect("standard layout"))
            .collect();
        out.push(self.head_weights.as_slice().expect("standard layout"));
        out.push(self.head_bias.as_slice().expect("standard layout"));
        out
    }

    pub fn as_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self
            .layers
            .iter_mut()
            .map(|g| g.as_slice_mut().expect("standard layout"))
            .collect();
        out.push(self.head_weights.as_slice_mut().expect("standard layout"));
        out.push(self.head_bias.as_slice_mut().expect("standard layout"));
        out
    }
}

/// Gradients of `grad_loss * CE(softmax(logits), target)` for the pass
/// recorded in `cache`.
pub fn backward(
    model: &GcnModel,
    cache: &ForwardCache,
    target: usize,
    grad_loss: f64,
) -> Result<Gradients> {
    let classes = model.config().classes;
    if target >= classes {
        return Err(Error::invalid(format!(
            "target class {target} is out of range for {classes} classes"
        )));
    }
    // softmax + cross-entropy collapse to (p - y) at the logits
    let mut dlogits = cache.probabilities.clone();
    dlogits[target] -= 1.0;
    dlogits *= grad_loss;
    backward_from_logits(model, cache, &dlogits)
}

/// Reverse pass given the gradient with respect to the head's logits.
pub fn backward_from_logits(
    model: &GcnModel,
    cache: &ForwardCache,
    dlogits: &Array1<f64>,
) -> Result<Gradients> {
    check_cache(model, cache)?;
    if dlogits.len() != model.config().classes {
        return Err(Error::DimensionMismatch {
            context: "logit gradient",
            expected: model.config().classes,
            found: dlogits.len(),
        });
    }
    let activation = model.config().activation;
    let layers = model.layer_weights().len();
    let n = cache.adjacency.nrows();

    let head_weights = outer(dlogits, &cache.pooled);
    let head_bias = dlogits.clone();
    let dpooled = model.head_weights().t().dot(dlogits) / n as f64;
    let mut dh = dpooled
        .insert_axis(Axis(0))
        .broadcast((n, cache.pooled.len()))
        .expect("broadcast pooled gradient")
        .to_owned();

    let mut layer_grads = vec![Array2::zeros((0, 0)); layers];
    for l in (0..layers).rev() {
        if let Some(mask) = cache.masks.get(l).filter(|_| l + 1 < layers) {
            dh *= mask;
        }
        let z = &cache.pre_activations[l];
        let mut dz = dh;
        dz.zip_mut_with(z, |g, &zv| *g *= activation.derivative(zv));
        layer_grads[l] = cache.aggregated[l].t().dot(&dz);
        if l > 0 {
            let dm = dz.dot(&model.layer_weights()[l].t());
            dh = cache.adjacency.t().dot(&dm);
        } else {
            dh = Array2::zeros((0, 0));
        }
    }
    Ok(Gradients {
        layers: layer_grads,
        head_weights,
        head_bias,
    })
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

fn check_cache(model: &GcnModel, cache: &ForwardCache) -> Result<()> {
    if cache.generation != model.generation {
        return Err(Error::Contract(format!(
            "forward cache was recorded at parameter generation {}, model is at {}",
            cache.generation, model.generation
        )));
    }
    let layers = model.layer_weights().len();
    if cache.pre_activations.len() != layers || cache.aggregated.len() != layers {
        return Err(Error::Contract(format!(
            "forward cache holds {} layers, model has {layers}",
            cache.pre_activations.len()
        )));
    }
    if !cache.masks.is_empty() && cache.masks.len() != layers - 1 {
        return Err(Error::Contract(format!(
            "forward cache holds {} dropout masks, expected 0 or {}",
            cache.masks.len(),
            layers - 1
        )));
    }
    for (l, (z, w)) in cache
        .pre_activations
        .iter()
        .zip(model.layer_weights())
        .enumerate()
    {
        if z.ncols() != w.ncols() || cache.aggregated[l].ncols() != w.nrows() {
            return Err(Error::Contract(format!(
                "forward cache layer {l} does not match the model's weight shape"
            )));
        }
    }
    if cache.pooled.len() != model.head_weights().ncols() {
        return Err(Error::Contract(
            "forward cache embedding width does not match the head".into(),
        ));
    }
    Ok(())
}
