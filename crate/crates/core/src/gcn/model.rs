use ndarray::{Array1, Array2, Axis};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::adjacency::{normalize_adjacency, NormalizedAdjacency};
use super::loss::softmax;
use crate::error::{Error, Result};
use crate::graph::GraphSample;

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub classes: usize,
    pub activation: Activation,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: 64,
            hidden_dim: 256,
            layers: 2,
            classes: 6,
            activation: Activation::Relu,
            dropout: 0.2,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.layers == 0 || self.classes == 0 {
            return Err(Error::invalid(format!(
                "model dimensions must be positive: input {}, hidden {}, layers {}, classes {}",
                self.input_dim, self.hidden_dim, self.layers, self.classes
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    /// Input and output width of layer `l`.
    pub fn layer_dims(&self, l: usize) -> (usize, usize) {
        let fan_in = if l == 0 {
            self.input_dim
        } else {
            self.hidden_dim
        };
        (fan_in, self.hidden_dim)
    }

    /// Width of the node embeddings fed to the readout.
    pub fn embedding_dim(&self) -> usize {
        self.hidden_dim
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Where dropout masks come from during a forward pass.
pub enum Dropout<'a> {
    Off,
    Sample(&'a mut dyn RngCore),
    /// Pre-drawn scaled masks (entries `0` or `1 / (1 - rate)`), one per
    /// hidden layer that receives dropout. An empty slice replays a pass
    /// that drew no masks.
    Fixed(&'a [Array2<f64>]),
}

/// A sample with its normalized adjacency computed once.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub features: Array2<f64>,
    pub adjacency: NormalizedAdjacency,
    pub label: usize,
}

impl PreparedGraph {
    pub fn new(sample: &GraphSample) -> Self {
        PreparedGraph {
            features: sample.features.values().clone(),
            adjacency: normalize_adjacency(&sample.adjacency),
            label: sample.label,
        }
    }
}

/// Intermediate values recorded by a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(crate) generation: u64,
    pub(crate) adjacency: Array2<f64>,
    /// `Â H^(l)` for every layer.
    pub(crate) aggregated: Vec<Array2<f64>>,
    /// `Â H^(l) W^(l)` before the activation.
    pub(crate) pre_activations: Vec<Array2<f64>>,
    pub(crate) masks: Vec<Array2<f64>>,
    pub(crate) pooled: Array1<f64>,
    pub(crate) probabilities: Array1<f64>,
}

impl ForwardCache {
    pub fn probabilities(&self) -> &Array1<f64> {
        &self.probabilities
    }

    /// Mean-pooled node embedding fed to the classifier head.
    pub fn embedding(&self) -> &Array1<f64> {
        &self.pooled
    }

    pub fn dropout_masks(&self) -> &[Array2<f64>] {
        &self.masks
    }
}

/// Graph convolutional classifier: `L` propagation layers, mean readout and
/// an affine softmax head. Equality compares configuration and parameters.
#[derive(Debug, Clone)]
pub struct GcnModel {
    pub(crate) config: ModelConfig,
    pub(crate) layer_weights: Vec<Array2<f64>>,
    /// `classes x embedding_dim`.
    pub(crate) head_weights: Array2<f64>,
    pub(crate) head_bias: Array1<f64>,
    /// Bumped on every parameter update so stale caches can be detected.
    pub(crate) generation: u64,
}

impl PartialEq for GcnModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.layer_weights == other.layer_weights
            && self.head_weights == other.head_weights
            && self.head_bias == other.head_bias
    }
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
}

impl GcnModel {
    /// Glorot-uniform weights, zero bias.
    pub fn init(config: ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let layer_weights = (0..config.layers)
            .map(|l| {
                let (fan_in, fan_out) = config.layer_dims(l);
                glorot(fan_in, fan_out, rng)
            })
            .collect();
        let head_weights = glorot(config.classes, config.embedding_dim(), rng);
        Ok(GcnModel {
            config,
            layer_weights,
            head_weights,
            head_bias: Array1::zeros(config.classes),
            generation: 0,
        })
    }

    /// Assembles a model from explicit parameters, checking every shape.
    pub fn from_parts(
        config: ModelConfig,
        layer_weights: Vec<Array2<f64>>,
        head_weights: Array2<f64>,
        head_bias: Array1<f64>,
    ) -> Result<Self> {
        config.validate()?;
        if layer_weights.len() != config.layers {
            return Err(Error::DimensionMismatch {
                context: "layer count",
                expected: config.layers,
                found: layer_weights.len(),
            });
        }
        for (l, w) in layer_weights.iter().enumerate() {
            let (fan_in, fan_out) = config.layer_dims(l);
            if w.dim() != (fan_in, fan_out) {
                return Err(Error::invalid(format!(
                    "layer {l} weight has shape {:?}, expected ({fan_in}, {fan_out})",
                    w.dim()
                )));
            }
        }
        if head_weights.dim() != (config.classes, config.embedding_dim()) {
            return Err(Error::invalid(format!(
                "head weight has shape {:?}, expected ({}, {})",
                head_weights.dim(),
                config.classes,
                config.embedding_dim()
            )));
        }
        if head_bias.len() != config.classes {
            return Err(Error::DimensionMismatch {
                context: "head bias",
                expected: config.classes,
                found: head_bias.len(),
            });
        }
        let model = GcnModel {
            config,
            layer_weights,
            head_weights,
            head_bias,
            generation: 0,
        };
        if !model
            .parameters()
            .iter()
            .all(|p| p.iter().all(|v| v.is_finite()))
        {
            return Err(Error::Numeric(
                "model parameters contain non-finite values".into(),
            ));
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layer_weights(&self) -> &[Array2<f64>] {
        &self.layer_weights
    }

    pub fn head_weights(&self) -> &Array2<f64> {
        &self.head_weights
    }

    pub fn head_bias(&self) -> &Array1<f64> {
        &self.head_bias
    }

    /// Every parameter tensor as a flat row-major slice, in a fixed order:
    /// layer weights, head weights, head bias.
    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self
            .layer_weights
            .iter()
            .map(|w| w.as_slice().expect("standard layout"))
            .collect();
        out.push(self.head_weights.as_slice().expect("standard layout"));
        out.push(self.head_bias.as_slice().expect("standard layout"));
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        self.generation += 1;
        let mut out: Vec<&mut [f64]> = self
            .layer_weights
            .iter_mut()
            .map(|w| w.as_slice_mut().expect("standard layout"))
            .collect();
        out.push(self.head_weights.as_slice_mut().expect("standard layout"));
        out.push(self.head_bias.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn forward(
        &self,
        graph: &PreparedGraph,
        mode: Mode,
        rng: &mut dyn RngCore,
    ) -> Result<ForwardCache> {
        let dropout = match mode {
            Mode::Train => Dropout::Sample(rng),
            Mode::Eval => Dropout::Off,
        };
        self.forward_with(graph, dropout)
    }

    /// Deterministic evaluation-mode forward pass.
    pub fn forward_eval(&self, graph: &PreparedGraph) -> Result<ForwardCache> {
        self.forward_with(graph, Dropout::Off)
    }

    pub fn forward_with(
        &self,
        graph: &PreparedGraph,
        mut dropout: Dropout<'_>,
    ) -> Result<ForwardCache> {
        let n = graph.features.nrows();
        if n == 0 {
            return Err(Error::invalid("graph has no nodes"));
        }
        if graph.adjacency.len() != n {
            return Err(Error::DimensionMismatch {
                context: "normalized adjacency vs feature rows",
                expected: n,
                found: graph.adjacency.len(),
            });
        }
        if graph.features.ncols() != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                context: "feature dimension vs model input",
                expected: self.config.input_dim,
                found: graph.features.ncols(),
            });
        }
        let adjacency = graph.adjacency.values();
        let layers = self.layer_weights.len();
        let rate = self.config.dropout;
        let mut aggregated = Vec::with_capacity(layers);
        let mut pre_activations = Vec::with_capacity(layers);
        let mut masks = Vec::new();
        let mut h = graph.features.clone();
        for (l, w) in self.layer_weights.iter().enumerate() {
            let m = adjacency.dot(&h);
            let z = m.dot(w);
            let mut a = z.mapv(|v| self.config.activation.apply(v));
            if l + 1 < layers {
                let mask = match &mut dropout {
                    Dropout::Off => None,
                    Dropout::Sample(rng) if rate > 0.0 => {
                        let keep = 1.0 / (1.0 - rate);
                        Some(a.map(|_| {
                            if rng.random::<f64>() < rate {
                                0.0
                            } else {
                                keep
                            }
                        }))
                    }
                    Dropout::Sample(_) => None,
                    Dropout::Fixed([]) => None,
                    Dropout::Fixed(fixed) => {
                        let mask = fixed.get(masks.len()).ok_or_else(|| {
                            Error::Contract(format!("no fixed dropout mask for layer {l}"))
                        })?;
                        if mask.dim() != a.dim() {
                            return Err(Error::Contract(format!(
                                "dropout mask for layer {l} has shape {:?}, expected {:?}",
                                mask.dim(),
                                a.dim()
                            )));
                        }
                        Some(mask.clone())
                    }
                };
                if let Some(mask) = mask {
                    a *= &mask;
                    masks.push(mask);
                }
            }
            aggregated.push(m);
            pre_activations.push(z);
            h = a;
        }
        let pooled = readout(&h);
        let logits = self.head_weights.dot(&pooled) + &self.head_bias;
        let probabilities = softmax(&logits);
        if probabilities.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric(
                "forward pass produced non-finite probabilities".into(),
            ));
        }
        Ok(ForwardCache {
            generation: self.generation,
            adjacency: adjacency.clone(),
            aggregated,
            pre_activations,
            masks,
            pooled,
            probabilities,
        })
    }

    /// Readout embedding in eval mode.
    pub fn embed(&self, graph: &PreparedGraph) -> Result<Array1<f64>> {
        Ok(self.forward_eval(graph)?.pooled)
    }
}

/// One propagation step: `activation(Â H W)`.
pub fn gcn_layer(
    adjacency: &NormalizedAdjacency,
    h: &Array2<f64>,
    w: &Array2<f64>,
    activation: Activation,
) -> Result<Array2<f64>> {
    if adjacency.len() != h.nrows() {
        return Err(Error::DimensionMismatch {
            context: "adjacency vs node features",
            expected: adjacency.len(),
            found: h.nrows(),
        });
    }
    if h.ncols() != w.nrows() {
        return Err(Error::DimensionMismatch {
            context: "node features vs weight rows",
            expected: w.nrows(),
            found: h.ncols(),
        });
    }
    Ok(adjacency
        .values()
        .dot(h)
        .dot(w)
        .mapv(|v| activation.apply(v)))
}

/// Column-wise mean over nodes.
pub fn readout(h: &Array2<f64>) -> Array1<f64> {
    h.mean_axis(Axis(0))
        .expect("readout needs at least one node")
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(probabilities: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > probabilities[best] {
            best = i;
        }
    }
    best
}
