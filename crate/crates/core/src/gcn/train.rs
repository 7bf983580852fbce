use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backward::{backward, Gradients};
use super::loss::{cross_entropy, one_hot, sample_loss};
use super::model::{argmax, GcnModel, Mode, ModelConfig, PreparedGraph};
use super::optim::{adam_step, lr_schedule, AdamState, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::GraphSample;
use crate::metrics::{compute_metrics, confusion, MetricsReport};

/// Training statistics for one epoch, measured in train mode while the
/// epoch's updates were applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GcnModel,
    pub history: Vec<EpochRecord>,
    pub optimizer: AdamState,
}

pub fn prepare(samples: &[GraphSample]) -> Vec<PreparedGraph> {
    samples.par_iter().map(PreparedGraph::new).collect()
}

fn check_dataset(graphs: &[PreparedGraph], config: &ModelConfig) -> Result<()> {
    if graphs.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    for (i, g) in graphs.iter().enumerate() {
        if g.features.ncols() != config.input_dim {
            return Err(Error::invalid(format!(
                "sample {i} has feature dimension {}, model expects {}",
                g.features.ncols(),
                config.input_dim
            )));
        }
        if g.label >= config.classes {
            return Err(Error::invalid(format!(
                "sample {i} has label {} but the model has {} classes",
                g.label, config.classes
            )));
        }
    }
    Ok(())
}

/// Seeded mini-batch training with Adam and a cosine learning-rate schedule.
pub fn train(
    dataset: &[GraphSample],
    model_config: ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_prepared(&prepare(dataset), model_config, config)
}

/// Like [`train`] on graphs whose adjacency is already normalized.
///
/// Per-sample passes in a batch run in parallel, each with its own dropout
/// generator seeded sequentially from the run's generator; gradients are then
/// summed in batch order, so results do not depend on the thread count.
pub fn train_prepared(
    graphs: &[PreparedGraph],
    model_config: ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    model_config.validate()?;
    config.validate()?;
    check_dataset(graphs, &model_config)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = GcnModel::init(model_config, &mut rng)?;
    let mut optimizer = AdamState::new(&model, config);
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..graphs.len()).collect();

    for epoch in 0..config.epochs {
        let lr = lr_schedule(epoch, config.epochs, config);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let jobs: Vec<(usize, u64)> = batch.iter().map(|&i| (i, rng.random())).collect();
            let results: Vec<Result<(f64, bool, Gradients)>> = jobs
                .par_iter()
                .map(|&(i, seed)| {
                    let graph = &graphs[i];
                    let mut dropout_rng = ChaCha8Rng::seed_from_u64(seed);
                    let cache = model.forward(graph, Mode::Train, &mut dropout_rng)?;
                    let loss = sample_loss(cache.probabilities(), graph.label);
                    let hit = argmax(cache.probabilities()) == graph.label;
                    let grads = backward(&model, &cache, graph.label, scale)?;
                    Ok((loss, hit, grads))
                })
                .collect();
            let mut total = Gradients::zeros_like(&model);
            for result in results {
                let (loss, hit, grads) = result?;
                loss_sum += loss;
                correct += usize::from(hit);
                total.add_assign(&grads);
            }
            adam_step(&mut model, &total, &mut optimizer, lr, config.weight_decay)?;
        }
        let loss = loss_sum / graphs.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "training loss diverged at epoch {epoch}"
            )));
        }
        history.push(EpochRecord {
            epoch,
            lr,
            loss,
            accuracy: correct as f64 / graphs.len() as f64,
        });
    }
    Ok(TrainOutcome {
        model,
        history,
        optimizer,
    })
}

/// Predicted classes and the `samples x classes` probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub classes: Vec<usize>,
    pub probabilities: Array2<f64>,
}

pub fn predict(model: &GcnModel, samples: &[GraphSample]) -> Result<Predictions> {
    predict_prepared(model, &prepare(samples))
}

/// Eval-mode predictions; ties resolve to the lowest class index.
pub fn predict_prepared(model: &GcnModel, graphs: &[PreparedGraph]) -> Result<Predictions> {
    let rows: Vec<_> = graphs
        .par_iter()
        .map(|g| model.forward_eval(g).map(|c| c.probabilities().clone()))
        .collect::<Result<_>>()?;
    let classes_n = model.config().classes;
    let mut probabilities = Array2::zeros((rows.len(), classes_n));
    let mut classes = Vec::with_capacity(rows.len());
    for (mut dst, p) in probabilities.rows_mut().into_iter().zip(&rows) {
        dst.assign(p);
        classes.push(argmax(p));
    }
    Ok(Predictions {
        classes,
        probabilities,
    })
}

/// Eval-mode metrics over labelled graphs; the reported loss is the mean
/// cross-entropy of the predicted distributions.
pub fn evaluate(model: &GcnModel, graphs: &[PreparedGraph]) -> Result<MetricsReport> {
    let predictions = predict_prepared(model, graphs)?;
    let labels: Vec<usize> = graphs.iter().map(|g| g.label).collect();
    let classes = model.config().classes;
    let loss = cross_entropy(&one_hot(&labels, classes)?, &predictions.probabilities)?;
    compute_metrics(&confusion(&labels, &predictions.classes, classes)?, loss)
}
