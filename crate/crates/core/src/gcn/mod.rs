//! Graph convolutional network engine.
//!
//! Each layer computes `activation(Â H W)` where `Â` is the symmetrically
//! normalized adjacency with self-loops. Node embeddings of the last layer
//! are mean-pooled and classified by an affine softmax head. Gradients are
//! derived by hand and optimised with Adam (decoupled weight decay) under a
//! cosine learning-rate schedule. All arithmetic is `f64`.

mod activation;
mod adjacency;
mod backward;
pub mod checkpoint;
mod loss;
mod model;
mod optim;
mod train;

pub use activation::Activation;
pub use adjacency::{normalize_adjacency, NormalizedAdjacency};
pub use backward::{backward, backward_from_logits, Gradients};
pub use loss::{cross_entropy, one_hot, sample_loss, softmax, LOG_CLAMP};
pub use model::{
    argmax, gcn_layer, readout, Dropout, ForwardCache, GcnModel, Mode, ModelConfig, PreparedGraph,
};
pub use optim::{adam_step, lr_schedule, AdamState, TrainConfig};
pub use train::{
    evaluate, predict, predict_prepared, prepare, train, train_prepared, EpochRecord, Predictions,
    TrainOutcome,
};
