//! Facial-attribute graphs and graph-convolutional expression classification.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`features`] cuts patches around landmarks in grayscale images and turns
//!   them into per-landmark feature vectors.
//! * [`graph`] combines landmark geometry and feature similarity into a
//!   thresholded binary adjacency.
//! * [`gcn`] normalises the adjacency, runs the graph convolutional network,
//!   backpropagates the cross-entropy loss and trains with Adam.
//! * [`metrics`] reports accuracy, macro-F1, WAR and UAR.
//! * [`data`] reads and writes datasets, generates synthetic data and exports
//!   embeddings and graphs.
//! * [`cli`] wires everything into the `expgraph` command-line tool.

pub mod cli;
pub mod data;
pub mod error;
pub mod features;
pub mod gcn;
pub mod graph;
pub mod metrics;

pub use error::{Error, Result, SampleFault};
