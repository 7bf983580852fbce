use ndarray::Array2;

use crate::graph::BinaryAdjacency;

/// `D^-1/2 (A + I) D^-1/2` with `D` the degree matrix of `A + I`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    values: Array2<f64>,
}

impl NormalizedAdjacency {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn normalize_adjacency(adjacency: &BinaryAdjacency) -> NormalizedAdjacency {
    let a = adjacency.values();
    let n = a.nrows();
    // self-loop guarantees every degree is at least 1
    let inv_sqrt_degree: Vec<f64> = a
        .rows()
        .into_iter()
        .map(|row| {
            let degree = 1.0 + row.iter().map(|&v| f64::from(v)).sum::<f64>();
            1.0 / degree.sqrt()
        })
        .collect();
    let values = Array2::from_shape_fn((n, n), |(i, j)| {
        let loop_or_edge = if i == j { 1.0 } else { f64::from(a[[i, j]]) };
        inv_sqrt_degree[i] * loop_or_edge * inv_sqrt_degree[j]
    });
    NormalizedAdjacency { values }
}
