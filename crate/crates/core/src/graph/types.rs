use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2-D landmark position in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Ordered landmark coordinates. Index `i` always denotes the same anatomical
/// landmark across samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Point>,
}

impl LandmarkSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid(format!(
                "a landmark set needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points
            .iter()
            .position(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::invalid(format!(
                "landmark {i} has a non-finite coordinate"
            )));
        }
        Ok(LandmarkSet { points })
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        Self::new(pairs.iter().map(|&[x, y]| Point::new(x, y)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p.x, p.y]).collect()
    }

    /// Reorders landmarks so that new index `k` holds old landmark `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        LandmarkSet {
            points: perm.iter().map(|&k| self.points[k]).collect(),
        }
    }

    /// Multiplies every coordinate by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        LandmarkSet {
            points: self
                .points
                .iter()
                .map(|p| Point::new(p.x * factor, p.y * factor))
                .collect(),
        }
    }
}

/// One feature vector per landmark, stored as an `N x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        for (i, row) in values.rows().into_iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "feature row {i} contains a non-finite value"
                )));
            }
        }
        Ok(FeatureMatrix { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::invalid(format!(
                "feature row {i} has length {}, expected {d}",
                rows[i].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values =
            Array2::from_shape_vec((n, d), flat).map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(values)
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        FeatureMatrix {
            values: self.values.select(ndarray::Axis(0), perm),
        }
    }
}

/// Pre-threshold similarity-over-distance weights with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAdjacency {
    values: Array2<f64>,
}

impl WeightedAdjacency {
    pub(crate) fn from_values(values: Array2<f64>) -> Self {
        WeightedAdjacency { values }
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Off-diagonal entries in row-major order.
    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + Clone + '_ {
        self.values
            .indexed_iter()
            .filter(|((i, j), _)| i != j)
            .map(|(_, &v)| v)
    }
}

/// Symmetric 0/1 adjacency with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryAdjacency {
    values: Array2<u8>,
}

impl BinaryAdjacency {
    /// Validates a dense 0/1 matrix: square, symmetric, zero diagonal.
    pub fn from_dense(values: Array2<u8>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "adjacency columns",
                expected: n,
                found: values.ncols(),
            });
        }
        for i in 0..n {
            if values[[i, i]] != 0 {
                return Err(Error::invalid(format!(
                    "adjacency diagonal entry {i} is nonzero"
                )));
            }
            for j in 0..n {
                let v = values[[i, j]];
                if v > 1 {
                    return Err(Error::invalid(format!(
                        "adjacency entry ({i}, {j}) = {v} is not 0/1"
                    )));
                }
                if v != values[[j, i]] {
                    return Err(Error::invalid(format!(
                        "adjacency is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(BinaryAdjacency { values })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let flat: Vec<u8> = rows.iter().flatten().copied().collect();
        let values =
            Array2::from_shape_vec((n, n), flat).map_err(|e| Error::invalid(e.to_string()))?;
        Self::from_dense(values)
    }

    /// Builds an adjacency from undirected edges `(i, j)`, `i != j`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut values = Array2::zeros((n, n));
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::invalid(format!(
                    "edge ({i}, {j}) is invalid for {n} nodes"
                )));
            }
            values[[i, j]] = 1;
            values[[j, i]] = 1;
        }
        Ok(BinaryAdjacency { values })
    }

    pub fn empty(n: usize) -> Self {
        BinaryAdjacency {
            values: Array2::zeros((n, n)),
        }
    }

    pub(crate) fn from_values_unchecked(values: Array2<u8>) -> Self {
        BinaryAdjacency { values }
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &Array2<u8> {
        &self.values
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.values[[i, j]] == 1
    }

    /// Number of nonzero entries (each undirected edge counts twice).
    pub fn nonzeros(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.nonzeros() / 2
    }

    /// Undirected edges `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.values[[i, j]] != 0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.len();
        let values = Array2::from_shape_fn((n, n), |(a, b)| self.values[[perm[a], perm[b]]]);
        BinaryAdjacency { values }
    }
}

/// Threshold statistics over the off-diagonal raw adjacency entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub tau: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub threshold: f64,
}

/// One image's facial-attribute graph with its expression label.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub id: String,
    pub landmarks: LandmarkSet,
    pub features: FeatureMatrix,
    pub adjacency: BinaryAdjacency,
    pub label: usize,
    pub threshold: Option<ThresholdParams>,
}

impl GraphSample {
    /// Assembles a sample from already-built parts, checking that their node
    /// counts agree.
    pub fn new(
        id: impl Into<String>,
        landmarks: LandmarkSet,
        features: FeatureMatrix,
        adjacency: BinaryAdjacency,
        label: usize,
    ) -> Result<Self> {
        let n = landmarks.len();
        if features.rows() != n {
            return Err(Error::DimensionMismatch {
                context: "feature rows vs landmarks",
                expected: n,
                found: features.rows(),
            });
        }
        if adjacency.len() != n {
            return Err(Error::DimensionMismatch {
                context: "adjacency size vs landmarks",
                expected: n,
                found: adjacency.len(),
            });
        }
        Ok(GraphSample {
            id: id.into(),
            landmarks,
            features,
            adjacency,
            label,
            threshold: None,
        })
    }

    pub fn node_count(&self) -> usize {
        self.landmarks.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.dim()
    }

    /// Consistently relabels nodes: new node `k` is old node `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        GraphSample {
            id: self.id.clone(),
            landmarks: self.landmarks.permuted(perm),
            features: self.features.permuted(perm),
            adjacency: self.adjacency.permuted(perm),
            label: self.label,
            threshold: self.threshold,
        }
    }
}
