//! Independent reference implementations and generators shared by the
//! integration tests.
#![allow(dead_code, clippy::needless_range_loop, clippy::manual_clamp)]

use expgraph::data::{ClassTemplate, Dataset};
use expgraph::gcn::{backward, sample_loss, Dropout, GcnModel, PreparedGraph};
use expgraph::graph::{FeatureMatrix, LandmarkSet};
use rand::seq::SliceRandom;
use rand::Rng;

/// Output of the reference graph construction.
pub struct NaiveGraph {
    pub raw: Vec<Vec<f64>>,
    pub mean: f64,
    pub std_dev: f64,
    pub threshold: f64,
    pub adjacency: Vec<Vec<u8>>,
}

/// Plain double-loop graph construction over `Vec`s.
pub fn naive_graph(features: &[Vec<f64>], points: &[[f64; 2]], tau: f64) -> NaiveGraph {
    let n = points.len();
    let mut unit = Vec::with_capacity(n);
    for row in features {
        let mut sq = 0.0;
        for v in row {
            sq += v * v;
        }
        let norm = f64::sqrt(sq);
        if norm > 1e-12 {
            unit.push(row.iter().map(|v| v / norm).collect::<Vec<f64>>());
        } else {
            unit.push(vec![0.0; row.len()]);
        }
    }

    let mut raw = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            let mut k = 0.0;
            for t in 0..unit[a].len() {
                k += unit[a][t] * unit[b][t];
            }
            let k = if k < 0.0 {
                0.0
            } else if k > 1.0 {
                1.0
            } else {
                k
            };
            let dx = points[a][0] - points[b][0];
            let dy = points[a][1] - points[b][1];
            let dist = f64::sqrt(dx * dx + dy * dy);
            raw[i][j] = k / f64::exp(dist);
        }
    }

    let mut off = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off.push(raw[i][j]);
            }
        }
    }
    let (mean, std_dev) = if off.iter().all(|&v| v == off[0]) {
        (off[0], 0.0)
    } else {
        let mut s = 0.0;
        for v in &off {
            s += v;
        }
        let mean = s / off.len() as f64;
        let mut q = 0.0;
        for v in &off {
            q += (v - mean) * (v - mean);
        }
        (mean, f64::sqrt(q / off.len() as f64))
    };
    let threshold = mean + tau * std_dev;
    let adjacency = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| u8::from(i != j && raw[i][j] > threshold))
                .collect()
        })
        .collect();
    NaiveGraph {
        raw,
        mean,
        std_dev,
        threshold,
        adjacency,
    }
}

/// Random features and positions with occasional zero rows, duplicated
/// rows and coincident points so the degenerate branches get exercised.
pub fn random_instance(rng: &mut impl Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<[f64; 2]>) {
    let mut features: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut points: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)])
        .collect();
    if n > 2 {
        match rng.random_range(0..6) {
            0 => features[0] = vec![0.0; d],
            1 => features[1] = features[0].clone(),
            2 => points[1] = points[0],
            3 => features
                .iter_mut()
                .for_each(|r| r.iter_mut().for_each(|v| *v = v.abs())),
            _ => {}
        }
    }
    (features, points)
}

pub fn feature_matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    FeatureMatrix::from_rows(rows).unwrap()
}

pub fn landmark_set(points: &[[f64; 2]]) -> LandmarkSet {
    LandmarkSet::from_pairs(points).unwrap()
}

pub fn random_permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Largest relative error between analytic and central-difference
/// gradients over every parameter, with dropout masks held fixed.
/// Relative error is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check(
    model: &GcnModel,
    graph: &PreparedGraph,
    masks: &[ndarray::Array2<f64>],
    step: f64,
) -> f64 {
    let loss_of = |m: &GcnModel| {
        let cache = m.forward_with(graph, Dropout::Fixed(masks)).unwrap();
        sample_loss(cache.probabilities(), graph.label)
    };
    let cache = model.forward_with(graph, Dropout::Fixed(masks)).unwrap();
    let analytic = backward(model, &cache, graph.label, 1.0).unwrap();
    let analytic: Vec<Vec<f64>> = analytic.as_slices().iter().map(|s| s.to_vec()).collect();

    let mut worst = 0.0f64;
    let mut probe = model.clone();
    for (t, tensor) in analytic.iter().enumerate() {
        for (k, &a) in tensor.iter().enumerate() {
            let original = probe.parameters()[t][k];
            probe.parameters_mut()[t][k] = original + step;
            let plus = loss_of(&probe);
            probe.parameters_mut()[t][k] = original - step;
            let minus = loss_of(&probe);
            probe.parameters_mut()[t][k] = original;
            let numeric = (plus - minus) / (2.0 * step);
            let denom = a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    worst
}

/// Nearest class template under squared feature distance summed over
/// landmarks; returns the fraction of samples assigned to their own class.
pub fn nearest_prototype_accuracy(dataset: &Dataset, templates: &[ClassTemplate]) -> f64 {
    let mut correct = 0usize;
    for sample in &dataset.samples {
        let x = sample.features.as_ref().unwrap().values();
        let mut best = (f64::INFINITY, usize::MAX);
        for (c, t) in templates.iter().enumerate() {
            let mut dist = 0.0;
            for (a, b) in x.iter().zip(t.features.iter()) {
                dist += (a - b) * (a - b);
            }
            if dist < best.0 {
                best = (dist, c);
            }
        }
        correct += usize::from(best.1 == sample.label);
    }
    correct as f64 / dataset.len() as f64
}
