use ndarray::{Array2, ArrayView1};

use super::types::{
    BinaryAdjacency, FeatureMatrix, GraphSample, LandmarkSet, ThresholdParams, WeightedAdjacency,
};
use crate::error::{Error, Result};

/// Rows whose norm is at or below this are treated as carrying no signal.
pub const ZERO_ROW_NORM: f64 = 1e-12;

/// Sequential dot product. The summation order is fixed so that graph
/// construction is reproducible bit-for-bit.
fn dot(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x * y;
    }
    acc
}

/// Scales every row to unit Euclidean norm. Rows with norm `<= 1e-12` come
/// back as all zeros.
pub fn l2_normalize_rows(features: &FeatureMatrix) -> Result<FeatureMatrix> {
    let mut out = features.values().clone();
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "feature row {i} contains a non-finite value"
            )));
        }
        let norm = dot(row.view(), row.view()).sqrt();
        if norm > ZERO_ROW_NORM {
            row.mapv_inplace(|v| v / norm);
        } else {
            row.fill(0.0);
        }
    }
    FeatureMatrix::new(out)
}

/// Cosine similarity of two unit (or zero) vectors, clamped to `[0, 1]`.
pub fn similarity_kernel(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "similarity kernel operands",
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(dot(a, b).clamp(0.0, 1.0))
}

/// Kernel similarity divided by `exp` of the landmark distance, for every
/// unordered pair. The diagonal is zero; each pair is computed once and
/// mirrored.
pub fn raw_adjacency(
    features: &FeatureMatrix,
    landmarks: &LandmarkSet,
) -> Result<WeightedAdjacency> {
    let n = landmarks.len();
    if features.rows() != n {
        return Err(Error::DimensionMismatch {
            context: "feature rows vs landmarks",
            expected: n,
            found: features.rows(),
        });
    }
    let x = features.values();
    let points = landmarks.points();
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let kernel = similarity_kernel(x.row(i), x.row(j))?;
            let weight = kernel / points[i].distance(&points[j]).exp();
            values[[i, j]] = weight;
            values[[j, i]] = weight;
        }
    }
    Ok(WeightedAdjacency::from_values(values))
}

/// Mean and population standard deviation of the off-diagonal entries, and
/// the cut-off `mean + tau * std_dev`.
pub fn threshold_stats(raw: &WeightedAdjacency, tau: f64) -> Result<ThresholdParams> {
    let n = raw.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "threshold statistics need at least 2 nodes, got {n}"
        )));
    }
    if !tau.is_finite() {
        return Err(Error::invalid(format!("tau must be finite, got {tau}")));
    }
    let (mean, std_dev) = population_stats(raw.off_diagonal());
    Ok(ThresholdParams {
        tau,
        mean,
        std_dev,
        threshold: mean + tau * std_dev,
    })
}

/// Mean and population standard deviation, summed in iteration order.
/// Constant populations return their value and an exact zero deviation.
pub fn population_stats<I>(values: I) -> (f64, f64)
where
    I: Iterator<Item = f64> + Clone,
{
    let mut count = 0usize;
    let mut sum = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.clone() {
        sum += v;
        count += 1;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if count == 0 {
        return (0.0, 0.0);
    }
    // a constant population must give exactly (c, 0) so that the strict
    // threshold keeps no edges; summation rounding would otherwise leak
    if lo == hi {
        return (lo, 0.0);
    }
    let mean = sum / count as f64;
    let mut sq = 0.0;
    for v in values {
        let dev = v - mean;
        sq += dev * dev;
    }
    (mean, (sq / count as f64).sqrt())
}

/// Keeps an edge iff its raw weight strictly exceeds `threshold`.
pub fn binarize(raw: &WeightedAdjacency, threshold: f64) -> BinaryAdjacency {
    let n = raw.len();
    let values = Array2::from_shape_fn((n, n), |(i, j)| {
        u8::from(i != j && raw.get(i, j) > threshold)
    });
    BinaryAdjacency::from_values_unchecked(values)
}

/// Full graph construction: normalise features, weigh pairs, threshold.
pub fn build_graph(
    id: impl Into<String>,
    landmarks: LandmarkSet,
    features: &FeatureMatrix,
    tau: f64,
    label: usize,
) -> Result<GraphSample> {
    let normalized = l2_normalize_rows(features)?;
    let raw = raw_adjacency(&normalized, &landmarks)?;
    let stats = threshold_stats(&raw, tau)?;
    let adjacency = binarize(&raw, stats.threshold);
    let mut sample = GraphSample::new(id, landmarks, normalized, adjacency, label)?;
    sample.threshold = Some(stats);
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    fn feats(rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows).unwrap()
    }

    fn raw_from_offdiag(n: usize, f: impl Fn(usize, usize) -> f64) -> WeightedAdjacency {
        WeightedAdjacency::from_values(Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                0.0
            } else {
                f(i, j)
            }
        }))
    }

    #[test]
    fn normalize_examples() {
        let x = feats(&[vec![3.0, 4.0, 0.0, 0.0], vec![0.0; 4], vec![1.0; 4]]);
        let y = l2_normalize_rows(&x).unwrap();
        let v = y.values();
        assert!((v[[0, 0]] - 0.6).abs() < 1e-15 && (v[[0, 1]] - 0.8).abs() < 1e-15);
        assert!(v.row(1).iter().all(|&a| a == 0.0));
        assert!(v.row(2).iter().all(|&a| (a - 0.5).abs() < 1e-15));
    }

    #[test]
    fn normalize_tiny_row_is_zeroed() {
        let y = l2_normalize_rows(&feats(&[vec![1e-13, 0.0], vec![1.0, 0.0]])).unwrap();
        assert_eq!(y.values().row(0).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn non_finite_row_is_named() {
        let mut values = Array2::<f64>::ones((3, 2));
        values[[1, 0]] = f64::NAN;
        let err = FeatureMatrix::new(values).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn kernel_examples() {
        let e1 = array![1.0, 0.0];
        let e2 = array![0.0, 1.0];
        let diag = Array1::from(vec![1.0 / 2f64.sqrt(); 2]);
        assert_eq!(similarity_kernel(e1.view(), e1.view()).unwrap(), 1.0);
        assert_eq!(similarity_kernel(e1.view(), e2.view()).unwrap(), 0.0);
        let k = similarity_kernel(e1.view(), diag.view()).unwrap();
        assert!((k - 0.707_106_781_186_547_5).abs() < 1e-15);
        // opposite vectors clamp to zero
        let neg = array![-1.0, 0.0];
        assert_eq!(similarity_kernel(e1.view(), neg.view()).unwrap(), 0.0);
        assert!(similarity_kernel(e1.view(), array![1.0].view()).is_err());
    }

    #[test]
    fn raw_adjacency_examples() {
        let same = feats(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
        let coincident = LandmarkSet::from_pairs(&[[5.0, 5.0], [5.0, 5.0]]).unwrap();
        let a = raw_adjacency(&same, &coincident).unwrap();
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.get(0, 0), 0.0);

        let ortho = feats(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let far = LandmarkSet::from_pairs(&[[0.0, 0.0], [1.0, 2.0]]).unwrap();
        assert_eq!(raw_adjacency(&ortho, &far).unwrap().get(1, 0), 0.0);

        let s = 1.0 / 2f64.sqrt();
        let x = feats(&[vec![1.0, 0.0], vec![s, s]]);
        let p = LandmarkSet::from_pairs(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        let a = raw_adjacency(&x, &p).unwrap();
        assert!((a.get(0, 1) - 0.004_764_448_014_328_882).abs() < 1e-15);
        assert_eq!(a.get(0, 1), a.get(1, 0));
    }

    #[test]
    fn threshold_examples() {
        let (mean, sd) = population_stats([0.2, 0.4, 0.6, 0.8].into_iter());
        assert!((mean - 0.5).abs() < 1e-15);
        assert!((sd - 0.223_606_797_749_979).abs() < 1e-12);
        assert!((mean + 0.5 * sd - 0.611_803_398_874_989_5).abs() < 1e-12);

        // same population placed off-diagonal (ordered pairs) gives the same
        // statistics, since each value appears twice
        let raw = raw_from_offdiag(3, |i, j| [0.2, 0.4, 0.6][i + j - 1]);
        let t = threshold_stats(&raw, 0.5).unwrap();
        let (m, s) = population_stats([0.2, 0.4, 0.6].into_iter());
        assert!((t.mean - m).abs() < 1e-15 && (t.std_dev - s).abs() < 1e-15);
        assert_eq!(t.threshold, t.mean + 0.5 * t.std_dev);
    }

    #[test]
    fn threshold_constant_population() {
        let raw = raw_from_offdiag(4, |_, _| 0.37);
        for tau in [0.0, 0.5, 3.0] {
            let t = threshold_stats(&raw, tau).unwrap();
            assert_eq!(t.std_dev, 0.0);
            assert_eq!(t.threshold, 0.37);
        }
        let t = threshold_stats(&raw_from_offdiag(3, |i, j| (i + j) as f64), 0.0).unwrap();
        assert_eq!(t.threshold, t.mean);
    }

    #[test]
    fn threshold_needs_two_nodes() {
        let raw = WeightedAdjacency::from_values(Array2::zeros((1, 1)));
        assert!(matches!(
            threshold_stats(&raw, 0.5),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn binarize_examples() {
        let raw = raw_from_offdiag(2, |_, _| 0.7);
        assert!(binarize(&raw, 0.5).has_edge(0, 1));
        let raw = raw_from_offdiag(2, |_, _| 0.5);
        assert!(!binarize(&raw, 0.5).has_edge(0, 1));

        // all-equal 3-node instance: brute-force every entry against T_s = mu
        let raw = raw_from_offdiag(3, |_, _| 0.25);
        let t = threshold_stats(&raw, 0.9).unwrap();
        let a = binarize(&raw, t.threshold);
        for i in 0..3 {
            for j in 0..3 {
                let expect = i != j && raw.get(i, j) > t.threshold;
                assert_eq!(a.has_edge(i, j), expect);
            }
        }
        assert_eq!(a.nonzeros(), 0);
    }

    #[test]
    fn build_graph_two_coincident_nodes() {
        let x = feats(&[vec![2.0, 0.0], vec![5.0, 0.0]]);
        let p = LandmarkSet::from_pairs(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let g = build_graph("s", p, &x, 0.0, 0).unwrap();
        let t = g.threshold.unwrap();
        assert_eq!(t.mean, 1.0);
        assert_eq!(t.threshold, 1.0);
        assert_eq!(g.adjacency.nonzeros(), 0);
    }

    #[test]
    fn build_graph_three_node_values() {
        // raw values {0.9, 0.5, 0.1} via coincident points and chosen cosines
        let angle = |c: f64| vec![c, (1.0 - c * c).sqrt()];
        // x0 = e1; cos(x0,x1)=0.9, cos(x0,x2)=0.5 -> pick x2 so cos(x1,x2)=0.1
        let x0 = vec![1.0, 0.0, 0.0];
        let x1 = {
            let a = angle(0.9);
            vec![a[0], a[1], 0.0]
        };
        // x2 = (0.5, b, c) with 0.9*0.5 + x1[1]*b = 0.1 and unit norm
        let b = (0.1 - 0.9 * 0.5) / x1[1];
        let c = (1.0 - 0.25 - b * b).sqrt();
        let x2 = vec![0.5, b, c];
        let x = feats(&[x0, x1, x2]);
        let p = LandmarkSet::from_pairs(&[[0.0, 0.0]; 3]).unwrap();
        let g = build_graph("s", p, &x, 0.0, 1).unwrap();
        let t = g.threshold.unwrap();
        assert!((t.mean - 0.5).abs() < 1e-12);
        assert_eq!(g.adjacency.edges(), vec![(0, 1)]);
    }

    #[test]
    fn large_tau_empties_graph() {
        let x = feats(&[vec![1.0, 0.2], vec![0.3, 1.0], vec![1.0, 1.0]]);
        let p = LandmarkSet::from_pairs(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let g = build_graph("s", p, &x, 1e6, 0).unwrap();
        assert_eq!(g.adjacency.nonzeros(), 0);
    }
}
