//! Finite metric spaces: validation, generators and p-distance matrices.
//!
//! A [`MetricSpace`] is an immutable labelled distance matrix whose metric
//! axioms have been checked once at construction. Everything downstream
//! (quadratic forms, simplex gaps, witnesses) works from its entries.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Relative slack used for the symmetry, triangle and ultrametric checks.
pub const METRIC_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("distance matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("a metric space needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("{labels} labels given for {points} points")]
    LabelCountMismatch { labels: usize, points: usize },
    #[error("entry ({0}, {1}) is not a finite number")]
    NonFiniteEntry(usize, usize),
    #[error("entries ({0}, {1}) and ({1}, {0}) differ")]
    AsymmetricEntry(usize, usize),
    #[error("diagonal entry ({0}, {0}) is not zero")]
    NonzeroDiagonal(usize),
    #[error("distance between distinct points {0} and {1} is not positive")]
    NonpositiveDistance(usize, usize),
    #[error("triangle inequality fails: d({0},{2}) > d({0},{1}) + d({1},{2})")]
    TriangleViolation(usize, usize, usize),
    #[error("exponent must be a nonnegative number, got {0}")]
    NegativeExponent(f64),
    #[error("graph is disconnected: no path from vertex 0 to vertex {0}")]
    DisconnectedGraph(usize),
    #[error("edge ({0}, {1}) has nonpositive weight")]
    NonpositiveWeight(usize, usize),
    #[error("edge ({0}, {1}) references a vertex outside 0..{2}")]
    VertexOutOfRange(usize, usize, usize),
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("norm order must satisfy q >= 1 (or be infinite), got {0}")]
    InvalidNormOrder(f64),
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("permutation of length {0} is not a permutation of 0..{1}")]
    InvalidPermutation(usize, usize),
}

/// Order of an ℓ_q norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder {
    Finite(f64),
    Infinity,
}

impl NormOrder {
    fn validate(self) -> Result<Self, MetricError> {
        match self {
            NormOrder::Finite(q) if q.is_nan() || q < 1.0 => Err(MetricError::InvalidNormOrder(q)),
            NormOrder::Finite(q) if q.is_infinite() => Ok(NormOrder::Infinity),
            other => Ok(other),
        }
    }

    fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            NormOrder::Infinity => diffs.fold(0.0, f64::max),
            NormOrder::Finite(1.0) => diffs.sum(),
            NormOrder::Finite(2.0) => diffs.map(|t| t * t).sum::<f64>().sqrt(),
            NormOrder::Finite(q) => diffs.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q),
        }
    }
}

/// A finite metric space with labelled points.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    labels: Vec<String>,
    dist: DMatrix<f64>,
}

/// Entrywise p-th power of a distance matrix, with `0^0 = 0` on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMatrix {
    pub p: f64,
    pub entries: DMatrix<f64>,
}

/// `d^p` with the convention `0^0 = 0`.
#[inline]
pub fn dist_pow(d: f64, p: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else if p == 1.0 {
        d
    } else if p == 2.0 {
        d * d
    } else {
        d.powf(p)
    }
}

pub fn default_labels(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("x{i}")).collect()
}

/// Checks the metric axioms and builds a [`MetricSpace`].
///
/// Symmetry and the triangle inequality are checked with slack
/// `1e-12 · max entry`; the stored matrix is the symmetrised input.
pub fn validate_metric(labels: Vec<String>, matrix: &[Vec<f64>]) -> Result<MetricSpace, MetricError> {
    let m = matrix.len();
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != m {
            return Err(MetricError::NotSquare { rows: m, row, len: r.len() });
        }
    }
    if m < 2 {
        return Err(MetricError::TooFewPoints(m));
    }
    if labels.len() != m {
        return Err(MetricError::LabelCountMismatch { labels: labels.len(), points: m });
    }
    let mut max_entry = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let v = matrix[i][j];
            if !v.is_finite() {
                return Err(MetricError::NonFiniteEntry(i, j));
            }
            max_entry = max_entry.max(v.abs());
        }
    }
    let tol = METRIC_REL_TOL * max_entry;

    for (i, row) in matrix.iter().enumerate() {
        if row[i] != 0.0 {
            return Err(MetricError::NonzeroDiagonal(i));
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if (matrix[i][j] - matrix[j][i]).abs() > tol {
                return Err(MetricError::AsymmetricEntry(i, j));
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            if i != j && matrix[i][j] <= 0.0 {
                return Err(MetricError::NonpositiveDistance(i.min(j), i.max(j)));
            }
        }
    }

    let dist = DMatrix::from_fn(m, m, |i, j| 0.5 * (matrix[i][j] + matrix[j][i]));
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                if dist[(i, k)] > dist[(i, j)] + dist[(j, k)] + tol {
                    return Err(MetricError::TriangleViolation(i, j, k));
                }
            }
        }
    }
    Ok(MetricSpace { labels, dist })
}

impl MetricSpace {
    /// Validates a matrix and attaches the default labels `x1..xm`.
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self, MetricError> {
        validate_metric(default_labels(matrix.len()), matrix)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[(i, j)]
    }

    pub fn distances(&self) -> &DMatrix<f64> {
        &self.dist
    }

    pub fn max_distance(&self) -> f64 {
        self.dist.amax()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.dist.row(i).iter().copied().collect()).collect()
    }

    /// The same space with every distance multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0 && c.is_finite(), "scale factor must be positive and finite");
        MetricSpace { labels: self.labels.clone(), dist: &self.dist * c }
    }

    /// Relabels points: point `k` of the result is point `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, MetricError> {
        let m = self.len();
        let mut seen = vec![false; m];
        if perm.len() != m {
            return Err(MetricError::InvalidPermutation(perm.len(), m));
        }
        for &k in perm {
            if k >= m || seen[k] {
                return Err(MetricError::InvalidPermutation(perm.len(), m));
            }
            seen[k] = true;
        }
        Ok(MetricSpace {
            labels: perm.iter().map(|&k| self.labels[k].clone()).collect(),
            dist: DMatrix::from_fn(m, m, |i, j| self.dist[(perm[i], perm[j])]),
        })
    }

    /// Copy of the space with one symmetric pair of distances replaced.
    /// The result is revalidated.
    pub fn with_distance(&self, i: usize, j: usize, value: f64) -> Result<Self, MetricError> {
        let mut rows = self.rows();
        rows[i][j] = value;
        rows[j][i] = value;
        validate_metric(self.labels.clone(), &rows)
    }
}

/// The p-distance matrix `D_p`.
pub fn power_matrix(space: &MetricSpace, p: f64) -> Result<PowerMatrix, MetricError> {
    if p.is_nan() || p < 0.0 || p.is_infinite() {
        return Err(MetricError::NegativeExponent(p));
    }
    Ok(PowerMatrix { p, entries: space.dist.map(|d| dist_pow(d, p)) })
}

/// `d(i,k) <= max(d(i,j), d(j,k))` for every triple, up to `1e-12 · max entry`.
pub fn is_ultrametric(space: &MetricSpace) -> bool {
    let m = space.len();
    let tol = METRIC_REL_TOL * space.max_distance();
    let d = &space.dist;
    for i in 0..m {
        for j in 0..m {
            for k in (i + 1)..m {
                if d[(i, k)] > d[(i, j)].max(d[(j, k)]) + tol {
                    return false;
                }
            }
        }
    }
    true
}

/// Shortest-path metric of a connected, positively weighted graph on `n` vertices.
///
/// Parallel edges keep the lightest weight; self loops are ignored.
pub fn from_graph(n: usize, edges: &[(usize, usize, f64)]) -> Result<MetricSpace, MetricError> {
    if n < 2 {
        return Err(MetricError::TooFewPoints(n));
    }
    let mut d = DMatrix::from_element(n, n, f64::INFINITY);
    for i in 0..n {
        d[(i, i)] = 0.0;
    }
    for &(u, v, w) in edges {
        if u >= n || v >= n {
            return Err(MetricError::VertexOutOfRange(u, v, n));
        }
        if !(w > 0.0) || !w.is_finite() {
            return Err(MetricError::NonpositiveWeight(u, v));
        }
        if u != v && w < d[(u, v)] {
            d[(u, v)] = w;
            d[(v, u)] = w;
        }
    }
    // Floyd–Warshall
    for k in 0..n {
        for i in 0..n {
            let dik = d[(i, k)];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    if let Some(v) = (1..n).find(|&v| d[(0, v)].is_infinite()) {
        return Err(MetricError::DisconnectedGraph(v));
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| d.row(i).iter().copied().collect()).collect();
    validate_metric(default_labels(n), &rows)
}

/// Pairwise ℓ_q distances between points.
pub fn from_points(coords: &[Vec<f64>], q: NormOrder) -> Result<MetricSpace, MetricError> {
    let q = q.validate()?;
    let n = coords.len();
    if n < 2 {
        return Err(MetricError::TooFewPoints(n));
    }
    let dim = coords[0].len();
    for (index, c) in coords.iter().enumerate() {
        if c.len() != dim {
            return Err(MetricError::DimensionMismatch { index, expected: dim, found: c.len() });
        }
        if let Some(k) = c.iter().position(|x| !x.is_finite()) {
            return Err(MetricError::NonFiniteEntry(index, k));
        }
    }
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = q.distance(&coords[i], &coords[j]);
            if dij == 0.0 {
                return Err(MetricError::DuplicatePoint(i, j));
            }
            rows[i][j] = dij;
            rows[j][i] = dij;
        }
    }
    validate_metric(default_labels(n), &rows)
}

/// Random ultrametric from a binary merge tree.
///
/// Clusters are merged pairwise in random order at strictly increasing
/// heights; the distance between two points is the height at which their
/// clusters merge. Heights start at 1 and grow by steps drawn from
/// `[0.1, 1)`.
pub fn random_ultrametric(n: usize, seed: u64) -> Result<MetricSpace, MetricError> {
    if n < 2 {
        return Err(MetricError::TooFewPoints(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut rows = vec![vec![0.0; n]; n];
    let mut height = 1.0;
    while clusters.len() > 1 {
        let a = rng.random_range(0..clusters.len());
        let left = clusters.swap_remove(a);
        let b = rng.random_range(0..clusters.len());
        let right = clusters.swap_remove(b);
        for &i in &left {
            for &j in &right {
                rows[i][j] = height;
                rows[j][i] = height;
            }
        }
        let mut merged = left;
        merged.extend(right);
        clusters.push(merged);
        height += rng.random_range(0.1..1.0);
    }
    validate_metric(default_labels(n), &rows)
}

/// Random metric with off-diagonal distances uniform in `[1, 2)`.
///
/// Any such matrix satisfies the triangle inequality since
/// `d(i,k) < 2 <= d(i,j) + d(j,k)`.
pub fn random_metric(n: usize, seed: u64) -> Result<MetricSpace, MetricError> {
    if n < 2 {
        return Err(MetricError::TooFewPoints(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random_range(1.0..2.0);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    validate_metric(default_labels(n), &rows)
}

/// `n` random points in `[0, 1)^dim` under the ℓ_q norm.
pub fn random_points(
    n: usize,
    dim: usize,
    q: NormOrder,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, MetricSpace), MetricError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<Vec<f64>> = (0..n).map(|_| (0..dim.max(1)).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let space = from_points(&coords, q)?;
    Ok((coords, space))
}

/// Random permutation of `0..n`.
pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    perm
}

pub fn cycle_graph(n: usize) -> Result<MetricSpace, MetricError> {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    from_graph(n, &edges)
}

pub fn path_graph(n: usize) -> Result<MetricSpace, MetricError> {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
    from_graph(n, &edges)
}

pub fn complete_graph(n: usize) -> Result<MetricSpace, MetricError> {
    let edges: Vec<_> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j, 1.0))).collect();
    from_graph(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collinear() -> MetricSpace {
        MetricSpace::from_matrix(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap()
    }

    #[test]
    fn two_point_space_is_valid() {
        let x = validate_metric(vec!["a".into(), "b".into()], &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(x.len(), 2);
        assert_eq!(x.labels(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn validation_errors_name_indices() {
        let asym = MetricSpace::from_matrix(&[vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert_eq!(asym, Err(MetricError::AsymmetricEntry(0, 1)));

        let tri = MetricSpace::from_matrix(&[vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]]);
        assert_eq!(tri, Err(MetricError::TriangleViolation(0, 1, 2)));

        let diag = MetricSpace::from_matrix(&[vec![0.0, 1.0], vec![1.0, 0.5]]);
        assert_eq!(diag, Err(MetricError::NonzeroDiagonal(1)));

        let zero = MetricSpace::from_matrix(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(zero, Err(MetricError::NonpositiveDistance(0, 1)));

        let ragged = MetricSpace::from_matrix(&[vec![0.0, 1.0], vec![1.0]]);
        assert!(matches!(ragged, Err(MetricError::NotSquare { row: 1, .. })));

        assert_eq!(MetricSpace::from_matrix(&[vec![0.0]]), Err(MetricError::TooFewPoints(1)));
    }

    #[test]
    fn tiny_asymmetry_within_tolerance_is_symmetrised() {
        let x = MetricSpace::from_matrix(&[vec![0.0, 1.0], vec![1.0 + 1e-14, 0.0]]).unwrap();
        assert_eq!(x.dist(0, 1), x.dist(1, 0));
    }

    #[test]
    fn power_matrix_cases() {
        let x = collinear();
        let d2 = power_matrix(&x, 2.0).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0]);
        assert_eq!(d2.entries, expect);

        let d0 = power_matrix(&x, 0.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d0.entries[(i, j)], if i == j { 0.0 } else { 1.0 });
            }
        }
        assert_eq!(power_matrix(&x, 1.0).unwrap().entries, *x.distances());
        assert!(matches!(power_matrix(&x, -0.5), Err(MetricError::NegativeExponent(_))));
    }

    #[test]
    fn ultrametric_checks() {
        assert!(is_ultrametric(&complete_graph(3).unwrap()));
        assert!(!is_ultrametric(&collinear()));
        let two = MetricSpace::from_matrix(&[vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
        assert!(is_ultrametric(&two));
    }

    #[test]
    fn graph_metrics() {
        let c4 = cycle_graph(4).unwrap();
        assert_eq!(c4.dist(0, 1), 1.0);
        assert_eq!(c4.dist(0, 2), 2.0);
        assert_eq!(c4.dist(1, 3), 2.0);
        assert_eq!(path_graph(3).unwrap().distances(), collinear().distances());
        let split = from_graph(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        assert!(matches!(split, Err(MetricError::DisconnectedGraph(_))));
        assert_eq!(from_graph(2, &[(0, 1, 0.0)]), Err(MetricError::NonpositiveWeight(0, 1)));
        assert_eq!(from_graph(2, &[(0, 5, 1.0)]), Err(MetricError::VertexOutOfRange(0, 5, 2)));
    }

    #[test]
    fn point_metrics() {
        let line = from_points(&[vec![0.0], vec![1.0], vec![2.0]], NormOrder::Finite(2.0)).unwrap();
        assert_eq!(line.distances(), collinear().distances());

        let square = [vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let l1 = from_points(&square, NormOrder::Finite(1.0)).unwrap();
        assert_eq!(l1.distances(), cycle_graph(4).unwrap().distances());

        let linf = from_points(&square, NormOrder::Infinity).unwrap();
        assert_eq!(linf.dist(0, 2), 1.0);

        let l3 = from_points(&[vec![0.0, 0.0], vec![1.0, 1.0]], NormOrder::Finite(3.0)).unwrap();
        assert!((l3.dist(0, 1) - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);

        assert_eq!(
            from_points(&[vec![0.0, 1.0], vec![0.0, 1.0]], NormOrder::Finite(2.0)),
            Err(MetricError::DuplicatePoint(0, 1))
        );
        assert!(matches!(from_points(&square, NormOrder::Finite(0.5)), Err(MetricError::InvalidNormOrder(_))));
    }

    #[test]
    fn random_ultrametric_contract() {
        let two = random_ultrametric(2, 3).unwrap();
        assert_eq!(two.len(), 2);
        for seed in 0..20 {
            let x = random_ultrametric(8, seed).unwrap();
            assert!(is_ultrametric(&x));
            assert_eq!(x, random_ultrametric(8, seed).unwrap());
        }
    }

    #[test]
    fn permutation_moves_rows_and_columns() {
        let x = random_metric(5, 11).unwrap();
        let perm = random_permutation(5, 4);
        let y = x.permuted(&perm).unwrap();
        let px = power_matrix(&x, 1.7).unwrap();
        let py = power_matrix(&y, 1.7).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(y.dist(i, j), x.dist(perm[i], perm[j]));
                assert_eq!(py.entries[(i, j)], px.entries[(perm[i], perm[j])]);
            }
        }
        assert!(x.permuted(&[0, 0, 1, 2, 3]).is_err());
    }
}
