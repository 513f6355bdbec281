//! Similarity networks built from point clouds.
//!
//! Points are turned into a Euclidean distance matrix, the distances into a
//! Gaussian adjacency whose bandwidth is a quantile of the positive distances,
//! and the adjacency into the combinatorial Laplacian `L = D - A` and its
//! symmetric normalization `H = D^{-1/2} L D^{-1/2}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};

/// `m` samples in `R^d`, optionally with ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: DMatrix<f64>,
    truth: Option<Vec<usize>>,
}

impl PointSet {
    pub fn new(points: DMatrix<f64>, truth: Option<Vec<usize>>) -> Result<Self> {
        if points.nrows() < 2 {
            return Err(QtcError::Input(format!(
                "need at least 2 samples, got {}",
                points.nrows()
            )));
        }
        if points.ncols() < 1 {
            return Err(QtcError::Input("samples must have at least one coordinate".into()));
        }
        if let Some(t) = &truth {
            if t.len() != points.nrows() {
                return Err(QtcError::Input(format!(
                    "truth has {} labels for {} samples",
                    t.len(),
                    points.nrows()
                )));
            }
        }
        Ok(Self { points, truth })
    }

    /// Builds a point set from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], truth: Option<Vec<usize>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(QtcError::Input("rows have inconsistent dimension".into()));
        }
        let points = DMatrix::from_fn(rows.len(), d, |i, k| rows[i][k]);
        Self::new(points, truth)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn truth(&self) -> Option<&[usize]> {
        self.truth.as_deref()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.points.row(i).iter().copied().collect()
    }

    /// Appends one sample (with its truth label when the set carries labels).
    pub fn push(&mut self, coords: &[f64], label: Option<usize>) -> Result<()> {
        if coords.len() != self.dim() {
            return Err(QtcError::Input(format!(
                "point has {} coordinates, expected {}",
                coords.len(),
                self.dim()
            )));
        }
        let m = self.len();
        let mut grown = self.points.clone().insert_row(m, 0.0);
        for (k, &c) in coords.iter().enumerate() {
            grown[(m, k)] = c;
        }
        self.points = grown;
        match (&mut self.truth, label) {
            (Some(t), Some(l)) => t.push(l),
            (None, None) => {}
            _ => return Err(QtcError::Input("truth label presence mismatch".into())),
        }
        Ok(())
    }

    /// Multiplies every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            points: &self.points * c,
            truth: self.truth.clone(),
        }
    }
}

/// Symmetric matrix of pairwise Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(pub DMatrix<f64>);

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Strictly positive distances from the upper triangle.
    pub fn positive_upper(&self) -> Vec<f64> {
        let m = self.len();
        let mut out = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                let r = self.0[(i, j)];
                if r > 0.0 {
                    out.push(r);
                }
            }
        }
        out
    }
}

/// How the Gaussian bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proximity {
    /// `eps`-quantile of the positive pairwise distances.
    Quantile(f64),
    /// Explicit length scale.
    Scale(f64),
}

/// Adjacency, degrees and both Laplacians of one network.
#[derive(Debug, Clone)]
pub struct GraphBundle {
    pub adjacency: DMatrix<f64>,
    pub degree: DVector<f64>,
    pub laplacian: DMatrix<f64>,
    /// Symmetric normalized Laplacian, used as the Hamiltonian.
    pub hamiltonian: DMatrix<f64>,
    /// Bandwidth used to build the adjacency (`None` for externally supplied affinities).
    pub r_eps: Option<f64>,
}

impl GraphBundle {
    pub fn len(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.nrows() == 0
    }
}

pub fn pairwise_distances(points: &PointSet) -> Result<DistanceMatrix> {
    let x = points.points();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(QtcError::Input("non-finite coordinate".into()));
    }
    let m = x.nrows();
    let mut r = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let d = (x.row(i) - x.row(j)).norm();
            r[(i, j)] = d;
            r[(j, i)] = d;
        }
    }
    Ok(DistanceMatrix(r))
}

/// Linear-interpolation quantile of a sample (sorted in place).
pub(crate) fn interpolated_quantile(values: &mut [f64], eps: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = eps * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    values[lo] + frac * (values[hi] - values[lo])
}

/// The `eps`-quantile of the strictly positive upper-triangle distances.
pub fn quantile_proximity(dist: &DistanceMatrix, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(QtcError::Parameter(format!("eps must lie in (0,1), got {eps}")));
    }
    let mut positive = dist.positive_upper();
    if positive.is_empty() {
        return Err(QtcError::Degenerate("all pairwise distances are zero".into()));
    }
    Ok(interpolated_quantile(&mut positive, eps))
}

pub fn resolve_proximity(dist: &DistanceMatrix, proximity: Proximity) -> Result<f64> {
    match proximity {
        Proximity::Quantile(eps) => quantile_proximity(dist, eps),
        Proximity::Scale(r) if r > 0.0 && r.is_finite() => Ok(r),
        Proximity::Scale(r) => Err(QtcError::Parameter(format!("r_eps must be > 0, got {r}"))),
    }
}

/// `A_ij = exp(-(r_ij / r_eps)^2)`, diagonal included.
pub fn gaussian_adjacency(dist: &DistanceMatrix, r_eps: f64) -> Result<DMatrix<f64>> {
    if !(r_eps > 0.0 && r_eps.is_finite()) {
        return Err(QtcError::Parameter(format!("r_eps must be > 0, got {r_eps}")));
    }
    Ok(dist.0.map(|r| {
        let x = r / r_eps;
        (-x * x).exp()
    }))
}

/// Degrees and Laplacians of a symmetric nonnegative affinity matrix.
pub fn laplacians(adjacency: &DMatrix<f64>) -> Result<GraphBundle> {
    let m = adjacency.nrows();
    if adjacency.ncols() != m {
        return Err(QtcError::Input("adjacency must be square".into()));
    }
    for i in 0..m {
        for j in 0..m {
            let a = adjacency[(i, j)];
            if !a.is_finite() || a < 0.0 {
                return Err(QtcError::Input(format!("adjacency entry ({i},{j}) = {a}")));
            }
            if (a - adjacency[(j, i)]).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(QtcError::Input(format!("adjacency not symmetric at ({i},{j})")));
            }
        }
    }
    let degree = DVector::from_iterator(m, adjacency.row_iter().map(|row| row.sum()));
    if let Some(node) = degree.iter().position(|&d| d <= 0.0) {
        return Err(QtcError::IsolatedNode { node });
    }
    let laplacian = DMatrix::from_diagonal(&degree) - adjacency;
    let inv_sqrt = degree.map(|d| 1.0 / d.sqrt());
    let mut hamiltonian = DMatrix::from_fn(m, m, |i, j| -adjacency[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    for i in 0..m {
        hamiltonian[(i, i)] += 1.0;
    }
    // Enforce exact symmetry; the product above is symmetric up to rounding order only.
    for i in 0..m {
        for j in (i + 1)..m {
            let v = 0.5 * (hamiltonian[(i, j)] + hamiltonian[(j, i)]);
            hamiltonian[(i, j)] = v;
            hamiltonian[(j, i)] = v;
        }
    }
    Ok(GraphBundle {
        adjacency: adjacency.clone(),
        degree,
        laplacian,
        hamiltonian,
        r_eps: None,
    })
}

/// Distances, bandwidth, Gaussian adjacency and Laplacians in one step.
pub fn build_graph(points: &PointSet, proximity: Proximity) -> Result<GraphBundle> {
    let dist = pairwise_distances(points)?;
    let r_eps = resolve_proximity(&dist, proximity)?;
    let adjacency = gaussian_adjacency(&dist, r_eps)?;
    let mut bundle = laplacians(&adjacency)?;
    bundle.r_eps = Some(r_eps);
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points(a: [f64; 2], b: [f64; 2]) -> PointSet {
        PointSet::from_rows(&[a.to_vec(), b.to_vec()], None).unwrap()
    }

    #[test]
    fn three_four_five() {
        let d = pairwise_distances(&two_points([0.0, 0.0], [3.0, 4.0])).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 0), 5.0);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn identical_points_have_zero_distance() {
        let d = pairwise_distances(&two_points([1.5, -2.0], [1.5, -2.0])).unwrap();
        assert_eq!(d.get(0, 1), 0.0);
        assert!(matches!(quantile_proximity(&d, 0.5), Err(QtcError::Degenerate(_))));
    }

    #[test]
    fn non_finite_coordinates_rejected() {
        let p = two_points([0.0, f64::NAN], [1.0, 1.0]);
        assert!(matches!(pairwise_distances(&p), Err(QtcError::Input(_))));
    }

    #[test]
    fn point_set_invariants() {
        assert!(PointSet::from_rows(&[vec![1.0]], None).is_err());
        assert!(PointSet::from_rows(&[vec![1.0], vec![2.0]], Some(vec![0])).is_err());
        assert!(PointSet::from_rows(&[vec![1.0], vec![2.0, 3.0]], None).is_err());
    }

    #[test]
    fn median_of_even_count() {
        // positive upper-triangle entries are {1, 2, 3, 4}; zeros are skipped
        let d = DistanceMatrix(DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 2.0, 4.0, //
                1.0, 0.0, 3.0, 0.0, //
                2.0, 3.0, 0.0, 0.0, //
                4.0, 0.0, 0.0, 0.0,
            ],
        ));
        assert_eq!(quantile_proximity(&d, 0.5).unwrap(), 2.5);
    }

    #[test]
    fn quantile_near_one_is_max() {
        let d = DistanceMatrix(DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 7.0, 1.0, 0.0, 3.0, 7.0, 3.0, 0.0],
        ));
        let r = quantile_proximity(&d, 1.0 - 1e-12).unwrap();
        assert!((r - 7.0).abs() < 1e-9);
        assert!(quantile_proximity(&d, 1.0).is_err());
        assert!(quantile_proximity(&d, 0.0).is_err());
    }

    #[test]
    fn gaussian_values() {
        let d = DistanceMatrix(DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 2.0, 6.0, 2.0, 0.0, 0.0, 6.0, 0.0, 0.0],
        ));
        let a = gaussian_adjacency(&d, 2.0).unwrap();
        assert_eq!(a[(0, 0)], 1.0);
        assert!((a[(0, 1)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((a[(0, 1)] - 0.367879).abs() < 1e-6);
        assert!((a[(0, 2)] - (-9.0f64).exp()).abs() < 1e-18);
        assert!((a[(0, 2)] - 1.234e-4).abs() < 1e-7);
        assert!(gaussian_adjacency(&d, 0.0).is_err());
        assert!(gaussian_adjacency(&d, -1.0).is_err());
    }

    #[test]
    fn two_node_laplacians() {
        let a = DMatrix::from_element(2, 2, 1.0);
        let g = laplacians(&a).unwrap();
        assert_eq!(g.degree.as_slice(), &[2.0, 2.0]);
        assert!((g.hamiltonian[(0, 1)] + 0.5).abs() < 1e-15);
        assert!((g.hamiltonian[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(g.laplacian[(0, 1)], -1.0);
    }

    #[test]
    fn isolated_node_rejected() {
        let mut a = DMatrix::from_element(3, 3, 0.5);
        for k in 0..3 {
            a[(2, k)] = 0.0;
            a[(k, 2)] = 0.0;
        }
        assert_eq!(laplacians(&a).unwrap_err(), QtcError::IsolatedNode { node: 2 });
    }

    #[test]
    fn asymmetric_adjacency_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.2, 1.0]);
        assert!(matches!(laplacians(&a), Err(QtcError::Input(_))));
    }
}
