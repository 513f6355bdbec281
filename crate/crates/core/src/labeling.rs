//! Turning one phase field into `q` discrete cluster labels.
//!
//! Two routes are provided: cutting the sorted phases at the `q - 1` widest
//! chord gaps on the unit circle ([`labels_direct_difference`]), and k-means on
//! the embedded unit vectors ([`labels_circle_clustering`]).

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};

/// Per-node cluster labels in `0..q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelVector(pub Vec<usize>);

impl LabelVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Relabels so that labels appear in first-occurrence order `0, 1, 2, ...`.
    pub fn canonical(&self) -> LabelVector {
        LabelVector(canonical_labels(&self.0))
    }
}

pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Phase-to-label method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LabelMethod {
    /// Cut the sorted phases at the widest chord gaps.
    Diff,
    /// k-means on `(cos θ, sin θ)`.
    #[default]
    Circle,
}

/// Result of the direct-difference cut.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCut {
    pub labels: LabelVector,
    /// True when a cut had to be placed on a zero-width gap.
    pub fragmented: bool,
}

fn check_q(m: usize, q: usize) -> Result<()> {
    if q < 1 || q > m {
        return Err(QtcError::Parameter(format!("need 1 <= q <= m, got q={q}, m={m}")));
    }
    Ok(())
}

/// Sorts the phases, measures chord lengths between neighbours on the unit
/// circle and cuts at the `q - 1` largest ones. The wrap-around gap between the
/// largest and smallest phase is never cut.
pub fn labels_direct_difference(phases: &[f64], q: usize) -> Result<PhaseCut> {
    let m = phases.len();
    check_q(m, q)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| phases[a].total_cmp(&phases[b]).then(a.cmp(&b)));

    let unit: Vec<(f64, f64)> = order
        .iter()
        .map(|&i| (phases[i].cos(), phases[i].sin()))
        .collect();
    let gaps: Vec<f64> = unit
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .collect();

    let mut by_size: Vec<usize> = (0..gaps.len()).collect();
    by_size.sort_by(|&a, &b| gaps[b].total_cmp(&gaps[a]).then(a.cmp(&b)));
    let mut cuts: Vec<usize> = by_size[..q - 1].to_vec();
    let fragmented = cuts.iter().any(|&c| gaps[c] == 0.0);
    if fragmented {
        log::warn!("fewer distinct phases than q={q}; some clusters split ties arbitrarily");
    }
    cuts.sort_unstable();

    let mut labels = vec![0; m];
    let mut label = 0;
    let mut next_cut = cuts.iter().peekable();
    for (rank, &node) in order.iter().enumerate() {
        labels[node] = label;
        if next_cut.peek() == Some(&&rank) {
            next_cut.next();
            label += 1;
        }
    }
    Ok(PhaseCut {
        labels: LabelVector(labels),
        fragmented,
    })
}

/// Lloyd iteration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: DMatrix<f64>,
    pub wcss: f64,
    /// Within-cluster sum of squares after each assignment step of the kept run.
    pub history: Vec<f64>,
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    (0..points.ncols())
        .map(|k| {
            let d = points[(i, k)] - centroids[(c, k)];
            d * d
        })
        .sum()
}

fn plus_plus_seed(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n, d) = points.shape();
    let mut centroids = DMatrix::zeros(k, d);
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from(&points.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centroids, 0)).collect();
    let mut chosen = vec![false; n];
    chosen[first] = true;
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // rounding can walk off the end onto a zero-weight point
            if nearest[pick] == 0.0 {
                pick = (0..n).rev().find(|&i| nearest[i] > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            // all remaining points coincide with a centroid
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            if free.is_empty() {
                rng.random_range(0..n)
            } else {
                free[rng.random_range(0..free.len())]
            }
        };
        chosen[pick] = true;
        centroids.row_mut(c).copy_from(&points.row(pick));
        for (i, w) in nearest.iter_mut().enumerate() {
            *w = w.min(sq_dist(points, i, &centroids, c));
        }
    }
    centroids
}

fn assign(points: &DMatrix<f64>, centroids: &DMatrix<f64>, labels: &mut [usize]) -> f64 {
    let k = centroids.nrows();
    let mut wcss = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = 0;
        let mut best_d = sq_dist(points, i, centroids, 0);
        for c in 1..k {
            let d = sq_dist(points, i, centroids, c);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        *label = best;
        wcss += best_d;
    }
    wcss
}

fn lloyd(
    points: &DMatrix<f64>,
    k: usize,
    config: &KMeansConfig,
    rng: &mut ChaCha8Rng,
) -> KMeansFit {
    let (n, d) = points.shape();
    let mut centroids = plus_plus_seed(points, k, rng);
    let mut labels = vec![0; n];
    let mut history = Vec::new();
    for _ in 0..config.max_iter.max(1) {
        let wcss = assign(points, &centroids, &mut labels);
        history.push(wcss);

        let mut sums = DMatrix::<f64>::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for j in 0..d {
                sums[(l, j)] += points[(i, j)];
            }
        }
        let mut shift: f64 = 0.0;
        let mut reseeded = false;
        for c in 0..k {
            if counts[c] == 0 {
                // move the empty centroid onto the point worst served by its own centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(points, a, &centroids, labels[a])
                            .total_cmp(&sq_dist(points, b, &centroids, labels[b]))
                    })
                    .unwrap_or(0);
                centroids.row_mut(c).copy_from(&points.row(far));
                reseeded = true;
                continue;
            }
            for j in 0..d {
                let updated = sums[(c, j)] / counts[c] as f64;
                shift = shift.max((updated - centroids[(c, j)]).abs());
                centroids[(c, j)] = updated;
            }
        }
        if !reseeded && shift < config.tol {
            break;
        }
    }
    let wcss = assign(points, &centroids, &mut labels);
    if history.last().is_none_or(|&h| wcss < h) {
        history.push(wcss);
    }
    KMeansFit {
        labels,
        centroids,
        wcss,
        history,
    }
}

/// k-means with k-means++ seeding; the best of `config.restarts` runs by WCSS.
pub fn kmeans_with(
    points: &DMatrix<f64>,
    k: usize,
    seed: u64,
    config: &KMeansConfig,
) -> Result<KMeansFit> {
    let n = points.nrows();
    if k < 1 || k > n {
        return Err(QtcError::Parameter(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(QtcError::Input("non-finite point for k-means".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..config.restarts.max(1) {
        let fit = lloyd(points, k, config, &mut rng);
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(kmeans_with(points, k, seed, &KMeansConfig::default())?.labels)
}

/// Within-cluster sum of squares of an arbitrary labelling.
pub fn wcss(points: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let d = points.ncols();
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sums = DMatrix::<f64>::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for j in 0..d {
            sums[(l, j)] += points[(i, j)];
        }
    }
    let mut total = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        for j in 0..d {
            let mean = sums[(l, j)] / counts[l] as f64;
            total += (points[(i, j)] - mean).powi(2);
        }
    }
    total
}

/// Maps phases to unit vectors and runs k-means on them.
pub fn labels_circle_clustering(phases: &[f64], q: usize, seed: u64) -> Result<LabelVector> {
    check_q(phases.len(), q)?;
    if q == 1 {
        return Ok(LabelVector(vec![0; phases.len()]));
    }
    let unit = DMatrix::from_fn(phases.len(), 2, |i, k| {
        if k == 0 {
            phases[i].cos()
        } else {
            phases[i].sin()
        }
    });
    Ok(LabelVector(kmeans(&unit, q, seed)?))
}

/// Labels one phase field with the chosen method.
pub fn label_phases(phases: &[f64], q: usize, method: LabelMethod, seed: u64) -> Result<LabelVector> {
    match method {
        LabelMethod::Diff => Ok(labels_direct_difference(phases, q)?.labels),
        LabelMethod::Circle => labels_circle_clustering(phases, q, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn direct_difference_hand_run() {
        let phases = [0.0, 0.01, 0.02, 1.5, 1.51, 3.0];
        let cut = labels_direct_difference(&phases, 3).unwrap();
        assert_eq!(cut.labels.0, vec![0, 0, 0, 1, 1, 2]);
        assert!(!cut.fragmented);
    }

    #[test]
    fn direct_difference_unsorted_input() {
        let phases = [1.51, 0.02, 3.0, 0.0, 1.5, 0.01];
        let cut = labels_direct_difference(&phases, 3).unwrap();
        assert_eq!(cut.labels.0, vec![1, 0, 2, 0, 1, 0]);
    }

    #[test]
    fn single_cluster() {
        let phases = [0.3, -2.0, 1.0];
        assert_eq!(labels_direct_difference(&phases, 1).unwrap().labels.0, vec![0; 3]);
        assert_eq!(labels_circle_clustering(&phases, 1, 7).unwrap().0, vec![0; 3]);
    }

    #[test]
    fn equal_phases_fragment() {
        let cut = labels_direct_difference(&[0.4; 5], 2).unwrap();
        assert!(cut.fragmented);
        assert_eq!(cut.labels.0, vec![0, 1, 1, 1, 1]);
    }

    #[test]
    fn q_out_of_range() {
        assert!(labels_direct_difference(&[0.0, 1.0], 3).is_err());
        assert!(labels_circle_clustering(&[0.0, 1.0], 0, 1).is_err());
    }

    #[test]
    fn antipodal_groups_split() {
        let phases = [0.0, 0.02, -0.01, PI - 0.01, PI, -PI + 0.02];
        let l = labels_circle_clustering(&phases, 2, 3).unwrap();
        assert_eq!(l.canonical().0, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn wrap_cluster_kept_whole_by_circle_only() {
        // group A straddles the branch cut at ±pi, group B sits near 0
        let phases = [3.10, 3.12, -3.10, -3.12, 0.0, 0.05, -0.05];
        let circle = labels_circle_clustering(&phases, 2, 11).unwrap().canonical();
        assert_eq!(circle.0, vec![0, 0, 0, 0, 1, 1, 1]);
        let diff = labels_direct_difference(&phases, 2).unwrap().labels;
        let a: std::collections::HashSet<_> = diff.0[..4].iter().collect();
        assert_eq!(a.len(), 2, "sorted-order cut must split the wrap cluster");
    }

    #[test]
    fn kmeans_each_point_own_cluster() {
        let pts = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0]);
        let mut l = kmeans(&pts, 4, 0).unwrap();
        l.sort_unstable();
        assert_eq!(l, vec![0, 1, 2, 3]);
    }

    #[test]
    fn kmeans_two_pairs() {
        let pts = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.1, 0.0, 10.0, 10.0, 10.0, 10.1]);
        let l = kmeans(&pts, 2, 42).unwrap();
        assert_eq!(canonical_labels(&l), vec![0, 0, 1, 1]);
    }

    #[test]
    fn kmeans_deterministic() {
        let pts = DMatrix::from_fn(50, 2, |i, k| ((i * 7 + k * 13) % 17) as f64);
        let a = kmeans(&pts, 3, 9).unwrap();
        let b = kmeans(&pts, 3, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kmeans_duplicate_points() {
        let pts = DMatrix::from_element(5, 2, 1.0);
        let fit = kmeans_with(&pts, 3, 1, &KMeansConfig::default()).unwrap();
        assert_eq!(fit.wcss, 0.0);
        assert!(fit.labels.iter().all(|&l| l < 3));
    }
}
