//! Spectral-clustering baseline and alternative similarity kernels built from
//! the same eigensystem: time-averaged transition probability `P`, Laplace
//! similarity `S` and the Jensen-Shannon divergence of time-averaged states.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};
use crate::labeling::{kmeans, LabelVector};
use crate::spectral::EigenSystem;

/// Relative tolerance for treating two eigenvalues as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// Rows scaled to unit length.
    #[default]
    Approach1,
    /// Rows divided by their ground-state component.
    Approach2,
}

#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    /// Row `i` is the feature vector of node `i`.
    pub v: DMatrix<f64>,
    pub normalization: Normalization,
    /// Rows of zero length left unnormalized under [`Normalization::Approach1`].
    pub zero_rows: Vec<usize>,
}

fn normalize_rows(mut v: DMatrix<f64>, normalization: Normalization) -> Result<EmbeddingMatrix> {
    let mut zero_rows = Vec::new();
    match normalization {
        Normalization::None => {}
        Normalization::Approach1 => {
            for (i, mut row) in v.row_iter_mut().enumerate() {
                let n = row.norm();
                if n == 0.0 {
                    zero_rows.push(i);
                } else {
                    row /= n;
                }
            }
        }
        Normalization::Approach2 => {
            for (i, mut row) in v.row_iter_mut().enumerate() {
                let g = row[0];
                if g.abs() < 1e-12 {
                    return Err(QtcError::Degenerate(format!(
                        "ground-state component of node {i} is {g:e}; cannot divide by it"
                    )));
                }
                row /= g;
            }
        }
    }
    if !zero_rows.is_empty() {
        log::warn!("{} embedding row(s) have zero norm", zero_rows.len());
    }
    Ok(EmbeddingMatrix {
        v,
        normalization,
        zero_rows,
    })
}

/// Rows `(psi_0(i), ..., psi_{q-1}(i))`, renormalized as requested.
pub fn spectral_embedding(eig: &EigenSystem, q: usize, normalization: Normalization) -> Result<EmbeddingMatrix> {
    let m = eig.len();
    if q < 1 || q > m {
        return Err(QtcError::Parameter(format!("need 1 <= q <= m, got q={q}, m={m}")));
    }
    normalize_rows(eig.modes.columns(0, q).into_owned(), normalization)
}

/// k-means on the spectral embedding.
pub fn spectral_cluster(
    eig: &EigenSystem,
    q: usize,
    seed: u64,
    normalization: Normalization,
) -> Result<LabelVector> {
    let emb = spectral_embedding(eig, q, normalization)?;
    if q == 1 {
        return Ok(LabelVector(vec![0; eig.len()]));
    }
    Ok(LabelVector(kmeans(&emb.v, q, seed)?))
}

pub fn embedding_distance(emb: &EmbeddingMatrix, i: usize, j: usize) -> f64 {
    (emb.v.row(i) - emb.v.row(j)).norm()
}

/// Distances `(D_ij, D_ik, D_jk)` for the three-node example in which `j` is
/// orthogonal to `i` and `k` is a scaled copy of `i`.
pub fn worked_outlier_distances(
    alpha: f64,
    beta: f64,
    gamma: f64,
    h: f64,
    normalization: Normalization,
) -> Result<(f64, f64, f64)> {
    let valid = alpha > 0.0
        && beta > 0.0
        && (alpha * alpha + beta * beta - 1.0).abs() < 1e-12
        && gamma > 0.0
        && gamma <= 1.0
        && h > 0.0;
    if !valid {
        return Err(QtcError::Parameter(
            "need alpha, beta > 0 with alpha^2 + beta^2 = 1, 0 < gamma <= 1, h > 0".into(),
        ));
    }
    let rows = DMatrix::from_row_slice(
        3,
        2,
        &[alpha * h, beta * h, beta * h, -alpha * h, gamma * alpha * h, gamma * beta * h],
    );
    let emb = normalize_rows(rows, normalization)?;
    let d = |a, b| embedding_distance(&emb, a, b);
    Ok((d(0, 1), d(0, 2), d(1, 2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    P,
    S,
    Jsd,
    Consensus,
    Gaussian,
}

#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub k: DMatrix<f64>,
    pub kind: KernelKind,
}

/// Index ranges of (numerically) degenerate eigenvalues.
pub fn degenerate_groups(energies: &DVector<f64>) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for n in 1..=energies.len() {
        let split = n == energies.len() || {
            let (a, b) = (energies[n - 1], energies[n]);
            (b - a).abs() > DEGENERACY_TOL * a.abs().max(1.0)
        };
        if split {
            groups.push(start..n);
            start = n;
        }
    }
    groups
}

fn group_overlap(eig: &EigenSystem, g: &std::ops::Range<usize>, i: usize, j: usize) -> f64 {
    g.clone().map(|n| eig.mode(n, i) * eig.mode(n, j)).sum()
}

fn symmetric_from_rows(m: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| (i..m).map(|j| f(i, j)).collect())
        .collect();
    let mut k = DMatrix::zeros(m, m);
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            k[(i, i + off)] = v;
            k[(i + off, i)] = v;
        }
    }
    k
}

/// Long-time average of `|<i| exp(-iHt) |j>|^2`.
pub fn transition_kernel_p(eig: &EigenSystem) -> KernelMatrix {
    let groups = degenerate_groups(&eig.energies);
    let k = symmetric_from_rows(eig.len(), |i, j| {
        groups.iter().map(|g| group_overlap(eig, g, i, j).powi(2)).sum()
    });
    KernelMatrix { k, kind: KernelKind::P }
}

/// Normalized overlap of Laplace-transformed wave packets started at `i` and `j`.
pub fn laplace_similarity_s(eig: &EigenSystem, s: f64) -> Result<KernelMatrix> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(QtcError::Parameter(format!("s must be > 0, got {s}")));
    }
    let w: Vec<f64> = eig.energies.iter().map(|e| 1.0 / (s * s + e * e)).collect();
    let inner = |i: usize, j: usize| -> f64 { w.iter().enumerate().map(|(n, wn)| wn * eig.mode(n, i) * eig.mode(n, j)).sum() };
    let diag: Vec<f64> = (0..eig.len()).map(|i| inner(i, i)).collect();
    let k = symmetric_from_rows(eig.len(), |i, j| {
        if i == j {
            1.0
        } else {
            (inner(i, j).abs() / (diag[i] * diag[j]).sqrt()).min(1.0)
        }
    });
    Ok(KernelMatrix { k, kind: KernelKind::S })
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Jensen-Shannon divergence between time-averaged states started at `i` and `j`.
///
/// Within a degenerate group the averaged states are rank one; the mixture's
/// eigenvalues come from the 2x2 Gram matrix of the two group vectors.
pub fn jsd_matrix(eig: &EigenSystem) -> KernelMatrix {
    let groups = degenerate_groups(&eig.energies);
    let k = symmetric_from_rows(eig.len(), |i, j| {
        if i == j {
            return 0.0;
        }
        let mut d = 0.0;
        for g in &groups {
            let a = group_overlap(eig, g, i, i);
            let b = group_overlap(eig, g, j, j);
            let c = group_overlap(eig, g, i, j);
            let tr = 0.5 * (a + b);
            let det = 0.25 * (a * b - c * c).max(0.0);
            let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
            let (l1, l2) = (0.5 * (tr + disc), 0.5 * (tr - disc));
            d += -xlogx(l1) - xlogx(l2) + 0.5 * xlogx(a) + 0.5 * xlogx(b);
        }
        d.clamp(0.0, std::f64::consts::LN_2)
    });
    KernelMatrix { k, kind: KernelKind::Jsd }
}
