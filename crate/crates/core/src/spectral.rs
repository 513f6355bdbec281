//! Full eigendecomposition of the Hamiltonian and spectral-gap diagnostics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{QtcError, Result};

/// Eigenvalues at or below this magnitude are treated as exact zeros.
pub const ZERO_ENERGY_TOL: f64 = 1e-10;

/// Default relative jump used to count low-energy modes.
pub const DEFAULT_GAP_FACTOR: f64 = 10.0;

/// Ascending eigenvalues and orthonormal eigenvectors (columns) of `H`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: DVector<f64>,
    pub modes: DMatrix<f64>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Entry `psi_n(i)`.
    #[inline]
    pub fn mode(&self, n: usize, i: usize) -> f64 {
        self.modes[(i, n)]
    }

    /// Builds an eigensystem directly from a spectrum and modes, e.g. for analytic models.
    pub fn from_parts(energies: DVector<f64>, modes: DMatrix<f64>) -> Result<Self> {
        if modes.nrows() != energies.len() || modes.ncols() != energies.len() {
            return Err(QtcError::Input("modes must be square and match the spectrum".into()));
        }
        if energies.as_slice().windows(2).any(|w| w[0] > w[1]) {
            return Err(QtcError::Input("energies must be ascending".into()));
        }
        Ok(Self { energies, modes })
    }

    /// `Psi diag(E) Psi^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.len(), self.len(), |i, n| {
            self.modes[(i, n)] * self.energies[n]
        });
        scaled * self.modes.transpose()
    }
}

/// Gap summary used to pick `s` and to judge cluster separability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct GapReport {
    pub first_gap: f64,
    pub avg_gap: f64,
    pub next_ratio: f64,
    pub low_count: usize,
}

fn check_symmetric(h: &DMatrix<f64>) -> Result<()> {
    let m = h.nrows();
    if h.ncols() != m {
        return Err(QtcError::Input("matrix must be square".into()));
    }
    if m == 0 {
        return Err(QtcError::Input("empty matrix".into()));
    }
    for i in 0..m {
        for j in i..m {
            let (a, b) = (h[(i, j)], h[(j, i)]);
            if !a.is_finite() {
                return Err(QtcError::Input(format!("non-finite entry at ({i},{j})")));
            }
            if (a - b).abs() > 1e-10 {
                return Err(QtcError::Input(format!(
                    "matrix not symmetric at ({i},{j}): {a} vs {b}"
                )));
            }
        }
    }
    Ok(())
}

/// Full symmetric eigendecomposition with ascending energies.
///
/// Eigenvalues with magnitude below [`ZERO_ENERGY_TOL`] are clamped to zero and
/// each eigenvector is signed so its largest-magnitude entry is positive.
pub fn eigendecompose(h: &DMatrix<f64>) -> Result<EigenSystem> {
    check_symmetric(h)?;
    let m = h.nrows();
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0)
        .ok_or_else(|| QtcError::Numeric("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let energies = DVector::from_iterator(
        m,
        order.iter().map(|&k| {
            let e = eig.eigenvalues[k];
            if e.abs() < ZERO_ENERGY_TOL {
                0.0
            } else {
                e
            }
        }),
    );
    let mut modes = DMatrix::zeros(m, m);
    for (n, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        // first index attaining the max magnitude decides the sign
        let mut pivot = 0;
        for i in 1..m {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m {
            modes[(i, n)] = sign * col[i];
        }
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(QtcError::Numeric("non-finite eigenvalue".into()));
    }
    Ok(EigenSystem { energies, modes })
}

fn relative_jump(energies: &DVector<f64>, k: usize, abs_tol: f64) -> f64 {
    energies[k] / energies[k - 1].max(abs_tol)
}

/// Number of low-energy modes separated from the rest by the largest relative jump.
///
/// Jumps are `E_k / max(E_{k-1}, tol)` for `k >= 2`; `k = 1` is skipped because
/// `E_0 = 0` would make that ratio a comparison against the tolerance alone.
/// Returns 1 when no jump reaches `gap_factor`.
pub fn count_low_energy(eig: &EigenSystem, gap_factor: f64) -> usize {
    count_low_energy_with_tol(eig, gap_factor, ZERO_ENERGY_TOL)
}

pub fn count_low_energy_with_tol(eig: &EigenSystem, gap_factor: f64, abs_tol: f64) -> usize {
    let m = eig.len();
    let mut best_k = 1;
    let mut best_ratio = f64::NEG_INFINITY;
    for k in 2..m {
        let ratio = relative_jump(&eig.energies, k, abs_tol);
        if ratio >= best_ratio {
            best_ratio = ratio;
            best_k = k;
        }
    }
    if best_ratio >= gap_factor {
        best_k
    } else {
        1
    }
}

/// Gap statistics for a target of `q` clusters.
pub fn gap_stats(eig: &EigenSystem, q: usize) -> Result<GapReport> {
    let m = eig.len();
    if q < 2 || q > m {
        return Err(QtcError::Parameter(format!("q must lie in [2, {m}], got {q}")));
    }
    let e = &eig.energies;
    let first_gap = e[1] - e[0];
    let avg_gap = (e[q - 1] - e[0]) / (q - 1) as f64;
    let next_ratio = if q < m {
        relative_jump(e, q, ZERO_ENERGY_TOL)
    } else {
        f64::INFINITY
    };
    Ok(GapReport {
        first_gap,
        avg_gap,
        next_ratio,
        low_count: count_low_energy(eig, DEFAULT_GAP_FACTOR),
    })
}
