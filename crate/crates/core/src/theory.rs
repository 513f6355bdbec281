//! Effective tight-binding description of weakly coupled clusters.
//!
//! Each cluster contributes one orbital (the ground state of its diagonal block
//! of `H`); projecting `H` onto these orbitals gives a `q x q` Hamiltonian whose
//! resolvent predicts the phase plateaus seen in the transport amplitudes.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};
use crate::transport::principal_arg;

/// Entries of a block ground state below `-SIGN_TOL` make it non-Perron.
pub const SIGN_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ClusterOrbitals {
    /// Column `mu` is `phi_mu`, supported on cluster `mu` only.
    pub phi: DMatrix<f64>,
    pub partition: Vec<usize>,
}

impl ClusterOrbitals {
    pub fn q(&self) -> usize {
        self.phi.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct TightBinding {
    pub h: DMatrix<f64>,
    pub xi: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl TightBinding {
    pub fn from_matrix(h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() == 0 {
            return Err(QtcError::Input("tight-binding matrix must be square and nonempty".into()));
        }
        let xi = h.diagonal();
        let mut v = h.clone();
        v.fill_diagonal(0.0);
        Ok(Self { h, xi, v })
    }

    pub fn q(&self) -> usize {
        self.h.nrows()
    }

    /// Lowest eigenvalue of `h`.
    pub fn lowest_level(&self) -> f64 {
        SymmetricEigen::new(self.h.clone()).eigenvalues.min()
    }
}

/// Reference energy subtracted from `h` before building resolvents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EnergyShift {
    /// Shift so the lowest eigenvalue of `h` sits at zero.
    #[default]
    LowestLevel,
    /// Subtract a fixed energy, e.g. the ground energy of the full `H`.
    Constant(f64),
}

impl EnergyShift {
    fn amount(self, tb: &TightBinding) -> f64 {
        match self {
            EnergyShift::LowestLevel => tb.lowest_level(),
            EnergyShift::Constant(e) => e,
        }
    }
}

fn classes(partition: &[usize]) -> Result<Vec<Vec<usize>>> {
    let q = partition.iter().copied().max().map_or(0, |l| l + 1);
    let mut members = vec![Vec::new(); q];
    for (i, &l) in partition.iter().enumerate() {
        members[l].push(i);
    }
    if q < 2 {
        return Err(QtcError::Parameter("need at least two clusters".into()));
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(QtcError::Parameter(format!("cluster {empty} is empty")));
    }
    Ok(members)
}

/// Block ground states of `H`, one per cluster, signed nonnegative.
pub fn cluster_orbitals(h: &DMatrix<f64>, partition: &[usize]) -> Result<ClusterOrbitals> {
    let m = h.nrows();
    if h.ncols() != m || partition.len() != m {
        return Err(QtcError::Input("partition length must match H".into()));
    }
    let members = classes(partition)?;
    let mut phi = DMatrix::zeros(m, members.len());
    for (mu, nodes) in members.iter().enumerate() {
        let block = DMatrix::from_fn(nodes.len(), nodes.len(), |a, b| h[(nodes[a], nodes[b])]);
        let eig = SymmetricEigen::new(block);
        let ground = eig.eigenvalues.imin();
        let mut vec = eig.eigenvectors.column(ground).into_owned();
        if vec.sum() < 0.0 {
            vec.neg_mut();
        }
        let min_entry = vec.min();
        if min_entry < -SIGN_TOL {
            return Err(QtcError::InvalidBlock {
                cluster: mu,
                min_entry,
            });
        }
        vec.apply(|x| *x = x.max(0.0));
        vec /= vec.norm();
        for (a, &node) in nodes.iter().enumerate() {
            phi[(node, mu)] = vec[a];
        }
    }
    Ok(ClusterOrbitals {
        phi,
        partition: partition.to_vec(),
    })
}

/// `h_{mu nu} = phi_mu^T H phi_nu`.
pub fn tight_binding(h: &DMatrix<f64>, orbitals: &ClusterOrbitals) -> Result<TightBinding> {
    let phi = &orbitals.phi;
    let mut th = phi.transpose() * h * phi;
    let sym = (&th + th.transpose()) * 0.5;
    th.copy_from(&sym);
    TightBinding::from_matrix(th)
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(QtcError::Parameter(format!("s must be > 0, got {s}")));
    }
    Ok(())
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex<f64>> {
    m.map(|x| Complex::new(x, 0.0))
}

/// `g(is) = (is - h')^{-1}` with `h' = h - shift`.
pub fn resolvent_exact(tb: &TightBinding, s: f64, shift: EnergyShift) -> Result<DMatrix<Complex<f64>>> {
    check_s(s)?;
    let q = tb.q();
    let e0 = shift.amount(tb);
    let mut a = to_complex(&(-&tb.h));
    for k in 0..q {
        a[(k, k)] += Complex::new(e0, s);
    }
    a.try_inverse()
        .ok_or_else(|| QtcError::Numeric("singular resolvent matrix".into()))
}

/// Partial Born series `G0 + G0 V G0 + ...` truncated after `order` powers of `V`.
pub fn born_expansion(
    tb: &TightBinding,
    s: f64,
    order: usize,
    shift: EnergyShift,
) -> Result<DMatrix<Complex<f64>>> {
    check_s(s)?;
    if !(1..=3).contains(&order) {
        return Err(QtcError::Parameter(format!("Born order must be 1, 2 or 3, got {order}")));
    }
    let q = tb.q();
    let e0 = shift.amount(tb);
    let g0 = DMatrix::from_fn(q, q, |a, b| {
        if a == b {
            Complex::new(1.0, 0.0) / Complex::new(e0 - tb.xi[a], s)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    let v = to_complex(&tb.v);
    let mut term = g0.clone();
    let mut total = g0.clone();
    for _ in 0..order {
        term = &term * &v * &g0;
        total += &term;
    }
    Ok(total)
}

/// `Theta = arg(i g)`; `None` where `g` vanishes.
pub fn predicted_phases(g: &DMatrix<Complex<f64>>) -> DMatrix<Option<f64>> {
    let i = Complex::new(0.0, 1.0);
    g.map(|z| if z == Complex::new(0.0, 0.0) { None } else { Some(principal_arg(i * z)) })
}

/// Tight-binding propagator `g(i, j) = sum phi_mu(i) g_{mu nu} phi_nu(j)`.
pub fn propagator(orbitals: &ClusterOrbitals, g: &DMatrix<Complex<f64>>, i: usize, j: usize) -> Complex<f64> {
    let phi = &orbitals.phi;
    let mut acc = Complex::new(0.0, 0.0);
    for mu in 0..phi.ncols() {
        for nu in 0..phi.ncols() {
            acc += g[(mu, nu)] * (phi[(i, mu)] * phi[(j, nu)]);
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelParams {
    pub gap: f64,
    pub s: f64,
}

/// Phases of the own cluster and of the other cluster for a packet started deep
/// in cluster 0 of a symmetric two-level system.
pub fn two_level_phases(p: TwoLevelParams) -> Result<(f64, f64)> {
    check_s(p.s)?;
    if p.gap.is_nan() || p.gap < 0.0 {
        return Err(QtcError::Parameter(format!("gap must be >= 0, got {}", p.gap)));
    }
    let (e, s) = (p.gap, p.s);
    Ok(((e / (2.0 * s)).atan() - (e / s).atan(), std::f64::consts::FRAC_PI_2 - (e / s).atan()))
}

/// Symmetric double well `lambda (x^2 - l^2)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstantonParams {
    pub lambda: f64,
    pub omega: f64,
}

impl InstantonParams {
    /// Harmonic frequency `2 l sqrt(2 lambda)` from the well separation.
    pub fn from_separation(lambda: f64, ell: f64) -> Self {
        Self {
            lambda,
            omega: 2.0 * ell * (2.0 * lambda).sqrt(),
        }
    }

    /// `sqrt(w^3 / 2 pi lambda) exp(-w^3 / 12 lambda)`, zero once it underflows.
    pub fn rho_inst(&self) -> f64 {
        let w3 = self.omega.powi(3);
        let log_rho = 0.5 * (w3 / (2.0 * std::f64::consts::PI * self.lambda)).ln() - w3 / (12.0 * self.lambda);
        log_rho.exp()
    }

    /// Tunnel splitting `E = 2 w rho_inst`.
    pub fn gap(&self) -> f64 {
        2.0 * self.omega * self.rho_inst()
    }
}

/// Phases of the Laplace-transformed pair amplitudes `(1/s + 1/(s + iE), 1/s - 1/(s + iE))`.
pub fn laplace_pair_phases(gap: f64, s: f64) -> Result<(f64, f64)> {
    check_s(s)?;
    if gap.is_nan() || gap < 0.0 {
        return Err(QtcError::Parameter(format!("gap must be >= 0, got {gap}")));
    }
    let one = Complex::new(1.0, 0.0);
    let excited = one / Complex::new(s, gap);
    let g00 = one / s + excited;
    // 1/s - 1/(s + iE) = iE / (s (s + iE)); E >= 0 is factored out
    let g01 = Complex::new(0.0, 1.0) * excited / s;
    Ok((principal_arg(g00), principal_arg(g01)))
}

/// Phases from the Laplace-transformed double-well amplitudes.
pub fn instanton_phases(p: InstantonParams, s: f64) -> Result<(f64, f64)> {
    if !(p.lambda > 0.0 && p.omega > 0.0) {
        return Err(QtcError::Parameter("instanton needs lambda > 0 and omega > 0".into()));
    }
    // the common prefactor sqrt(w/pi)/2 is positive and drops out of the argument
    laplace_pair_phases(p.gap(), s)
}
