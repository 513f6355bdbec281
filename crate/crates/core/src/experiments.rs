//! Reproducible experiments: two-cloud phase theory, outlier sweep, spectral
//! cluster counting and proximity sweeps against spectral clustering.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::datagen::{self, ari, DensityProfile, GeneratorSpec};
use crate::ensemble::{default_m_prime, majority_partition, run_qtc};
use crate::error::{QtcError, Result};
use crate::graph::{build_graph, GraphBundle, PointSet, Proximity};
use crate::kernels::{spectral_cluster, Normalization};
use crate::labeling::LabelMethod;
use crate::spectral::{eigendecompose, gap_stats, EigenSystem};
use crate::theory::{
    born_expansion, cluster_orbitals, predicted_phases, resolvent_exact, tight_binding, EnergyShift,
};
use crate::transport::{laplace_wavefunction, select_s, wrap_angle, LaplaceParams, SRule};

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
            .collect(),
    }
}

/// Circular mean of a set of angles.
pub fn circular_mean(phases: impl IntoIterator<Item = f64>) -> f64 {
    let (s, c) = phases
        .into_iter()
        .fold((0.0, 0.0), |(s, c), p| (s + p.sin(), c + p.cos()));
    s.atan2(c)
}

/// Highest-degree node carrying the given label.
pub fn hub_node(graph: &GraphBundle, labels: &[usize], label: usize) -> Result<usize> {
    (0..graph.len())
        .filter(|&i| labels[i] == label)
        .max_by(|&a, &b| graph.degree[a].total_cmp(&graph.degree[b]).then(b.cmp(&a)))
        .ok_or_else(|| QtcError::Parameter(format!("no node has label {label}")))
}

fn phase_matrix(th: &DMatrix<Option<f64>>) -> Vec<Vec<Option<f64>>> {
    th.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn max_abs_diff(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Which partition defines the cluster orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OrbitalSource {
    Truth,
    /// Majority partition of a QTC ensemble. Points generated in one cloud but
    /// sitting inside the other get the orbital of the cloud they live in.
    #[default]
    Majority,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoCloudParams {
    pub ell: f64,
    pub sigma: f64,
    pub n_per: usize,
    pub proximity: Proximity,
    pub laplace: LaplaceParams,
    pub shift: EnergyShift,
    /// Fraction of lowest-amplitude nodes left out of the phase comparison.
    pub exclude_fraction: f64,
    pub orbitals: OrbitalSource,
    /// Defaults to the highest-degree node of the left cloud.
    pub init_node: Option<usize>,
    pub seed: u64,
}

impl Default for TwoCloudParams {
    fn default() -> Self {
        Self {
            ell: 0.3,
            sigma: 0.1,
            n_per: 100,
            proximity: Proximity::Scale(0.1),
            laplace: LaplaceParams {
                rule: SRule::FirstGap,
                multiplier: 1.2,
            },
            shift: EnergyShift::LowestLevel,
            exclude_fraction: 0.05,
            orbitals: OrbitalSource::Majority,
            init_node: None,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoCloudReport {
    pub r_eps: f64,
    pub s: f64,
    pub low_energies: Vec<f64>,
    pub init_node: usize,
    pub partition: Vec<usize>,
    pub empirical_phases: Vec<f64>,
    pub amplitude_norms: Vec<f64>,
    /// `arg(i g_{mu nu})` of the exact tight-binding resolvent.
    pub exact_theory: Vec<Vec<Option<f64>>>,
    pub born_1: Vec<Vec<Option<f64>>>,
    pub born_2: Vec<Vec<Option<f64>>>,
    pub born_3: Vec<Vec<Option<f64>>>,
    /// Max-norm distance of each Born order from the exact resolvent.
    pub born_errors: [f64; 3],
    pub tight_binding: Vec<Vec<f64>>,
    pub excluded_nodes: usize,
    pub max_phase_error: f64,
}

/// Two Gaussian clouds: empirical phases against the tight-binding prediction.
pub fn two_cloud(p: &TwoCloudParams) -> Result<TwoCloudReport> {
    if !(0.0..1.0).contains(&p.exclude_fraction) {
        return Err(QtcError::Parameter("exclude_fraction must lie in [0, 1)".into()));
    }
    let points = datagen::gen_two_clouds(p.ell, p.sigma, p.n_per, p.seed)?;
    let truth = points.truth().expect("generated").to_vec();
    let graph = build_graph(&points, p.proximity)?;
    let eig = eigendecompose(&graph.hamiltonian)?;
    let s = select_s(&gap_stats(&eig, 2)?, &p.laplace)?;

    let partition = match p.orbitals {
        OrbitalSource::Truth => truth.clone(),
        OrbitalSource::Majority => {
            let omega = run_qtc(&eig, s, 2, default_m_prime(eig.len()), p.seed, LabelMethod::Circle)?;
            majority_partition(&omega, 2)?.0 .0
        }
    };
    let init = match p.init_node {
        Some(j) => j,
        None => hub_node(&graph, &partition, partition[hub_node(&graph, &truth, 0)?])?,
    };
    let field = laplace_wavefunction(&eig, init, s)?;

    let orb = cluster_orbitals(&graph.hamiltonian, &partition)?;
    let tb = tight_binding(&graph.hamiltonian, &orb)?;
    let exact = resolvent_exact(&tb, s, p.shift)?;
    let theory = predicted_phases(&exact);
    let borns = (1..=3)
        .map(|k| born_expansion(&tb, s, k, p.shift))
        .collect::<Result<Vec<_>>>()?;

    let m = eig.len();
    let norms: Vec<f64> = field.amplitudes.iter().map(|a| a.norm()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]));
    let excluded = (p.exclude_fraction * m as f64).floor() as usize;
    let nu = partition[init];
    let mut max_err: f64 = 0.0;
    for &i in &order[excluded..] {
        let predicted = theory[(partition[i], nu)].ok_or_else(|| {
            QtcError::Degenerate("clusters are uncoupled; inter-cluster phase undefined".into())
        })?;
        max_err = max_err.max(wrap_angle(field.phases[i] - predicted).abs());
    }

    Ok(TwoCloudReport {
        r_eps: graph.r_eps.unwrap_or(f64::NAN),
        s,
        low_energies: eig.energies.iter().take(5).copied().collect(),
        init_node: init,
        partition,
        empirical_phases: field.phases.clone(),
        amplitude_norms: norms,
        exact_theory: phase_matrix(&theory),
        born_1: phase_matrix(&predicted_phases(&borns[0])),
        born_2: phase_matrix(&predicted_phases(&borns[1])),
        born_3: phase_matrix(&predicted_phases(&borns[2])),
        born_errors: [
            max_abs_diff(&borns[0], &exact),
            max_abs_diff(&borns[1], &exact),
            max_abs_diff(&borns[2], &exact),
        ],
        tight_binding: tb.h.row_iter().map(|r| r.iter().copied().collect()).collect(),
        excluded_nodes: excluded,
        max_phase_error: max_err,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutlierSweepParams {
    pub ell: f64,
    pub sigma: f64,
    pub n_per: usize,
    pub proximity: Proximity,
    pub laplace: LaplaceParams,
    /// Number of outlier positions from the left center to the right one.
    pub steps: usize,
    pub seed: u64,
}

impl Default for OutlierSweepParams {
    fn default() -> Self {
        Self {
            ell: 0.3,
            sigma: 0.1,
            n_per: 100,
            proximity: Proximity::Scale(0.1),
            laplace: LaplaceParams {
                rule: SRule::FirstGap,
                multiplier: 1.2,
            },
            steps: 21,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierRow {
    pub alpha_out: f64,
    pub phase_left_mean: f64,
    pub phase_right_mean: f64,
    pub phase_outlier: f64,
}

/// Moves one extra point from the left cloud center to the right one and
/// records the plateau phases and the outlier phase, all from a fixed left-cloud initializer.
pub fn outlier_sweep(p: &OutlierSweepParams) -> Result<Vec<OutlierRow>> {
    if p.steps < 2 {
        return Err(QtcError::Parameter("outlier sweep needs at least 2 steps".into()));
    }
    let base = datagen::gen_two_clouds(p.ell, p.sigma, p.n_per, p.seed)?;
    let truth = base.truth().expect("generated").to_vec();
    let init = hub_node(&build_graph(&base, p.proximity)?, &truth, 0)?;
    let n = p.n_per;
    (0..p.steps)
        .map(|k| {
            let alpha = k as f64 / (p.steps - 1) as f64;
            let mut pts = base.clone();
            pts.push(&datagen::outlier_position(p.ell, alpha), Some(2))?;
            let graph = build_graph(&pts, p.proximity)?;
            let eig = eigendecompose(&graph.hamiltonian)?;
            let s = select_s(&gap_stats(&eig, 2)?, &p.laplace)?;
            let ph = laplace_wavefunction(&eig, init, s)?.phases;
            Ok(OutlierRow {
                alpha_out: alpha,
                phase_left_mean: circular_mean(ph[..n].iter().copied()),
                phase_right_mean: circular_mean(ph[n..2 * n].iter().copied()),
                phase_outlier: ph[2 * n],
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct InterpolationCheck {
    /// Outlier phase relative to the left plateau, oriented towards the right plateau.
    pub outlier_rel: Vec<f64>,
    pub right_rel: Vec<f64>,
    /// One grid step of the plateau separation.
    pub tolerance: f64,
    pub monotone: bool,
    pub bounded: bool,
}

/// Is the outlier phase monotone in `alpha` and between the two plateaus, up to one grid step?
pub fn check_interpolation(rows: &[OutlierRow]) -> InterpolationCheck {
    let raw_right: Vec<f64> = rows
        .iter()
        .map(|r| wrap_angle(r.phase_right_mean - r.phase_left_mean))
        .collect();
    let sign = if raw_right.iter().sum::<f64>() >= 0.0 { 1.0 } else { -1.0 };
    let right_rel: Vec<f64> = raw_right.iter().map(|x| sign * x).collect();
    let outlier_rel: Vec<f64> = rows
        .iter()
        .map(|r| sign * wrap_angle(r.phase_outlier - r.phase_left_mean))
        .collect();
    let span = right_rel.iter().sum::<f64>() / right_rel.len().max(1) as f64;
    let tolerance = span.abs() / (rows.len().max(2) - 1) as f64;
    let monotone = outlier_rel.windows(2).all(|w| w[1] - w[0] >= -tolerance);
    let bounded = outlier_rel
        .iter()
        .zip(&right_rel)
        .all(|(&o, &r)| o >= -tolerance && o <= r + tolerance);
    InterpolationCheck {
        outlier_rel,
        right_rel,
        tolerance,
        monotone,
        bounded,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumCountParams {
    pub q: usize,
    pub sigma: f64,
    pub n_per: usize,
    pub eps: f64,
    pub gap_factor: f64,
    pub seed: u64,
}

impl Default for SpectrumCountParams {
    fn default() -> Self {
        Self {
            q: 4,
            sigma: 0.1,
            n_per: 100,
            eps: 0.1,
            gap_factor: crate::spectral::DEFAULT_GAP_FACTOR,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCountReport {
    pub q: usize,
    pub low_count: usize,
    /// `E_q / E_{q-1}`.
    pub gap_ratio: f64,
    pub low_energies: Vec<f64>,
}

/// Tetrahedron clusters: how many low modes stand out of the spectrum?
pub fn spectrum_count(p: &SpectrumCountParams) -> Result<SpectrumCountReport> {
    let points = datagen::gen_tetrahedron(p.q, p.sigma, p.n_per, p.seed)?;
    let eig = eigendecompose(&build_graph(&points, Proximity::Quantile(p.eps))?.hamiltonian)?;
    let e = &eig.energies;
    let gap_ratio = if p.q >= 1 && p.q < eig.len() {
        e[p.q] / e[p.q - 1].max(crate::spectral::ZERO_ENERGY_TOL)
    } else {
        f64::INFINITY
    };
    Ok(SpectrumCountReport {
        q: p.q,
        low_count: crate::spectral::count_low_energy(&eig, p.gap_factor),
        gap_ratio,
        low_energies: e.iter().take(p.q + 2).copied().collect(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsSweepParams {
    pub eps: Vec<f64>,
    pub q: usize,
    pub m_prime: usize,
    pub laplace: LaplaceParams,
    pub method: LabelMethod,
    pub normalization: Normalization,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsSweepRow {
    pub eps: f64,
    pub r_eps: f64,
    /// `None` when the graph is disconnected at this scale (zero spectral gap).
    pub ari_qtc: Option<f64>,
    pub ari_spectral: Option<f64>,
    pub majority_weight: Option<f64>,
}

fn sweep_point(points: &PointSet, truth: &[usize], eps: f64, p: &EpsSweepParams) -> Result<EpsSweepRow> {
    let graph = build_graph(points, Proximity::Quantile(eps))?;
    let r_eps = graph.r_eps.unwrap_or(f64::NAN);
    let eig: EigenSystem = eigendecompose(&graph.hamiltonian)?;
    let s = match select_s(&gap_stats(&eig, p.q)?, &p.laplace) {
        Ok(s) => s,
        Err(QtcError::Degenerate(_)) => {
            return Ok(EpsSweepRow {
                eps,
                r_eps,
                ari_qtc: None,
                ari_spectral: None,
                majority_weight: None,
            })
        }
        Err(e) => return Err(e),
    };
    let omega = run_qtc(&eig, s, p.q, p.m_prime.min(eig.len()), p.seed, p.method)?;
    let (labels, tally) = majority_partition(&omega, p.q)?;
    let spectral = spectral_cluster(&eig, p.q, p.seed, p.normalization)?;
    Ok(EpsSweepRow {
        eps,
        r_eps,
        ari_qtc: Some(ari(labels.as_slice(), truth)?),
        ari_spectral: Some(ari(spectral.as_slice(), truth)?),
        majority_weight: Some(tally.winner().1),
    })
}

/// QTC and spectral clustering ARI over a grid of proximity quantiles.
pub fn eps_sweep(points: &PointSet, p: &EpsSweepParams) -> Result<Vec<EpsSweepRow>> {
    let truth = points
        .truth()
        .ok_or_else(|| QtcError::Input("eps sweep needs ground-truth labels".into()))?;
    p.eps.iter().map(|&eps| sweep_point(points, truth, eps, p)).collect()
}

/// Does some row have QTC ARI >= 0.95 with spectral at least 0.05 below it?
pub fn qtc_wins(rows: &[EpsSweepRow]) -> Vec<f64> {
    rows.iter()
        .filter_map(|r| match (r.ari_qtc, r.ari_spectral) {
            (Some(a), Some(b)) if a >= 0.95 && b <= a - 0.05 => Some(r.eps),
            _ => None,
        })
        .collect()
}

/// Three parallel sticks whose density thins out along their length.
pub fn nonuniform_sticks_spec() -> GeneratorSpec {
    GeneratorSpec::Sticks {
        n_sticks: 3,
        length: 3.0,
        gap: 0.5,
        n_per: 100,
        profile: DensityProfile::Nonuniform,
        jitter: 0.02,
    }
}

pub fn uniform_sticks_spec() -> GeneratorSpec {
    GeneratorSpec::Sticks {
        n_sticks: 3,
        length: 3.0,
        gap: 0.5,
        n_per: 100,
        profile: DensityProfile::Uniform,
        jitter: 0.02,
    }
}

/// Three concentric rings with sizes proportional to radius.
pub fn annuli_spec() -> GeneratorSpec {
    GeneratorSpec::Annuli {
        radii: vec![1.0, 2.0, 3.0],
        width: 0.2,
        counts: vec![60, 120, 180],
    }
}

impl EpsSweepParams {
    pub fn with_grid(eps: Vec<f64>, q: usize, seed: u64) -> Self {
        Self {
            eps,
            q,
            m_prime: 30,
            laplace: LaplaceParams::default(),
            method: LabelMethod::Circle,
            normalization: Normalization::Approach1,
            seed,
        }
    }
}
