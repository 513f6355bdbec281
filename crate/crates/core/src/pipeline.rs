//! End-to-end clustering run driven by a serializable configuration.

use std::fs::File;
use std::path::PathBuf;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datagen::{ari, GeneratorSpec};
use crate::ensemble::{consensus_matrix, default_m_prime, majority_partition, run_qtc_from, sample_init_nodes};
use crate::error::{QtcError, Result};
use crate::graph::{build_graph, laplacians, GraphBundle, PointSet, Proximity};
use crate::io;
use crate::labeling::{LabelMethod, LabelVector};
use crate::spectral::{eigendecompose, gap_stats, EigenSystem, GapReport};
use crate::transport::{select_s, LaplaceParams};
use crate::{ConsensusMatrix, PartitionTally};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InputSource {
    /// Points CSV.
    Points { path: PathBuf },
    /// Precomputed affinity matrix CSV, used in place of the Gaussian adjacency.
    Affinity { path: PathBuf },
    Generator { spec: GeneratorSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Summary {
    Majority,
    Consensus,
    #[default]
    Both,
}

impl Summary {
    pub fn majority(self) -> bool {
        matches!(self, Summary::Majority | Summary::Both)
    }

    pub fn consensus(self) -> bool {
        matches!(self, Summary::Consensus | Summary::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: InputSource,
    /// Proximity quantile; ignored for affinity input.
    pub eps: Option<f64>,
    pub q: usize,
    pub laplace: LaplaceParams,
    /// Defaults to `min(m, 100)`.
    pub m_prime: Option<usize>,
    pub label_method: LabelMethod,
    pub summary: Summary,
    pub seed: u64,
    /// Replays an earlier run's initializers instead of sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_nodes: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(QtcError::Parameter(format!("eps must lie in (0, 1), got {eps}")));
            }
        } else if !matches!(self.input, InputSource::Affinity { .. }) {
            return Err(QtcError::Parameter("eps is required for point input".into()));
        }
        if self.q < 1 {
            return Err(QtcError::Parameter("q must be >= 1".into()));
        }
        if self.m_prime == Some(0) {
            return Err(QtcError::Parameter("m' must be >= 1".into()));
        }
        Ok(())
    }
}

/// Loaded input: points (possibly with truth) or a bare affinity matrix.
#[derive(Debug, Clone)]
pub enum Dataset {
    Points(PointSet),
    Affinity(DMatrix<f64>),
}

impl Dataset {
    pub fn truth(&self) -> Option<&[usize]> {
        match self {
            Dataset::Points(p) => p.truth(),
            Dataset::Affinity(_) => None,
        }
    }
}

pub fn load_input(source: &InputSource, seed: u64) -> Result<Dataset> {
    let open = |path: &PathBuf| {
        File::open(path).map_err(|e| QtcError::Io(format!("{}: {e}", path.display())))
    };
    Ok(match source {
        InputSource::Points { path } => Dataset::Points(io::read_points(open(path)?)?),
        InputSource::Affinity { path } => Dataset::Affinity(io::read_matrix(open(path)?)?),
        InputSource::Generator { spec } => Dataset::Points(spec.generate(seed)?),
    })
}

pub fn build_network(data: &Dataset, eps: Option<f64>) -> Result<GraphBundle> {
    match data {
        Dataset::Points(p) => {
            let eps = eps.ok_or_else(|| QtcError::Parameter("eps is required for point input".into()))?;
            build_graph(p, Proximity::Quantile(eps))
        }
        Dataset::Affinity(a) => laplacians(a),
    }
}

/// Gap statistics (for `q >= 2`) and the Laplace parameter. With `q = 1` the
/// first gap sets `s` unless it is explicit.
pub fn resolve_s(eig: &EigenSystem, q: usize, laplace: &LaplaceParams) -> Result<(Option<GapReport>, f64)> {
    if q >= 2 {
        let g = gap_stats(eig, q)?;
        let s = select_s(&g, laplace)?;
        return Ok((Some(g), s));
    }
    let s = if laplace.rule == crate::SRule::Explicit {
        select_s(&GapReport::default(), laplace)?
    } else {
        select_s(&gap_stats(eig, 2)?, laplace)?
    };
    Ok((None, s))
}

#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    pub graph: GraphBundle,
    pub eig: EigenSystem,
    pub gaps: Option<GapReport>,
    pub s: f64,
    pub init_nodes: Vec<usize>,
    pub labels: Option<LabelVector>,
    pub tally: Option<PartitionTally>,
    pub consensus: Option<ConsensusMatrix>,
    pub ari: Option<f64>,
}

/// Graph, spectrum, `s`, QTC ensemble and the requested summaries.
pub fn run_cluster(config: &RunConfig) -> Result<ClusterOutcome> {
    config.validate()?;
    let data = load_input(&config.input, config.seed)?;
    let graph = build_network(&data, config.eps)?;
    let eig = eigendecompose(&graph.hamiltonian)?;
    let m = eig.len();
    if config.q > m {
        return Err(QtcError::Parameter(format!("q={} exceeds the number of nodes {m}", config.q)));
    }
    let (gaps, s) = resolve_s(&eig, config.q, &config.laplace)?;
    let init_nodes = match &config.init_nodes {
        Some(nodes) => {
            if nodes.iter().any(|&j| j >= m) {
                return Err(QtcError::Parameter("replayed init node out of range".into()));
            }
            nodes.clone()
        }
        None => sample_init_nodes(m, config.m_prime.unwrap_or_else(|| default_m_prime(m)), config.seed)?,
    };
    let omega = run_qtc_from(&eig, s, config.q, &init_nodes, config.seed, config.label_method)?;
    let (labels, tally) = if config.summary.majority() {
        let (l, t) = majority_partition(&omega, config.q)?;
        (Some(l), Some(t))
    } else {
        (None, None)
    };
    let consensus = config.summary.consensus().then(|| consensus_matrix(&omega));
    let ari = match (&labels, data.truth()) {
        (Some(l), Some(t)) => Some(ari(l.as_slice(), t)?),
        _ => None,
    };
    Ok(ClusterOutcome {
        graph,
        eig,
        gaps,
        s,
        init_nodes,
        labels,
        tally,
        consensus,
        ari,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_clouds() -> RunConfig {
        RunConfig {
            input: InputSource::Generator {
                spec: GeneratorSpec::GaussianClouds {
                    centers: vec![vec![0.0, 0.0], vec![0.6, 0.0], vec![0.3, 0.52]],
                    sigma: 0.08,
                    n_per: 30,
                },
            },
            eps: Some(0.2),
            q: 3,
            laplace: LaplaceParams::default(),
            m_prime: Some(20),
            label_method: LabelMethod::Circle,
            summary: Summary::Both,
            seed: 3,
            init_nodes: None,
        }
    }

    #[test]
    fn three_clouds_recovered() {
        let out = run_cluster(&three_clouds()).unwrap();
        assert_eq!(out.ari, Some(1.0));
        let c = out.consensus.unwrap().0;
        assert_eq!(c[(0, 0)], 1.0);
        assert_eq!(out.init_nodes.len(), 20);
    }

    #[test]
    fn replay_matches() {
        let cfg = three_clouds();
        let a = run_cluster(&cfg).unwrap();
        let mut replay = cfg.clone();
        replay.init_nodes = Some(a.init_nodes.clone());
        let b = run_cluster(&replay).unwrap();
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn validation() {
        let mut cfg = three_clouds();
        cfg.eps = Some(1.5);
        assert!(matches!(run_cluster(&cfg), Err(QtcError::Parameter(_))));
        cfg.eps = None;
        assert!(run_cluster(&cfg).is_err());
        let mut missing = three_clouds();
        missing.input = InputSource::Points { path: "/nonexistent/points.csv".into() };
        assert!(matches!(run_cluster(&missing), Err(QtcError::Io(_))));
    }
}
