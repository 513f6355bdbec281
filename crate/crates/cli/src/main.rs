mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qtclust::kernels::Normalization;
use qtclust::pipeline::Summary;
use qtclust::{LabelMethod, QtcError, SRule};

#[derive(Parser, Debug)]
#[command(name = "qtclust", version, about = "Quantum transport clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// RNG seed; each command has its own default.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (for `gen`, a `.csv` path is also accepted).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Proximity quantile in (0, 1).
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Number of clusters.
    #[arg(long, global = true)]
    pub q: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = SRuleArg::AvgGap)]
    pub s_rule: SRuleArg,
    /// Multiplier on the chosen gap, or `s` itself with `--s-rule explicit`.
    #[arg(long, global = true, default_value_t = 1.2)]
    pub s_mult: f64,
    /// Ensemble size; defaults to min(m, 100).
    #[arg(long, global = true)]
    pub m_prime: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = LabelMethodArg::Circle)]
    pub label_method: LabelMethodArg,
    #[arg(long, global = true, value_enum, default_value_t = SummaryArg::Both)]
    pub summary: SummaryArg,
}

/// Where the network comes from.
#[derive(Args, Debug, Clone)]
#[group(required = false, multiple = false)]
pub struct InputArgs {
    /// Points CSV (`x0,..,x{d-1}[,label]`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Affinity matrix CSV used instead of the Gaussian adjacency.
    #[arg(long)]
    pub affinity: Option<PathBuf>,
    /// A `run.json` from an earlier run; replays it exactly.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic point set.
    Gen(GenArgs),
    /// Spectrum and gap statistics of the network Hamiltonian.
    Eigen(InputArgs),
    /// Laplace-transformed wave function and phases from one initial node.
    Phases {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        init_node: usize,
    },
    /// Ensemble QTC clustering.
    Cluster(InputArgs),
    /// k-means on the spectral embedding.
    Spectral {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = NormalizationArg::Approach1)]
        normalization: NormalizationArg,
    },
    /// Node-by-node kernel matrix.
    Kernel {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum)]
        kind: KernelArg,
    },
    /// Co-clustering frequency matrix of the QTC ensemble.
    Consensus(InputArgs),
    /// Reproduce one of the built-in experiments.
    Experiment {
        #[arg(value_enum)]
        name: ExperimentArg,
        /// JSON file with the experiment parameters (defaults otherwise).
        #[arg(long)]
        params: Option<PathBuf>,
        /// eps-sweep dataset.
        #[arg(long, value_enum, default_value_t = DatasetArg::NonuniformSticks)]
        dataset: DatasetArg,
    },
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    /// Full generator spec as JSON; overrides `--kind` defaults.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n_per: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    /// Three Gaussian clouds in the plane.
    Clouds,
    /// Two Gaussian clouds at +-0.3 with sigma 0.1.
    TwoCloud,
    UniformSticks,
    NonuniformSticks,
    Annuli,
    /// Clouds at `q` vertices of a regular tetrahedron.
    Tetrahedron,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SRuleArg {
    FirstGap,
    AvgGap,
    Explicit,
}

impl From<SRuleArg> for SRule {
    fn from(r: SRuleArg) -> Self {
        match r {
            SRuleArg::FirstGap => SRule::FirstGap,
            SRuleArg::AvgGap => SRule::AvgGap,
            SRuleArg::Explicit => SRule::Explicit,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMethodArg {
    Diff,
    Circle,
}

impl From<LabelMethodArg> for LabelMethod {
    fn from(m: LabelMethodArg) -> Self {
        match m {
            LabelMethodArg::Diff => LabelMethod::Diff,
            LabelMethodArg::Circle => LabelMethod::Circle,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryArg {
    Majority,
    Consensus,
    Both,
}

impl From<SummaryArg> for Summary {
    fn from(s: SummaryArg) -> Self {
        match s {
            SummaryArg::Majority => Summary::Majority,
            SummaryArg::Consensus => Summary::Consensus,
            SummaryArg::Both => Summary::Both,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationArg {
    None,
    Approach1,
    Approach2,
}

impl From<NormalizationArg> for Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::None => Normalization::None,
            NormalizationArg::Approach1 => Normalization::Approach1,
            NormalizationArg::Approach2 => Normalization::Approach2,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelArg {
    #[value(name = "P", alias = "p")]
    P,
    #[value(name = "S", alias = "s")]
    S,
    #[value(name = "jsd", alias = "JSD")]
    Jsd,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentArg {
    TwoCloud,
    OutlierSweep,
    SpectrumCount,
    EpsSweep,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetArg {
    NonuniformSticks,
    UniformSticks,
    Annuli,
}

/// Parameter, input and I/O problems exit with 2; numerical ones with 3.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<QtcError>() {
        Some(e) if e.is_numeric() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_class() {
        let e = |err: QtcError| exit_code(&anyhow::Error::from(err));
        assert_eq!(e(QtcError::Parameter("x".into())), 2);
        assert_eq!(e(QtcError::Io("x".into())), 2);
        assert_eq!(e(QtcError::Degenerate("x".into())), 2);
        assert_eq!(e(QtcError::Numeric("x".into())), 3);
        assert_eq!(e(QtcError::Consistency("x".into())), 3);
        assert_eq!(exit_code(&anyhow::Error::from(QtcError::Numeric("x".into())).context("while running")), 3);
    }
}
