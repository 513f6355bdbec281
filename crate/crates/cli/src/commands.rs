use std::fs::File;
use std::path::Path;

use anyhow::Result;
use qtclust::datagen::{ari, counts_proportional_to_radius, DensityProfile, GeneratorSpec, StickParams};
use qtclust::experiments::{self, geomspace, EpsSweepParams, OutlierSweepParams, SpectrumCountParams, TwoCloudParams};
use qtclust::kernels::{jsd_matrix, laplace_similarity_s, spectral_cluster, transition_kernel_p, Normalization};
use qtclust::pipeline::{self, build_network, load_input, resolve_s, Dataset, InputSource, RunConfig};
use qtclust::{eigendecompose, io, laplace_wavefunction, EigenSystem, GraphBundle, LaplaceParams, QtcError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::output::{create, ensure_dir, write_csv_rows, write_json};
use crate::{Cli, Command, DatasetArg, ExperimentArg, GenArgs, GenKind, Global, InputArgs, KernelArg};

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Gen(args) => gen(g, args),
        Command::Eigen(input) => eigen(g, input),
        Command::Phases { input, init_node } => phases(g, input, *init_node),
        Command::Cluster(input) => cluster(g, input, None),
        Command::Consensus(input) => cluster(g, input, Some(pipeline::Summary::Consensus)),
        Command::Spectral { input, normalization } => spectral(g, input, (*normalization).into()),
        Command::Kernel { input, kind } => kernel(g, input, *kind),
        Command::Experiment { name, params, dataset } => experiment(g, *name, params.as_deref(), *dataset),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| QtcError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(f)
        .map_err(|e| QtcError::Input(format!("{}: {e}", path.display())).into())
}

/// What `run.json` holds: the resolved configuration plus derived values.
#[derive(Serialize, Deserialize)]
struct RunRecord {
    config: RunConfig,
    #[serde(default)]
    s: Option<f64>,
}

/// Configuration from flags, or from a replayed `run.json` (flags other than `--out` ignored).
fn run_config(g: &Global, input: &InputArgs, default_q: Option<usize>) -> Result<RunConfig> {
    if let Some(path) = &input.config {
        let rec: RunRecord = read_json(path)?;
        return Ok(rec.config);
    }
    let source = match (&input.input, &input.affinity) {
        (Some(p), _) => InputSource::Points { path: p.clone() },
        (None, Some(p)) => InputSource::Affinity { path: p.clone() },
        (None, None) => {
            return Err(QtcError::Parameter("one of --input, --affinity or --config is required".into()).into())
        }
    };
    let q = g
        .q
        .or(default_q)
        .ok_or_else(|| QtcError::Parameter("--q is required".into()))?;
    let config = RunConfig {
        input: source,
        eps: g.eps,
        q,
        laplace: LaplaceParams {
            rule: g.s_rule.into(),
            multiplier: g.s_mult,
        },
        m_prime: g.m_prime,
        label_method: g.label_method.into(),
        summary: g.summary.into(),
        seed: g.seed.unwrap_or(0),
        init_nodes: None,
    };
    config.validate()?;
    Ok(config)
}

fn network(config: &RunConfig) -> Result<(Dataset, GraphBundle, EigenSystem)> {
    let data = load_input(&config.input, config.seed)?;
    let graph = build_network(&data, config.eps)?;
    let eig = eigendecompose(&graph.hamiltonian)?;
    Ok((data, graph, eig))
}

fn write_record(dir: &Path, config: &RunConfig, s: Option<f64>) -> Result<()> {
    write_json(dir, "run.json", &RunRecord { config: config.clone(), s })?;
    Ok(())
}

fn gen(g: &Global, args: &GenArgs) -> Result<()> {
    let seed = g.seed.unwrap_or(0);
    let spec = match &args.spec {
        Some(p) => read_json::<GeneratorSpec>(p)?,
        None => default_spec(args, g.q),
    };
    let points = spec.generate(seed)?;
    let path = if g.out.extension().is_some_and(|e| e == "csv") {
        if let Some(parent) = g.out.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        g.out.clone()
    } else {
        ensure_dir(&g.out)?;
        g.out.join("points.csv")
    };
    io::write_points(create(&path)?, &points)?;
    log::info!("wrote {} points to {}", points.len(), path.display());
    Ok(())
}

fn default_spec(args: &GenArgs, q: Option<usize>) -> GeneratorSpec {
    let sticks = |profile| {
        let d = StickParams::default();
        GeneratorSpec::Sticks {
            n_sticks: d.n_sticks,
            length: d.length,
            gap: d.gap,
            n_per: args.n_per.unwrap_or(d.n_per),
            profile,
            jitter: d.jitter,
        }
    };
    match args.kind {
        GenKind::Clouds => GeneratorSpec::GaussianClouds {
            centers: vec![vec![0.0, 0.0], vec![0.6, 0.0], vec![0.3, 0.52]],
            sigma: args.sigma.unwrap_or(0.08),
            n_per: args.n_per.unwrap_or(30),
        },
        GenKind::TwoCloud => GeneratorSpec::GaussianClouds {
            centers: vec![vec![-0.3, 0.0], vec![0.3, 0.0]],
            sigma: args.sigma.unwrap_or(0.1),
            n_per: args.n_per.unwrap_or(100),
        },
        GenKind::UniformSticks => sticks(DensityProfile::Uniform),
        GenKind::NonuniformSticks => sticks(DensityProfile::Nonuniform),
        GenKind::Annuli => match args.n_per {
            Some(n) => GeneratorSpec::Annuli {
                radii: vec![1.0, 2.0, 3.0],
                width: 0.2,
                counts: counts_proportional_to_radius(&[1.0, 2.0, 3.0], n),
            },
            None => experiments::annuli_spec(),
        },
        GenKind::Tetrahedron => GeneratorSpec::Tetrahedron {
            q: q.unwrap_or(4),
            sigma: args.sigma.unwrap_or(0.1),
            n_per: args.n_per.unwrap_or(100),
        },
    }
}

fn eigen(g: &Global, input: &InputArgs) -> Result<()> {
    let config = run_config(g, input, Some(2))?;
    let (_, graph, eig) = network(&config)?;
    let gaps = if eig.len() >= config.q && config.q >= 2 {
        Some(qtclust::gap_stats(&eig, config.q)?)
    } else {
        None
    };
    ensure_dir(&g.out)?;
    write_json(
        &g.out,
        "eigen.json",
        &json!({
            "energies": eig.energies.as_slice(),
            "low_count": qtclust::spectral::count_low_energy(&eig, qtclust::spectral::DEFAULT_GAP_FACTOR),
            "first_gap": gaps.map(|r| r.first_gap),
            "avg_gap": gaps.map(|r| r.avg_gap),
            "next_ratio": gaps.map(|r| r.next_ratio),
            "q": config.q,
            "r_eps": graph.r_eps,
        }),
    )?;
    Ok(())
}

fn phases(g: &Global, input: &InputArgs, init_node: usize) -> Result<()> {
    let config = run_config(g, input, Some(2))?;
    let (_, _, eig) = network(&config)?;
    let (_, s) = resolve_s(&eig, config.q, &config.laplace)?;
    let field = laplace_wavefunction(&eig, init_node, s)?;
    ensure_dir(&g.out)?;
    io::write_phases(create(&g.out.join("phases.csv"))?, &field.phases, &field.amplitudes)?;
    let mut config = config;
    config.init_nodes = Some(vec![init_node]);
    write_record(&g.out, &config, Some(s))
}

#[derive(Serialize)]
struct ClusterReport {
    q: usize,
    s: f64,
    m_prime: usize,
    method: qtclust::LabelMethod,
    /// Weight of each partition class, keyed by its representative column.
    weights: std::collections::BTreeMap<usize, f64>,
    majority_weight: Option<f64>,
    ari: Option<f64>,
}

fn cluster(g: &Global, input: &InputArgs, force: Option<pipeline::Summary>) -> Result<()> {
    let mut config = run_config(g, input, None)?;
    if let Some(summary) = force {
        config.summary = summary;
    }
    let out = pipeline::run_cluster(&config)?;
    ensure_dir(&g.out)?;
    if let Some(labels) = &out.labels {
        io::write_labels(create(&g.out.join("labels.csv"))?, labels.as_slice())?;
    }
    if let Some(c) = &out.consensus {
        io::write_matrix(create(&g.out.join("consensus.csv"))?, &c.0)?;
    }
    if force.is_none() {
        let report = ClusterReport {
            q: config.q,
            s: out.s,
            m_prime: out.init_nodes.len(),
            method: config.label_method,
            weights: out.tally.as_ref().map(|t| t.weights.clone()).unwrap_or_default(),
            majority_weight: out.tally.as_ref().map(|t| t.winner().1),
            ari: out.ari,
        };
        write_json(&g.out, "report.json", &report)?;
    }
    config.init_nodes = Some(out.init_nodes.clone());
    write_record(&g.out, &config, Some(out.s))
}

fn spectral(g: &Global, input: &InputArgs, normalization: Normalization) -> Result<()> {
    let config = run_config(g, input, None)?;
    let (data, _, eig) = network(&config)?;
    let labels = spectral_cluster(&eig, config.q, config.seed, normalization)?;
    let score = data.truth().map(|t| ari(labels.as_slice(), t)).transpose()?;
    ensure_dir(&g.out)?;
    io::write_labels(create(&g.out.join("labels.csv"))?, labels.as_slice())?;
    write_json(
        &g.out,
        "spectral.json",
        &json!({ "normalization": normalization, "q": config.q, "seed": config.seed, "ari": score }),
    )?;
    Ok(())
}

fn kernel(g: &Global, input: &InputArgs, kind: KernelArg) -> Result<()> {
    let config = run_config(g, input, Some(2))?;
    let (_, _, eig) = network(&config)?;
    let (k, name) = match kind {
        KernelArg::P => (transition_kernel_p(&eig), "kernel_P.csv"),
        KernelArg::S => {
            let (_, s) = resolve_s(&eig, config.q, &config.laplace)?;
            (laplace_similarity_s(&eig, s)?, "kernel_S.csv")
        }
        KernelArg::Jsd => (jsd_matrix(&eig), "kernel_jsd.csv"),
    };
    ensure_dir(&g.out)?;
    io::write_matrix(create(&g.out.join(name))?, &k.k)?;
    Ok(())
}

fn params_or<T: DeserializeOwned>(path: Option<&Path>, default: T) -> Result<T> {
    match path {
        Some(p) => read_json(p),
        None => Ok(default),
    }
}

fn experiment(g: &Global, name: ExperimentArg, params: Option<&Path>, dataset: DatasetArg) -> Result<()> {
    ensure_dir(&g.out)?;
    match name {
        ExperimentArg::TwoCloud => {
            let mut p = TwoCloudParams::default();
            p.seed = g.seed.unwrap_or(p.seed);
            let p: TwoCloudParams = params_or(params, p)?;
            let report = experiments::two_cloud(&p)?;
            write_json(&g.out, "two_cloud.json", &json!({ "params": p, "report": report }))?;
        }
        ExperimentArg::OutlierSweep => {
            let mut p = OutlierSweepParams::default();
            p.seed = g.seed.unwrap_or(p.seed);
            let p: OutlierSweepParams = params_or(params, p)?;
            let rows = experiments::outlier_sweep(&p)?;
            write_csv_rows(&g.out.join("outlier_sweep.csv"), &rows)?;
            let check = experiments::check_interpolation(&rows);
            write_json(&g.out, "outlier_sweep.json", &json!({ "params": p, "check": check }))?;
        }
        ExperimentArg::SpectrumCount => {
            let mut p = SpectrumCountParams::default();
            p.seed = g.seed.unwrap_or(p.seed);
            p.q = g.q.unwrap_or(p.q);
            let p: SpectrumCountParams = params_or(params, p)?;
            let report = experiments::spectrum_count(&p)?;
            write_json(&g.out, "spectrum_count.json", &report)?;
        }
        ExperimentArg::EpsSweep => {
            let (spec, default_grid) = match dataset {
                DatasetArg::NonuniformSticks => (experiments::nonuniform_sticks_spec(), geomspace(0.03, 0.12, 24)),
                DatasetArg::UniformSticks => (experiments::uniform_sticks_spec(), geomspace(0.03, 0.12, 12)),
                DatasetArg::Annuli => (experiments::annuli_spec(), geomspace(0.003, 0.1, 24)),
            };
            let q = match &spec {
                GeneratorSpec::Sticks { n_sticks, .. } => *n_sticks,
                GeneratorSpec::Annuli { radii, .. } => radii.len(),
                _ => unreachable!("sweep datasets are sticks or annuli"),
            };
            let seed = g.seed.unwrap_or(0);
            let mut p = EpsSweepParams::with_grid(default_grid, q, seed);
            if let Some(m) = g.m_prime {
                p.m_prime = m;
            }
            let p: EpsSweepParams = params_or(params, p)?;
            let points = spec.generate(seed)?;
            let rows = experiments::eps_sweep(&points, &p)?;
            write_csv_rows(&g.out.join("eps_sweep.csv"), &rows)?;
            write_json(
                &g.out,
                "eps_sweep.json",
                &json!({ "dataset": spec, "params": p, "qtc_wins": experiments::qtc_wins(&rows) }),
            )?;
        }
    }
    Ok(())
}
