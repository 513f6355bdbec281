//! Fixtures shared by the benchmarks.

use qtclust::datagen::gen_gaussian_clouds;
use qtclust::{build_graph, eigendecompose, EigenSystem, GraphBundle, Proximity};

/// Three planar Gaussian clouds with `n_per` points each, at eps = 0.2.
pub fn three_cloud_graph(n_per: usize) -> GraphBundle {
    let pts = gen_gaussian_clouds(&[vec![0.0, 0.0], vec![0.6, 0.0], vec![0.3, 0.52]], 0.08, n_per, 7)
        .expect("valid generator parameters");
    build_graph(&pts, Proximity::Quantile(0.2)).expect("connected graph")
}

pub fn three_cloud_spectrum(n_per: usize) -> EigenSystem {
    eigendecompose(&three_cloud_graph(n_per).hamiltonian).expect("symmetric Hamiltonian")
}
