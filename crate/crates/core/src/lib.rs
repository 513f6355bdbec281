//! Quantum transport clustering.
//!
//! Points become a Gaussian similarity network whose normalized Laplacian acts
//! as a Hamiltonian. Wave packets started at single nodes are Laplace
//! transformed; their phases are nearly constant within a cluster, so each
//! initializer yields a partition, and many initializers are combined by
//! majority vote or into a consensus matrix.
//!
//! ```
//! use qtclust::{build_graph, eigendecompose, datagen, Proximity};
//!
//! let pts = datagen::gen_two_clouds(0.3, 0.1, 20, 1).unwrap();
//! let graph = build_graph(&pts, Proximity::Quantile(0.1)).unwrap();
//! let eig = eigendecompose(&graph.hamiltonian).unwrap();
//! assert_eq!(eig.energies[0], 0.0);
//! ```

pub mod datagen;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod kernels;
pub mod labeling;
pub mod pipeline;
pub mod spectral;
pub mod theory;
pub mod transport;

pub use ensemble::{
    consensus_matrix, majority_partition, partitions_equivalent, run_qtc, ConsensusMatrix,
    LabelMatrix, PartitionTally,
};
pub use error::{QtcError, Result};
pub use graph::{build_graph, pairwise_distances, DistanceMatrix, GraphBundle, PointSet, Proximity};
pub use kernels::{EmbeddingMatrix, KernelKind, KernelMatrix, Normalization};
pub use labeling::{LabelMethod, LabelVector};
pub use spectral::{eigendecompose, gap_stats, EigenSystem, GapReport};
pub use theory::{ClusterOrbitals, EnergyShift, TightBinding};
pub use transport::{laplace_wavefunction, select_s, LaplaceParams, SRule, WavePhaseField};
