//! Many-initializer QTC runs and their summaries: majority partition and
//! consensus (co-clustering frequency) matrix.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QtcError, Result};
use crate::labeling::{canonical_labels, label_phases, LabelMethod, LabelVector};
use crate::spectral::EigenSystem;
use crate::transport::laplace_wavefunction;

/// Two `sqrt(p)` combinations closer than this count as the same value.
pub const XI_TOL: f64 = 1e-6;

/// Label matrix `Omega`: column `k` labels every node from initializer `init_nodes[k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelMatrix {
    pub columns: Vec<LabelVector>,
    pub init_nodes: Vec<usize>,
}

impl LabelMatrix {
    pub fn new(columns: Vec<LabelVector>, init_nodes: Vec<usize>) -> Result<Self> {
        if columns.is_empty() || columns.len() != init_nodes.len() {
            return Err(QtcError::Input("need one initializer per column and >= 1 column".into()));
        }
        let m = columns[0].len();
        if columns.iter().any(|c| c.len() != m) {
            return Err(QtcError::Input("label columns differ in length".into()));
        }
        Ok(Self { columns, init_nodes })
    }

    pub fn nodes(&self) -> usize {
        self.columns[0].len()
    }

    pub fn m_prime(&self) -> usize {
        self.columns.len()
    }

    /// `Omega_{ik}`.
    pub fn get(&self, i: usize, k: usize) -> usize {
        self.columns[k].0[i]
    }

    pub fn to_matrix(&self) -> DMatrix<usize> {
        DMatrix::from_fn(self.nodes(), self.m_prime(), |i, k| self.get(i, k))
    }
}

/// Equivalence classes of columns, keyed by their lowest column index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionTally {
    pub classes: BTreeMap<usize, Vec<usize>>,
    pub weights: BTreeMap<usize, f64>,
}

impl PartitionTally {
    /// Representative and weight of the heaviest class; ties go to the lowest representative.
    pub fn winner(&self) -> (usize, f64) {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for (&rep, &w) in &self.weights {
            if w > best.1 {
                best = (rep, w);
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusMatrix(pub DMatrix<f64>);

fn check_m_prime(m: usize, m_prime: usize) -> Result<()> {
    if m_prime < 1 || m_prime > m {
        return Err(QtcError::Parameter(format!(
            "need 1 <= m' <= m, got m'={m_prime}, m={m}"
        )));
    }
    Ok(())
}

/// Default ensemble size.
pub fn default_m_prime(m: usize) -> usize {
    m.min(100)
}

/// Per-column k-means seed, decorrelated from the run seed.
fn column_seed(seed: u64, k: usize) -> u64 {
    let mut z = seed ^ (k as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `m_prime` distinct initialization nodes.
pub fn sample_init_nodes(m: usize, m_prime: usize, seed: u64) -> Result<Vec<usize>> {
    check_m_prime(m, m_prime)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, m, m_prime).into_vec())
}

/// QTC from the given initialization nodes.
pub fn run_qtc_from(
    eig: &EigenSystem,
    s: f64,
    q: usize,
    init_nodes: &[usize],
    seed: u64,
    method: LabelMethod,
) -> Result<LabelMatrix> {
    let columns = init_nodes
        .par_iter()
        .enumerate()
        .map(|(k, &node)| {
            let field = laplace_wavefunction(eig, node, s)?;
            label_phases(&field.phases, q, method, column_seed(seed, k))
        })
        .collect::<Result<Vec<_>>>()?;
    LabelMatrix::new(columns, init_nodes.to_vec())
}

/// QTC from `m_prime` randomly chosen initialization nodes.
pub fn run_qtc(
    eig: &EigenSystem,
    s: f64,
    q: usize,
    m_prime: usize,
    seed: u64,
    method: LabelMethod,
) -> Result<LabelMatrix> {
    let init = sample_init_nodes(eig.len(), m_prime, seed)?;
    run_qtc_from(eig, s, q, &init, seed, method)
}

/// First `n` primes.
pub fn primes(n: usize) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(n);
    let mut c = 2u64;
    while out.len() < n {
        if out.iter().take_while(|&&p| p * p <= c).all(|&p| !c.is_multiple_of(p)) {
            out.push(c);
        }
        c += 1;
    }
    out
}

fn distinct_sorted(mut values: Vec<f64>) -> usize {
    values.sort_by(f64::total_cmp);
    if values.is_empty() {
        return 0;
    }
    1 + values.windows(2).filter(|w| w[1] - w[0] > XI_TOL).count()
}

fn distinct_labels(col: &[usize]) -> usize {
    let mut v = col.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Same partition up to renaming labels?
///
/// Decided by exact first-occurrence relabelling and cross-checked with the
/// irrational-weight test `xi_i = a_i sqrt(2) + b_i sqrt(3)`: the columns
/// agree iff `xi` has as many distinct values as each column has labels.
pub fn partitions_equivalent(a: &[usize], b: &[usize], q: usize) -> Result<bool> {
    if a.len() != b.len() {
        return Err(QtcError::Input("label columns differ in length".into()));
    }
    if a.iter().chain(b).any(|&l| l >= q) {
        return Err(QtcError::Input(format!("label out of range for q={q}")));
    }
    let exact = canonical_labels(a) == canonical_labels(b);
    let (r2, r3) = (2f64.sqrt(), 3f64.sqrt());
    let xi: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| x as f64 * r2 + y as f64 * r3)
        .collect();
    let nx = distinct_sorted(xi);
    let by_xi = nx == distinct_labels(a) && nx == distinct_labels(b);
    if exact != by_xi {
        return Err(QtcError::Consistency(format!(
            "relabelling says {exact}, sqrt-prime test says {by_xi}"
        )));
    }
    Ok(exact)
}

/// Column classes, each a sorted list of column indices.
type Classes = Vec<Vec<usize>>;

fn merge_classes(omega: &LabelMatrix, q: usize, left: Classes, right: Classes) -> Result<Classes> {
    let mut merged = left;
    for class in right {
        let rep = class[0];
        let mut home = None;
        for (idx, existing) in merged.iter().enumerate() {
            if partitions_equivalent(
                omega.columns[existing[0]].as_slice(),
                omega.columns[rep].as_slice(),
                q,
            )? {
                home = Some(idx);
                break;
            }
        }
        match home {
            Some(idx) => merged[idx].extend(class),
            None => merged.push(class),
        }
    }
    Ok(merged)
}

fn split_and_merge(omega: &LabelMatrix, q: usize, cols: &[usize]) -> Result<Classes> {
    if cols.len() == 1 {
        return Ok(vec![vec![cols[0]]]);
    }
    let (l, r) = cols.split_at(cols.len() / 2);
    let left = split_and_merge(omega, q, l)?;
    let right = split_and_merge(omega, q, r)?;
    merge_classes(omega, q, left, right)
}

/// Groups equivalent columns and returns the canonical labels of the heaviest class.
pub fn majority_partition(omega: &LabelMatrix, q: usize) -> Result<(LabelVector, PartitionTally)> {
    let cols: Vec<usize> = (0..omega.m_prime()).collect();
    let total = omega.m_prime() as f64;
    let mut classes = BTreeMap::new();
    let mut weights = BTreeMap::new();
    for mut class in split_and_merge(omega, q, &cols)? {
        class.sort_unstable();
        weights.insert(class[0], class.len() as f64 / total);
        classes.insert(class[0], class);
    }
    let tally = PartitionTally { classes, weights };
    let (rep, _) = tally.winner();
    Ok((omega.columns[rep].canonical(), tally))
}

/// `C_ij` = fraction of columns that give `i` and `j` the same label.
pub fn consensus_matrix(omega: &LabelMatrix) -> ConsensusMatrix {
    let m = omega.nodes();
    let mut counts = DMatrix::<u32>::zeros(m, m);
    for col in &omega.columns {
        let l = col.as_slice();
        for i in 0..m {
            for j in i..m {
                if l[i] == l[j] {
                    counts[(i, j)] += 1;
                }
            }
        }
    }
    let total = omega.m_prime() as f64;
    let mut c = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = counts[(i, j)] as f64 / total;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    ConsensusMatrix(c)
}
