//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use qtclust::{build_graph, datagen, EigenSystem, PointSet, Proximity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected Gaussian graph on `m` uniform points in the unit square.
pub fn random_hamiltonian(m: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..m).map(|_| vec![r.random::<f64>(), r.random::<f64>()]).collect();
    let pts = PointSet::from_rows(&rows, None).unwrap();
    let eps = 0.05 + 0.3 * r.random::<f64>();
    build_graph(&pts, Proximity::Quantile(eps)).unwrap().hamiltonian
}

/// `(s + iH)^{-1} e_j` by dense complex LU.
pub fn direct_resolvent_column(h: &DMatrix<f64>, s: f64, j: usize) -> DVector<Complex<f64>> {
    let m = h.nrows();
    let a = DMatrix::from_fn(m, m, |r, c| {
        Complex::new(if r == c { s } else { 0.0 }, h[(r, c)])
    });
    let mut e = DVector::from_element(m, Complex::new(0.0, 0.0));
    e[j] = Complex::new(1.0, 0.0);
    a.lu().solve(&e).expect("s + iH is invertible for s > 0")
}

/// Is `b` a relabelling of `a`? Tries every permutation of `0..q`.
pub fn equivalent_by_permutation(a: &[usize], b: &[usize], q: usize) -> bool {
    fn search(a: &[usize], b: &[usize], perm: &mut Vec<usize>, used: &mut Vec<bool>, q: usize) -> bool {
        if perm.len() == q {
            return a.iter().zip(b).all(|(&x, &y)| perm[x] == y);
        }
        for v in 0..q {
            if !used[v] {
                used[v] = true;
                perm.push(v);
                if search(a, b, perm, used, q) {
                    return true;
                }
                perm.pop();
                used[v] = false;
            }
        }
        false
    }
    search(a, b, &mut Vec::new(), &mut vec![false; q], q)
}

/// Co-clustering frequency by explicit triple loop.
pub fn consensus_triple_loop(cols: &[Vec<usize>]) -> DMatrix<f64> {
    let m = cols[0].len();
    let mut c = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut n = 0u32;
            for col in cols {
                if col[i] == col[j] {
                    n += 1;
                }
            }
            c[(i, j)] = n as f64 / cols.len() as f64;
        }
    }
    c
}

/// Time average of `|<i| exp(-iHt) |j>|^2` over `[0, T]` by stratified sampling.
pub fn time_averaged_transition(eig: &EigenSystem, t_max: f64, samples: usize, seed: u64) -> DMatrix<f64> {
    let m = eig.len();
    let mut r = rng(seed);
    let mut acc = DMatrix::zeros(m, m);
    let h = t_max / samples as f64;
    for k in 0..samples {
        let t = (k as f64 + r.random::<f64>()) * h;
        let phase: Vec<Complex<f64>> = eig.energies.iter().map(|&e| Complex::new(0.0, -e * t).exp()).collect();
        for i in 0..m {
            for j in i..m {
                let mut u = Complex::new(0.0, 0.0);
                for (n, ph) in phase.iter().enumerate() {
                    u += ph * (eig.mode(n, i) * eig.mode(n, j));
                }
                let p = u.norm_sqr();
                acc[(i, j)] += p;
                if i != j {
                    acc[(j, i)] += p;
                }
            }
        }
    }
    acc / samples as f64
}

/// Von Neumann entropy from a full eigendecomposition of a density matrix.
pub fn von_neumann_entropy(rho: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(rho.clone())
        .eigenvalues
        .iter()
        .filter(|&&l| l > 1e-300)
        .map(|&l| -l * l.ln())
        .sum()
}

/// Time-averaged density operator of a walk started at `i`, in the node basis,
/// for a nondegenerate spectrum.
pub fn averaged_density(eig: &EigenSystem, i: usize) -> DMatrix<f64> {
    let m = eig.len();
    let mut rho = DMatrix::zeros(m, m);
    for n in 0..m {
        let col = eig.modes.column(n);
        rho += (col * col.transpose()) * eig.mode(n, i).powi(2);
    }
    rho
}

/// Contingency-table-free ARI: pair counting over all `i < j`.
pub fn ari_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut in_a, mut in_b) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            if sa && sb {
                both += 1.0;
            }
            if sa {
                in_a += 1.0;
            }
            if sb {
                in_b += 1.0;
            }
        }
    }
    let total = (n * (n - 1) / 2) as f64;
    let expected = in_a * in_b / total;
    (both - expected) / (0.5 * (in_a + in_b) - expected)
}

/// Connected components of the graph with edges where `A_ij > threshold`.
pub fn components(a: &DMatrix<f64>, threshold: f64) -> Vec<usize> {
    let m = a.nrows();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for i in 0..m {
        for j in i + 1..m {
            if a[(i, j)] > threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    (0..m).map(|i| find(&mut parent, i)).collect()
}

pub fn three_clouds(seed: u64) -> PointSet {
    datagen::gen_gaussian_clouds(
        &[vec![0.0, 0.0], vec![0.6, 0.0], vec![0.3, 0.52]],
        0.08,
        40,
        seed,
    )
    .unwrap()
}
