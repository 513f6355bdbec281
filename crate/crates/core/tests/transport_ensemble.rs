mod common;

use proptest::prelude::*;
use qtclust::ensemble::{consensus_matrix, majority_partition, partitions_equivalent, run_qtc, LabelMatrix};
use qtclust::{build_graph, eigendecompose, gap_stats, laplace_wavefunction, select_s, LabelMethod, LabelVector, LaplaceParams, Proximity};
use rand::Rng;

#[test]
fn wavefunction_matches_linear_solve() {
    for seed in 0..5 {
        let h = common::random_hamiltonian(50, seed);
        let eig = eigendecompose(&h).unwrap();
        for (j, s) in [(0, 1e-3), (17, 0.05), (49, 2.0)] {
            let field = laplace_wavefunction(&eig, j, s).unwrap();
            let direct = common::direct_resolvent_column(&h, s, j);
            let scale = direct.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for (a, b) in field.amplitudes.iter().zip(direct.iter()) {
                assert!((a - b).norm() < 1e-9 * scale);
            }
        }
    }
}

#[test]
fn phases_are_principal_args() {
    let eig = eigendecompose(&common::random_hamiltonian(30, 9)).unwrap();
    let field = laplace_wavefunction(&eig, 3, 0.1).unwrap();
    for (p, a) in field.phases.iter().zip(&field.amplitudes) {
        assert!(*p > -std::f64::consts::PI && *p <= std::f64::consts::PI);
        assert!((p - a.im.atan2(a.re)).abs() < 1e-15 || a.norm() == 0.0);
    }
}

fn random_columns(m: usize, q: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    // a few base partitions, each repeated under random relabelings
    let mut r = common::rng(seed);
    let bases: Vec<Vec<usize>> = (0..3).map(|_| (0..m).map(|i| if i < q { i } else { r.random_range(0..q) }).collect()).collect();
    (0..k)
        .map(|_| {
            let base = &bases[r.random_range(0..bases.len())];
            let mut perm: Vec<usize> = (0..q).collect();
            for i in (1..q).rev() {
                perm.swap(i, r.random_range(0..=i));
            }
            base.iter().map(|&l| perm[l]).collect()
        })
        .collect()
}

#[test]
fn majority_matches_pairwise_grouping() {
    for seed in 0..20 {
        let cols = random_columns(12, 3, 15, seed);
        let omega = LabelMatrix::new(cols.iter().cloned().map(LabelVector).collect(), (0..15).collect()).unwrap();
        let (winner, tally) = majority_partition(&omega, 3).unwrap();

        // O(k^2) grouping by brute-force relabel search
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (k, c) in cols.iter().enumerate() {
            match groups.iter_mut().find(|g| common::equivalent_by_permutation(&cols[g[0]], c, 3)) {
                Some(g) => g.push(k),
                None => groups.push(vec![k]),
            }
        }
        assert_eq!(groups.len(), tally.classes.len());
        for g in &groups {
            assert_eq!(tally.classes.get(&g[0]), Some(g));
        }
        let best = groups.iter().max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0]))).unwrap();
        assert!(common::equivalent_by_permutation(winner.as_slice(), &cols[best[0]], 3));
        let total: f64 = tally.weights.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn consensus_matches_triple_loop() {
    let cols = random_columns(15, 4, 9, 4);
    let omega = LabelMatrix::new(cols.iter().cloned().map(LabelVector).collect(), (0..9).collect()).unwrap();
    let c = consensus_matrix(&omega).0;
    assert!((c - common::consensus_triple_loop(&cols)).amax() < 1e-15);
}

#[test]
fn three_clouds_columns_mostly_agree_with_truth() {
    let pts = common::three_clouds(5);
    let truth = pts.truth().unwrap().to_vec();
    let g = build_graph(&pts, Proximity::Quantile(0.2)).unwrap();
    let eig = eigendecompose(&g.hamiltonian).unwrap();
    let s = select_s(&gap_stats(&eig, 3).unwrap(), &LaplaceParams::default()).unwrap();
    let omega = run_qtc(&eig, s, 3, 50, 11, LabelMethod::Circle).unwrap();
    let good = omega
        .columns
        .iter()
        .filter(|c| partitions_equivalent(c.as_slice(), &truth, 3).unwrap())
        .count();
    assert!(good as f64 >= 0.9 * 50.0, "{good} of 50");
    let (winner, _) = majority_partition(&omega, 3).unwrap();
    assert!(partitions_equivalent(winner.as_slice(), &truth, 3).unwrap());
}

#[test]
fn qtc_is_deterministic() {
    let eig = eigendecompose(&common::random_hamiltonian(40, 2)).unwrap();
    let a = run_qtc(&eig, 0.05, 2, 10, 8, LabelMethod::Circle).unwrap();
    let b = run_qtc(&eig, 0.05, 2, 10, 8, LabelMethod::Circle).unwrap();
    assert_eq!(a.columns, b.columns);
    assert_eq!(a.init_nodes, b.init_nodes);
}

fn labels(m: usize, q: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..q, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn equivalence_agrees_with_brute_force(a in labels(10, 3), b in labels(10, 3)) {
        prop_assert_eq!(partitions_equivalent(&a, &b, 3).unwrap(), common::equivalent_by_permutation(&a, &b, 3));
    }

    #[test]
    fn equivalence_is_reflexive_and_symmetric(a in labels(12, 4), b in labels(12, 4)) {
        prop_assert!(partitions_equivalent(&a, &a, 4).unwrap());
        prop_assert_eq!(partitions_equivalent(&a, &b, 4).unwrap(), partitions_equivalent(&b, &a, 4).unwrap());
    }

    #[test]
    fn equivalence_is_transitive(a in labels(8, 2), b in labels(8, 2), c in labels(8, 2)) {
        let ab = partitions_equivalent(&a, &b, 2).unwrap();
        let bc = partitions_equivalent(&b, &c, 2).unwrap();
        if ab && bc {
            prop_assert!(partitions_equivalent(&a, &c, 2).unwrap());
        }
    }

    #[test]
    fn consensus_ignores_relabeling(seed in 0u64..1000) {
        let cols = random_columns(10, 3, 6, seed);
        let mut r = common::rng(seed + 1);
        let relabeled: Vec<Vec<usize>> = cols.iter().map(|c| {
            let shift = r.random_range(0..3);
            c.iter().map(|&l| (l + shift) % 3).collect()
        }).collect();
        let mk = |cs: &Vec<Vec<usize>>| LabelMatrix::new(cs.iter().cloned().map(LabelVector).collect(), (0..6).collect()).unwrap();
        prop_assert_eq!(consensus_matrix(&mk(&cols)).0, consensus_matrix(&mk(&relabeled)).0);
    }
}
