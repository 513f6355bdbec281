use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qtclust::ensemble::{majority_partition, run_qtc};
use qtclust::kernels::{jsd_matrix, transition_kernel_p};
use qtclust::{eigendecompose, gap_stats, laplace_wavefunction, select_s, LabelMethod, LaplaceParams};
use qtclust_bench::{three_cloud_graph, three_cloud_spectrum};
use std::hint::black_box;

fn spectrum(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigendecompose");
    g.sample_size(10);
    for n_per in [50, 100, 200] {
        let h = three_cloud_graph(n_per).hamiltonian;
        g.bench_with_input(BenchmarkId::from_parameter(3 * n_per), &h, |b, h| {
            b.iter(|| eigendecompose(black_box(h)).unwrap())
        });
    }
    g.finish();
}

fn transport(c: &mut Criterion) {
    let eig = three_cloud_spectrum(100);
    let s = select_s(&gap_stats(&eig, 3).unwrap(), &LaplaceParams::default()).unwrap();
    c.bench_function("laplace_wavefunction/300", |b| {
        b.iter(|| laplace_wavefunction(&eig, black_box(17), s).unwrap())
    });
    let mut g = c.benchmark_group("qtc_ensemble");
    g.sample_size(10);
    for m_prime in [10, 50, 100] {
        g.bench_with_input(BenchmarkId::from_parameter(m_prime), &m_prime, |b, &m| {
            b.iter(|| {
                let omega = run_qtc(&eig, s, 3, m, 1, LabelMethod::Circle).unwrap();
                majority_partition(&omega, 3).unwrap()
            })
        });
    }
    g.finish();
}

fn kernels(c: &mut Criterion) {
    let eig = three_cloud_spectrum(50);
    let mut g = c.benchmark_group("kernels/150");
    g.sample_size(10);
    g.bench_function("P", |b| b.iter(|| transition_kernel_p(black_box(&eig))));
    g.bench_function("jsd", |b| b.iter(|| jsd_matrix(black_box(&eig))));
    g.finish();
}

criterion_group!(benches, spectrum, transport, kernels);
criterion_main!(benches);
