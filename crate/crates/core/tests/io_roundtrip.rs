use std::fs::File;

use qtclust::datagen::GeneratorSpec;
use qtclust::experiments::{annuli_spec, nonuniform_sticks_spec, uniform_sticks_spec};
use qtclust::io::{read_labels, read_matrix, read_points, write_labels, write_matrix, write_points};
use qtclust::{build_graph, Proximity};

#[test]
fn generated_sets_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let specs = [
        uniform_sticks_spec(),
        nonuniform_sticks_spec(),
        annuli_spec(),
        GeneratorSpec::Tetrahedron { q: 4, sigma: 0.1, n_per: 20 },
        GeneratorSpec::GaussianClouds { centers: vec![vec![1e-9, -3e7]], sigma: 1e-3, n_per: 10 },
    ];
    for (k, spec) in specs.iter().enumerate() {
        let pts = spec.generate(k as u64).unwrap();
        let path = dir.path().join(format!("p{k}.csv"));
        write_points(File::create(&path).unwrap(), &pts).unwrap();
        let back = read_points(File::open(&path).unwrap()).unwrap();
        assert_eq!(back.points(), pts.points(), "{spec:?}");
        assert_eq!(back.truth(), pts.truth());
    }
}

#[test]
fn matrix_and_labels_files() {
    let dir = tempfile::tempdir().unwrap();
    let pts = uniform_sticks_spec().generate(1).unwrap();
    let a = build_graph(&pts, Proximity::Quantile(0.05)).unwrap().adjacency;
    let path = dir.path().join("a.csv");
    write_matrix(File::create(&path).unwrap(), &a).unwrap();
    assert_eq!(read_matrix(File::open(&path).unwrap()).unwrap(), a);

    let labels: Vec<usize> = pts.truth().unwrap().to_vec();
    let path = dir.path().join("l.csv");
    write_labels(File::create(&path).unwrap(), &labels).unwrap();
    assert_eq!(read_labels(File::open(&path).unwrap()).unwrap(), labels);
}
