//! Benchmarks for the hot paths: exact minor enumeration, the boundary-map
//! dynamic program, the small-matrix SVD, and tree plumbing.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use phyloalg_core::dataset::BoundaryDistribution;
use phyloalg_core::flatten::flatten;
use phyloalg_core::invariants::minor_norms;
use phyloalg_core::markov::{boundary_map, TreeMarkovModel};
use phyloalg_core::rational::{rat, Rat};
use phyloalg_core::spectral::singular_values;
use phyloalg_core::tree::{enumerate_unrooted_binary, EdgeSplit, PhyloTree};
use std::collections::BTreeMap;
use std::hint::black_box;

fn seven_leaf_model() -> TreeMarkovModel {
    let tree = PhyloTree::parse_newick("((a,(b,c)),((d,e),(f,g)))").unwrap();
    let edges: BTreeMap<String, Rat> = tree
        .clade_keys()
        .into_iter()
        .enumerate()
        .map(|(i, (clade, _))| (clade, rat(1 + i as i64 % 5, 11)))
        .collect();
    TreeMarkovModel::new(tree, rat(2, 5), &edges).unwrap()
}

fn dense_distribution() -> BoundaryDistribution {
    boundary_map(&seven_leaf_model()).unwrap()
}

fn bench_minor_norms(c: &mut Criterion) {
    let dist = dense_distribution();
    let split = EdgeSplit::from_indices(&[0, 1, 2], 7);
    let matrix = flatten(&dist, &split).unwrap().matrix;
    c.bench_function("minor_norms_8x16", |b| {
        b.iter(|| black_box(minor_norms(black_box(&matrix))))
    });
}

fn bench_boundary_map(c: &mut Criterion) {
    let model = seven_leaf_model();
    c.bench_function("boundary_map_7_leaves", |b| {
        b.iter(|| black_box(boundary_map(black_box(&model)).unwrap()))
    });
}

fn bench_svd(c: &mut Criterion) {
    let dist = dense_distribution();
    let split = EdgeSplit::from_indices(&[0, 1, 2], 7);
    let matrix = flatten(&dist, &split).unwrap().matrix.to_f64();
    c.bench_function("jacobi_svd_8x16", |b| {
        b.iter_batched(
            || matrix.clone(),
            |m| black_box(singular_values(&m).unwrap()),
            BatchSize::SmallInput,
        )
    });
}

fn bench_newick(c: &mut Criterion) {
    let text = "((a,(b,c)),((d,e),((f,g),(h,(i,j)))))";
    c.bench_function("newick_parse_write", |b| {
        b.iter(|| {
            let tree = PhyloTree::parse_newick(black_box(text)).unwrap();
            black_box(tree.write_newick())
        })
    });
}

fn bench_enumerate(c: &mut Criterion) {
    let leaves: Vec<String> = (0..7).map(|i| format!("l{i}")).collect();
    c.bench_function("enumerate_7_leaves", |b| {
        b.iter(|| black_box(enumerate_unrooted_binary(black_box(&leaves)).unwrap().len()))
    });
}

criterion_group!(
    benches,
    bench_minor_norms,
    bench_boundary_map,
    bench_svd,
    bench_newick,
    bench_enumerate
);
criterion_main!(benches);
