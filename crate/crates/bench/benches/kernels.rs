use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splx::numkernel::{polar_factor, svd, sym_eig, DEFAULT_RANK_TOL};
use splx::spectra::{band_alpha, covariance_spectrum, select_window};
use splx::{DenseMatrix, ScaleTier, Spectrum};

criterion_group!(benches, eigen, decompositions, spectra);
criterion_main!(benches);

fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("sym_eig");
    for n in [16, 64, 128] {
        let a = random(n, n, 1);
        let s = a.add(&a.transpose()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| sym_eig(black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn decompositions(c: &mut Criterion) {
    let g = random(96, 48, 2);
    c.bench_function("svd 96x48", |b| b.iter(|| svd(black_box(&g)).unwrap()));
    c.bench_function("polar 96x48", |b| {
        b.iter(|| polar_factor(black_box(&g), DEFAULT_RANK_TOL).unwrap())
    });
}

fn spectra(c: &mut Criterion) {
    let h = random(512, 64, 3);
    c.bench_function("covariance_spectrum 512x64", |b| {
        b.iter(|| covariance_spectrum(black_box(&h)).unwrap())
    });

    let spec = Spectrum::new((1..=1024).map(|j| (j as f64).powf(-1.3)).collect()).unwrap();
    let mut group = c.benchmark_group("band_alpha");
    for tier in ScaleTier::ALL {
        group.bench_function(tier.name(), |b| {
            b.iter(|| band_alpha(black_box(&spec), select_window(tier)).unwrap())
        });
    }
    group.finish();
}
