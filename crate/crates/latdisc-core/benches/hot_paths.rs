//! Microbenchmarks for the expensive kernels: the breakpoint sweep that
//! every norm estimate repeats per sample, the two Fourier-transform
//! evaluation paths, and the boundary-series evaluation the main term
//! rebuilds per translation. Grids mirror the scales the experiments use.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use latdisc_core::asymptotics::a_series;
use latdisc_core::body::{disk, gen_ellipse};
use latdisc_core::lattice::{count_points, lp_norm, sweep_profile};
use latdisc_core::spectral::{chi_hat_2d, chi_hat_slice};

fn bench_counting(c: &mut Criterion) {
    let round = disk();
    let flat = gen_ellipse(4.0).unwrap();
    let mut group = c.benchmark_group("count_points");
    for r in [64.0, 256.0, 1024.0] {
        group.bench_with_input(BenchmarkId::new("disk", r), &r, |b, &r| {
            b.iter(|| count_points(black_box(&round), black_box(r), [0.3, 0.4]).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gen_ellipse4", r), &r, |b, &r| {
            b.iter(|| count_points(black_box(&flat), black_box(r), [0.3, 0.4]).unwrap())
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let flat = gen_ellipse(4.0).unwrap();
    let mut group = c.benchmark_group("sweep_profile");
    for r in [256.0, 1024.0, 4096.0] {
        group.bench_with_input(BenchmarkId::from_parameter(r), &r, |b, &r| {
            b.iter(|| sweep_profile(black_box(&flat), black_box(r), 0.37).unwrap())
        });
    }
    group.finish();
}

fn bench_transform(c: &mut Criterion) {
    let flat = gen_ellipse(4.0).unwrap();
    let mut group = c.benchmark_group("chi_hat");
    for s in [8.0, 64.0, 512.0] {
        // Generic direction: oscillatory boundary integral.
        group.bench_with_input(BenchmarkId::new("boundary_integral", s), &s, |b, &s| {
            let zeta = [s / 2f64.sqrt(), s / 2f64.sqrt()];
            b.iter(|| chi_hat_2d(black_box(&flat), black_box(zeta)).unwrap())
        });
        // Flat-normal direction: 1-D slice transform.
        group.bench_with_input(BenchmarkId::new("slice", s), &s, |b, &s| {
            b.iter(|| chi_hat_slice(black_box(&flat), black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn bench_series_and_norm(c: &mut Criterion) {
    c.bench_function("a_series_quarter", |b| {
        b.iter(|| a_series(black_box(0.25), black_box(0.37), 1e-10).unwrap())
    });
    let round = disk();
    c.bench_function("lp_norm_disk_r64_m64", |b| {
        b.iter(|| lp_norm(black_box(&round), 64.0, 2.0, 64, 7, None).unwrap())
    });
}

criterion_group!(
    benches,
    bench_counting,
    bench_sweep,
    bench_transform,
    bench_series_and_norm
);
criterion_main!(benches);
