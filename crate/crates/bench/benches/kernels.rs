use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lrlab_bench::benchmark_stack;
use lrlab_core::synth::{synth_case, OcclusionKind, SynthSpec};
use lrlab_core::{linalg, metrics, solvers, SolverConfig};

fn svd(c: &mut Criterion) {
    let m = benchmark_stack();
    c.bench_function("svd 4096x11", |b| b.iter(|| linalg::svd(black_box(&m)).unwrap()));
    let wide = m.transpose();
    c.bench_function("svd 11x4096", |b| b.iter(|| linalg::svd(black_box(&wide)).unwrap()));
}

fn proximal(c: &mut Criterion) {
    c.bench_function("gst_scalar p=0.5", |b| {
        b.iter(|| linalg::gst_scalar(black_box(1.7), black_box(0.4), black_box(0.5)).unwrap())
    });
    let m = benchmark_stack();
    c.bench_function("svt 4096x11", |b| b.iter(|| linalg::svt(black_box(&m), 0.5).unwrap()));
}

fn solve(c: &mut Criterion) {
    let m = benchmark_stack();
    let mut group = c.benchmark_group("solve 4096x11");
    group.sample_size(10);
    for (name, cfg) in [
        ("rpca", SolverConfig::rpca()),
        ("wnnm", SolverConfig::wnnm()),
        ("wsnm p=0.8", SolverConfig::wsnm(0.8)),
    ] {
        group.bench_function(name, |b| b.iter(|| solvers::solve(black_box(&m), &cfg).unwrap()));
    }
    group.finish();
}

fn quality(c: &mut Criterion) {
    let case = synth_case(&SynthSpec::default(), 1, OcclusionKind::ShadowLeft).unwrap();
    let (x, y) = (&case.clean_images[1], &case.occluded_images[1]);
    c.bench_function("ssim 64x64", |b| {
        b.iter(|| metrics::ssim(black_box(x), black_box(y)).unwrap())
    });
    c.bench_function("psnr 64x64", |b| {
        b.iter(|| metrics::psnr(black_box(x), black_box(y)).unwrap())
    });
}

criterion_group!(benches, svd, proximal, solve, quality);
criterion_main!(benches);
