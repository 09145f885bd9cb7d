use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use kdecomp::density::{decompose, ComponentBandwidth, CompositeDensity};
use kdecomp::inference::test_decomposition;
use kdecomp::{BandwidthRule, KernelScheme, Observation};

fn synthetic(n: usize) -> Vec<Observation> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..n)
        .map(|i| {
            let value = 5.0 + 40.0 * rng.gen::<f64>();
            Observation::new(value, format!("p{}", i % 40))
                .with_label("cat", format!("c{}", i % 5))
                .positive_only(rng.gen_bool(0.5))
        })
        .collect()
}

fn bench_pdf_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("pdf_grid_256");
    for n in [100usize, 1000, 3000] {
        let observations = synthetic(n);
        let density =
            CompositeDensity::fit_equal(&observations, KernelScheme::WeibullGumbel, 5.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &density, |b, d| {
            b.iter(|| {
                let mut acc = 0.0;
                for i in 0..256 {
                    acc += d.pdf(-20.0 + i as f64 * 0.5);
                }
                acc
            })
        });
    }
    group.finish();
}

fn bench_quantile(c: &mut Criterion) {
    let observations = synthetic(1000);
    let density =
        CompositeDensity::fit_equal(&observations, KernelScheme::WeibullGumbel, 5.0).unwrap();
    c.bench_function("quantile_median_n1000", |b| {
        b.iter(|| density.quantile(0.5).unwrap())
    });
}

fn bench_test(c: &mut Criterion) {
    let observations = synthetic(1000);
    let weights = vec![1.0 / observations.len() as f64; observations.len()];
    let d = decompose(
        &observations,
        "cat",
        KernelScheme::WeibullGumbel,
        ComponentBandwidth::Global(BandwidthRule::Silverman),
        &weights,
    )
    .unwrap();
    c.bench_function("pearson_quintiles_n1000_m5", |b| {
        b.iter(|| test_decomposition(&d, 5, 1000.0).unwrap())
    });
}

criterion_group!(benches, bench_pdf_grid, bench_quantile, bench_test);
criterion_main!(benches);
