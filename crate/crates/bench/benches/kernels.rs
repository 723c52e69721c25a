use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;
use wrl_core::evaluator::probe;
use wrl_core::experiments::{generate_data, ExperimentPlan};
use wrl_core::geometry::{hungarian, tsne_2d, TsneParams};
use wrl_core::linalg::jacobi_eigen;
use wrl_core::seeding::rng;
use wrl_core::trainer::{init_model, loss_and_grad};
use wrl_core::TrainMode;

fn symmetric(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = r.random_range(-1.0..1.0);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    a
}

fn kernels(c: &mut Criterion) {
    let plan = ExperimentPlan::default();
    let config = plan.model_config();
    let data = generate_data(&plan, &plan.families()).unwrap();
    let target = &data[3];
    let model = init_model(&config, 1).unwrap();
    let encoder = model.strip_head().unwrap();

    let batch = target.train.select(&(0..32).collect::<Vec<_>>());
    c.bench_function("loss_and_grad/batch32", |b| {
        b.iter(|| loss_and_grad(black_box(&model), &config, &batch, TrainMode::Full).unwrap())
    });

    c.bench_function("probe/2048x1024", |b| {
        b.iter(|| probe(black_box(&encoder), "bench", &config, target, 0, &plan.probe).unwrap())
    });

    let a = symmetric(72, 2);
    c.bench_function("jacobi/72", |b| b.iter(|| jacobi_eigen(black_box(&a), 72).unwrap()));

    let mut r = rng(3);
    let cost: Vec<Vec<f64>> = (0..9).map(|_| (0..9).map(|_| r.random_range(0.0..1.0)).collect()).collect();
    c.bench_function("hungarian/9", |b| b.iter(|| hungarian(black_box(&cost)).unwrap()));

    let points: Vec<Vec<f64>> = (0..72).map(|_| (0..256).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let mut group = c.benchmark_group("tsne");
    group.sample_size(10);
    group.bench_function("72x256", |b| b.iter(|| tsne_2d(black_box(&points), &TsneParams::default(), 4).unwrap()));
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
