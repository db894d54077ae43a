use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dante_core::nn::{full_gradient, layer_gradient};
use dante_core::optim::sngd_step;
use dante_core::{ActivationKind, Batch, LossKind, NetworkSpec, NetworkState, Rng};

fn matmul(c: &mut Criterion) {
    let mut rng = Rng::new(0);
    let x = rng.normal_matrix(32, 784);
    let w = rng.normal_matrix(784, 100);
    c.bench_function("matmul 32x784 @ 784x100", |b| {
        b.iter(|| black_box(&x).matmul(black_box(&w)).unwrap())
    });
    let g = rng.normal_matrix(32, 100);
    c.bench_function("matmul_tn 784x32 @ 32x100", |b| {
        b.iter(|| black_box(&x).matmul_tn(black_box(&g)).unwrap())
    });
}

fn mnist_sized() -> (NetworkSpec, NetworkState, Batch) {
    let act = ActivationKind::leaky_relu();
    let spec =
        NetworkSpec::mlp(&[784, 100, 10], act, act, LossKind::MeanSquaredError, false).unwrap();
    let mut rng = Rng::new(1);
    let state = NetworkState::init(&spec, &mut rng);
    let batch = Batch::new(
        rng.uniform_matrix(32, 784, 0.0, 1.0),
        rng.uniform_matrix(32, 10, 0.0, 1.0),
    )
    .unwrap();
    (spec, state, batch)
}

fn gradients(c: &mut Criterion) {
    let (spec, state, batch) = mnist_sized();
    c.bench_function("layer_gradient W2 (784-100-10, b=32)", |b| {
        b.iter(|| layer_gradient(&spec, &state, black_box(&batch), 1).unwrap())
    });
    c.bench_function("layer_gradient W1 (784-100-10, b=32)", |b| {
        b.iter(|| layer_gradient(&spec, &state, black_box(&batch), 0).unwrap())
    });
    c.bench_function("full_gradient (784-100-10, b=32)", |b| {
        b.iter(|| full_gradient(&spec, &state, black_box(&batch)).unwrap())
    });
}

fn sngd(c: &mut Criterion) {
    let (spec, state, batch) = mnist_sized();
    let g = layer_gradient(&spec, &state, &batch, 0).unwrap();
    c.bench_function("sngd_step 784x100", |b| {
        b.iter(|| sngd_step(black_box(&state.weights[0]), black_box(&g), 0.001).unwrap())
    });
}

criterion_group!(benches, matmul, gradients, sngd);
criterion_main!(benches);
