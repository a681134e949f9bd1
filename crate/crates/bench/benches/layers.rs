use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use krnet_core::nn::{
    batchnorm_backward, batchnorm_forward, conv2d_backward, conv2d_forward, prelu_backward, prelu_forward,
    BatchNorm, ConvLayer, PRelu,
};
use krnet_core::{Rng, Shape4, Tensor4};

fn gaussian(shape: Shape4, rng: &mut Rng) -> Tensor4 {
    Tensor4::from_fn(shape, |_| rng.gaussian()).unwrap()
}

fn conv(c: &mut Criterion) {
    let mut rng = Rng::new(1);
    let mut group = c.benchmark_group("conv2d");
    for kernel in [1, 3, 7] {
        let mut layer = ConvLayer::new(kernel, 16, 16).unwrap();
        layer.weight.value.iter_mut().for_each(|v| *v = 0.05 * rng.gaussian());
        let x = gaussian(Shape4::new(8, 16, 24, 24), &mut rng);
        let g = gaussian(Shape4::new(8, 16, 24, 24), &mut rng);
        group.bench_with_input(BenchmarkId::new("forward", kernel), &kernel, |b, _| {
            b.iter(|| conv2d_forward(black_box(&x), &layer).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("backward", kernel), &kernel, |b, _| {
            b.iter(|| conv2d_backward(black_box(&x), &layer, &g).unwrap())
        });
    }
    group.finish();
}

fn pointwise(c: &mut Criterion) {
    let mut rng = Rng::new(2);
    let x = gaussian(Shape4::new(8, 16, 24, 24), &mut rng);
    let g = gaussian(Shape4::new(8, 16, 24, 24), &mut rng);

    let mut bn = BatchNorm::new(16);
    let (_, cache) = batchnorm_forward(&x, &mut bn).unwrap();
    c.bench_function("batchnorm/forward", |b| b.iter(|| batchnorm_forward(black_box(&x), &mut bn).unwrap()));
    c.bench_function("batchnorm/backward", |b| {
        b.iter(|| batchnorm_backward(&bn, &cache, black_box(&g)).unwrap())
    });

    let p = PRelu::new(16);
    c.bench_function("prelu/forward", |b| b.iter(|| prelu_forward(black_box(&x), &p).unwrap()));
    c.bench_function("prelu/backward", |b| b.iter(|| prelu_backward(black_box(&x), &p, &g).unwrap()));
}

criterion_group!(benches, conv, pointwise);
criterion_main!(benches);
