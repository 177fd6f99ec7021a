use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use houghradon::fht::{fht_full, naive_fht_full, tfht};
use houghradon::image::FeatureMap;
use houghradon::nn::{build_network, conv2d_forward, Activation, ConvParams, ConvSpec, NetworkSpec};
use houghradon::radon::RadonHoughMap;
use houghradon_bench::pattern;

fn fht(c: &mut Criterion) {
    let mut g = c.benchmark_group("fht_full");
    for h in [64, 128, 256] {
        let img = pattern(h);
        g.bench_with_input(BenchmarkId::new("fast", h), &img, |b, img| b.iter(|| fht_full(black_box(img))));
    }
    for h in [32, 64] {
        let img = pattern(h);
        g.bench_with_input(BenchmarkId::new("naive", h), &img, |b, img| b.iter(|| naive_fht_full(black_box(img))));
    }
    g.finish();

    let hough = fht_full(&pattern(64)).unwrap();
    c.bench_function("tfht/64", |b| b.iter(|| tfht(black_box(&hough))));
}

fn radon(c: &mut Criterion) {
    let hough = FeatureMap::from(fht_full(&pattern(64)).unwrap().into_grid());
    c.bench_function("radon_map_build/253x0.711", |b| {
        b.iter(|| RadonHoughMap::build(64, black_box(253), 0.711))
    });
    let map = RadonHoughMap::build(64, 253, 0.711).unwrap();
    let radon = map.gather_featuremap(&hough).unwrap();
    c.bench_function("hrt/253x64", |b| b.iter(|| map.gather_featuremap(black_box(&hough))));
    c.bench_function("rht/253x64", |b| b.iter(|| map.scatter_featuremap(black_box(&radon))));
}

fn network(c: &mut Criterion) {
    let spec = ConvSpec::new(16, 16, Activation::Softsign);
    let params = ConvParams::zeros(16, 16);
    let input = FeatureMap::zeros(16, 253, 64);
    c.bench_function("inner_conv/16x253x64", |b| {
        b.iter(|| conv2d_forward(black_box(&input), &spec, &params))
    });

    let (net, params) = build_network(NetworkSpec::reduced(64, 61, 1.0), 0).unwrap();
    let x = FeatureMap::from(pattern(64));
    c.bench_function("reduced_network_forward/64", |b| b.iter(|| net.predict(&params, black_box(&x))));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = fht, radon, network
}
criterion_main!(benches);
