use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polar_core::assignment::{build_cost_matrix, hungarian, ClassCost, MatchCandidate, MatchTarget};
use polar_core::camera::default_surround_rig;
use polar_core::geometry::{decode_box_encoding, polar_to_cartesian, BoxEncoding, RangeConfig};
use polar_core::loss::{gradcheck_fixtures, loss_gradient};
use polar_core::sampling::{sample_center_features, FeatureMap};
use polar_core::CostMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QUERIES: usize = 900;

fn encodings(n: usize, seed: u64) -> Vec<BoxEncoding> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut v = [0.0; 9];
            for x in &mut v {
                *x = rng.random_range(-2.0..2.0);
            }
            BoxEncoding::from_array(v)
        })
        .collect()
}

fn bench_decode(c: &mut Criterion) {
    let range = RangeConfig::default();
    let encs = encodings(QUERIES, 1);
    c.bench_function("decode 900 encodings", |b| {
        b.iter(|| {
            for e in &encs {
                black_box(decode_box_encoding(black_box(e), &range).unwrap());
            }
        })
    });
}

fn bench_hungarian(c: &mut Criterion) {
    let mut group = c.benchmark_group("hungarian");
    for &(gts, preds) in &[(10, 100), (50, 300), (100, 900)] {
        let mut rng = ChaCha8Rng::seed_from_u64(gts as u64);
        let data = (0..gts * preds).map(|_| rng.random_range(0.0..10.0)).collect();
        let costs = CostMatrix::new(gts, preds, data).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{gts}x{preds}")), &costs, |b, m| {
            b.iter(|| hungarian(black_box(m)).unwrap())
        });
    }
    group.finish();
}

fn bench_cost_matrix(c: &mut Criterion) {
    let range = RangeConfig::default();
    let cands: Vec<MatchCandidate> = encodings(QUERIES, 2)
        .iter()
        .map(|e| MatchCandidate { polar: decode_box_encoding(e, &range).unwrap(), probs: vec![0.4, 0.3, 0.2, 0.1] })
        .collect();
    let targets: Vec<MatchTarget> = cands.iter().take(50).map(|m| MatchTarget { polar: m.polar, class: 0 }).collect();
    c.bench_function("cost matrix 50x900", |b| {
        b.iter(|| {
            build_cost_matrix(black_box(&cands), black_box(&targets), 20.0, ClassCost::NegativeProbability).unwrap()
        })
    });
}

fn bench_projection_and_sampling(c: &mut Criterion) {
    let range = RangeConfig::default();
    let rig = default_surround_rig();
    let centers: Vec<[f64; 3]> = encodings(QUERIES, 3)
        .iter()
        .map(|e| {
            let b = polar_to_cartesian(&decode_box_encoding(e, &range).unwrap()).unwrap();
            [b.x, b.y, b.z]
        })
        .collect();
    c.bench_function("project 900 centers into 6 views", |b| {
        b.iter(|| {
            for p in &centers {
                black_box(rig.project_all(*p).unwrap());
            }
        })
    });
    let maps: Vec<FeatureMap> = (0..rig.len()).map(|_| FeatureMap::constant(100, 57, 64, 16.0, 1.0).unwrap()).collect();
    c.bench_function("sample 900 centers, 64 channels", |b| {
        b.iter(|| {
            for p in &centers {
                black_box(sample_center_features(*p, &rig, &maps).unwrap());
            }
        })
    });
}

fn bench_gradient(c: &mut Criterion) {
    let range = RangeConfig::default();
    let fixtures = gradcheck_fixtures(200, 4, &range).unwrap();
    c.bench_function("loss gradient x200", |b| {
        b.iter(|| {
            for f in &fixtures {
                black_box(loss_gradient(&f.encoding, &f.velocity, &f.gt, &range).unwrap());
            }
        })
    });
}

criterion_group!(
    benches,
    bench_decode,
    bench_hungarian,
    bench_cost_matrix,
    bench_projection_and_sampling,
    bench_gradient
);
criterion_main!(benches);
