use std::hint::black_box;

use capmkt::energy::{compute_net_cone, dispatch, truthful_offers, DEFAULT_VOLL};
use capmkt::io::fixture::{synthetic_fixture, FIXTURE_SEED};
use capmkt::strategic::{best_joint_strategy, capacity_market, CompareConfig};
use criterion::{criterion_group, criterion_main, Criterion};

fn fixture_dispatch(c: &mut Criterion) {
    let (net, ts) = synthetic_fixture(FIXTURE_SEED).expect("fixture");
    let offers = truthful_offers(&net, None);
    c.bench_function("dispatch_24h", |b| {
        b.iter(|| dispatch(&net, black_box(&ts), &offers, DEFAULT_VOLL))
    });
    c.bench_function("net_cone_24h", |b| {
        b.iter(|| compute_net_cone(&net, black_box(&ts), DEFAULT_VOLL, 1.0))
    });
}

fn joint(c: &mut Criterion) {
    let (net, ts) = synthetic_fixture(FIXTURE_SEED).expect("fixture");
    let nc = compute_net_cone(&net, &ts, DEFAULT_VOLL, 1.0).expect("net cone");
    let cfg = CompareConfig::default();
    let (bids, curve) = capacity_market(&net, &ts, &nc, &cfg).expect("capacity market");
    let mut g = c.benchmark_group("joint");
    g.sample_size(10);
    g.bench_function("L_NG", |b| {
        b.iter(|| best_joint_strategy("L_NG", &net, &ts, black_box(&bids), &curve, &cfg.joint))
    });
    g.finish();
}

criterion_group!(benches, fixture_dispatch, joint);
criterion_main!(benches);
