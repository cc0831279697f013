use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use refund_lab::adversary::{worst_case, DEFAULT_GRID};
use refund_lab::distributions::make_worst_case;
use refund_lab::evaluation::{monte_carlo, profit_generic};
use refund_lab::mechanisms::optimal_mechanism;
use refund_lab::policies::robust_refund_policy;
use refund_lab::special::lambert_w_minus1;
use refund_lab::{best_guaranteed_profit, MarketParams, RngState, TieRule};

fn params() -> MarketParams {
    MarketParams::new(0.75, 0.8).unwrap()
}

fn bench_closed_forms(c: &mut Criterion) {
    c.bench_function("lambert_w_minus1", |b| {
        b.iter(|| lambert_w_minus1(black_box(-0.18394)).unwrap())
    });
    let p = params();
    c.bench_function("best_guaranteed_profit", |b| {
        b.iter(|| best_guaranteed_profit(black_box(&p)))
    });
}

fn bench_adversary(c: &mut Criterion) {
    let p = params();
    let profile = robust_refund_policy(&p)
        .profile(&p, TieRule::Adversarial)
        .unwrap();
    c.bench_function("worst_case_10001", |b| {
        b.iter(|| worst_case(black_box(&profile), 0.75, DEFAULT_GRID).unwrap())
    });
}

fn bench_mechanism(c: &mut Criterion) {
    let p = params();
    let fw = make_worst_case(&p).discretize(2001).unwrap();
    c.bench_function("optimal_mechanism_2001", |b| {
        b.iter(|| optimal_mechanism(black_box(&fw), &p).unwrap())
    });
}

fn bench_evaluation(c: &mut Criterion) {
    let p = params();
    let fw = make_worst_case(&p);
    let rrp = robust_refund_policy(&p);
    c.bench_function("profit_generic", |b| {
        b.iter(|| profit_generic(black_box(&rrp), &fw, &p, TieRule::Adversarial).unwrap())
    });
    c.bench_function("monte_carlo_100k", |b| {
        b.iter(|| {
            let mut rng = RngState::from_seed(1);
            monte_carlo(&rrp, &fw, &p, TieRule::Adversarial, 100_000, &mut rng).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_closed_forms,
    bench_adversary,
    bench_mechanism,
    bench_evaluation
);
criterion_main!(benches);
