use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sqpc_core::montecarlo::{enumerate_exact, run_trials, ExperimentConfig, ExperimentSpec};
use sqpc_core::protocol::{parse_bits, run_round, ComparisonAccumulator, RoundStreams};
use sqpc_core::verify::verify_swap_identity;
use sqpc_core::{Policies, Strategy, StrategySpec};

fn spec(strategy: &str) -> ExperimentSpec {
    ExperimentSpec {
        strategy: strategy.parse::<StrategySpec>().unwrap(),
        policies: Policies::default(),
        secret_a: parse_bits("0011").unwrap(),
        secret_b: parse_bits("0101").unwrap(),
    }
}

fn rounds(c: &mut Criterion) {
    let policies = Policies::default();
    for name in ["none", "eve_measure_resend", "tp_wrong_pairing"] {
        let strategy = Strategy::from_spec(name.parse().unwrap()).unwrap();
        let mut k = 0u64;
        c.bench_function(&format!("run_round/{name}"), |b| {
            b.iter(|| {
                let mut acc =
                    ComparisonAccumulator::new(parse_bits("0").unwrap(), parse_bits("1").unwrap())
                        .unwrap();
                k += 1;
                black_box(
                    run_round(
                        &mut acc,
                        k,
                        &policies,
                        &strategy,
                        &mut RoundStreams::new(1, k),
                    )
                    .unwrap(),
                )
            })
        });
    }
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_exact");
    group.sample_size(10);
    for name in ["none", "eve_fake_qubit", "tp_fake_singles:coin"] {
        let s = spec(name);
        group.bench_function(name, |b| b.iter(|| black_box(enumerate_exact(&s).unwrap())));
    }
    group.finish();
}

fn trials(c: &mut Criterion) {
    let config = ExperimentConfig {
        spec: spec("eve_measure_resend"),
        rounds: 10_000,
        master_seed: 3,
        parallelism: 1,
    };
    let mut group = c.benchmark_group("run_trials");
    group.sample_size(10);
    group.bench_function("10k_rounds", |b| {
        b.iter(|| black_box(run_trials(&config).unwrap()))
    });
    group.finish();
}

fn swap(c: &mut Criterion) {
    c.bench_function("verify_swap_identity", |b| {
        b.iter(|| black_box(verify_swap_identity()))
    });
}

criterion_group!(benches, rounds, oracle, trials, swap);
criterion_main!(benches);
