#![allow(dead_code)]

use num_complex::Complex64;
use sqpc_core::montecarlo::{
    enumerate_exact, run_trials, ExperimentConfig, ExperimentSpec, OutcomeDistribution,
};
use sqpc_core::protocol::{parse_bits, Flags, Policies};
use sqpc_core::qsim::{measure_bell, measure_z, prepare_bell, tensor};
use sqpc_core::{
    BellIndex, Bit, ClientPolicy, RandSource, Randomness, StateVector, Stats, StrategySpec,
};

pub fn bits(s: &str) -> Vec<Bit> {
    parse_bits(s).unwrap()
}

pub fn spec(strategy: &str, a: &str, b: &str) -> ExperimentSpec {
    ExperimentSpec {
        strategy: strategy.parse::<StrategySpec>().unwrap(),
        policies: Policies::default(),
        secret_a: bits(a),
        secret_b: bits(b),
    }
}

pub fn config(spec: ExperimentSpec, rounds: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        spec,
        rounds,
        master_seed: seed,
        parallelism: 1,
    }
}

/// Both clients always choose the given flags.
pub fn fixed_policies(a: Flags, b: Flags) -> Policies {
    Policies {
        alice: ClientPolicy::Scripted(vec![a]),
        bob: ClientPolicy::Scripted(vec![b]),
    }
}

pub fn mc_and_oracle(
    spec: &ExperimentSpec,
    rounds: u64,
    seed: u64,
) -> (Stats, OutcomeDistribution) {
    let stats = run_trials(&config(spec.clone(), rounds, seed)).unwrap();
    let exact = enumerate_exact(spec).unwrap();
    (stats, exact)
}

/// Every event and outcome key seen by either side whose Monte Carlo rate is
/// more than `k` standard errors from the exact value.
pub fn disagreements(stats: &Stats, exact: &OutcomeDistribution, k: f64) -> Vec<String> {
    let mut keys: Vec<&String> = stats.events.keys().chain(stats.outcomes.keys()).collect();
    keys.extend(exact.events.keys().chain(exact.outcomes.keys()));
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|key| {
            let est = stats.estimate(key);
            let p = exact.event(key);
            (!est.within_sigma(p, k))
                .then(|| format!("{key}: empirical {} vs exact {p}", est.p_hat))
        })
        .collect()
}

fn random_qubit(rng: &mut RandSource) -> StateVector {
    let mut amps: Vec<Complex64> = (0..2)
        .map(|_| Complex64::new(rng.next_f64() * 2.0 - 1.0, rng.next_f64() * 2.0 - 1.0))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-6 {
        return StateVector::ket(Bit::ZERO);
    }
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::new(1, amps).unwrap()
}

/// Applies `len` random register operations starting from a random state and
/// returns the largest deviation of the squared norm from 1 seen on the way.
pub fn fuzz_sequence(rng: &mut RandSource, len: usize) -> f64 {
    let bell = |rng: &mut RandSource| prepare_bell(BellIndex::from_code(rng.uniform(4) as u8));
    let mut state = match rng.uniform(3) {
        0 => tensor(&bell(rng), &bell(rng)).unwrap(),
        1 => tensor(&random_qubit(rng), &random_qubit(rng)).unwrap(),
        _ => random_qubit(rng),
    };
    let mut worst = (state.norm_sqr() - 1.0).abs();
    for _ in 0..len {
        let n = state.num_qubits();
        let q = rng.uniform(n);
        state = match rng.uniform(6) {
            0 => state.flip(q),
            1 => measure_z(&state, q, rng).1,
            2 if n >= 2 => {
                let other = (q + 1 + rng.uniform(n - 1)) % n;
                measure_bell(&state, (q, other), rng).1
            }
            3 => state.replace_qubit(q, &random_qubit(rng), rng),
            4 => state.reset(q, rng.coin(), rng),
            _ if n < 4 => tensor(&state, &random_qubit(rng)).unwrap(),
            _ => state.flip(q),
        };
        worst = worst.max((state.norm_sqr() - 1.0).abs());
    }
    worst
}
