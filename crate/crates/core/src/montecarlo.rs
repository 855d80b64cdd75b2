//! Seeded trial runner, exact branch-enumeration oracle and the statistics both
//! report.
//!
//! A trial is one protocol round. Round `k` draws every random choice from
//! [`RoundStreams::new(master_seed, k)`](RoundStreams), and aggregation only adds
//! integer counts, so results do not depend on how rounds are spread over
//! threads. The oracle re-runs the same round code under a chooser that walks
//! every branch of the choice tree, multiplying branch probabilities.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::adversaries::{AdversaryError, Strategy, StrategySpec};
use crate::protocol::{
    run_round, ComparisonAccumulator, OutcomeKind, Policies, ProtocolError, RoundRng, RoundStreams,
    RoundTranscript, Step5Result, Stream,
};
use crate::qsim::{snap_dyadic, Bit, Randomness};

/// Confidence level of the intervals attached to every estimate.
pub const CONFIDENCE: f64 = 0.95;

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("strategy {0} draws from a continuous distribution and cannot be enumerated")]
    UnsupportedStrategy(String),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

mod bit_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::protocol::{format_bits, parse_bits};
    use crate::qsim::Bit;

    pub fn serialize<S: Serializer>(bits: &[Bit], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_bits(bits))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Bit>, D::Error> {
        let s = String::deserialize(d)?;
        parse_bits(&s).map_err(serde::de::Error::custom)
    }
}

/// Everything that shapes the round distribution. Seed and round count are
/// deliberately absent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub strategy: StrategySpec,
    #[serde(default)]
    pub policies: Policies,
    /// Alice's secret bits, written as a `0`/`1` string.
    #[serde(with = "bit_string")]
    pub secret_a: Vec<Bit>,
    #[serde(with = "bit_string")]
    pub secret_b: Vec<Bit>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub spec: ExperimentSpec,
    pub rounds: u64,
    pub master_seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_parallelism() -> usize {
    1
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), MonteCarloError> {
        if self.secret_a.len() != self.secret_b.len() {
            return Err(MonteCarloError::Config(format!(
                "secret lengths differ: {} vs {}",
                self.secret_a.len(),
                self.secret_b.len()
            )));
        }
        if self.secret_a.is_empty() {
            return Err(MonteCarloError::Config("secrets must be nonempty".into()));
        }
        for (who, p) in [("alice", &self.policies.alice), ("bob", &self.policies.bob)] {
            if let crate::protocol::ClientPolicy::Scripted(s) = p {
                if s.is_empty() {
                    return Err(MonteCarloError::Config(format!(
                        "{who}'s scripted policy is empty"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Distinct `(m_a, m_b)` pairs and their frequency over secret positions.
    fn secret_pairs(&self) -> (Vec<(Bit, Bit)>, Vec<f64>) {
        let mut counts: BTreeMap<(Bit, Bit), usize> = BTreeMap::new();
        for pair in self
            .secret_a
            .iter()
            .copied()
            .zip(self.secret_b.iter().copied())
        {
            *counts.entry(pair).or_default() += 1;
        }
        let n = self.secret_a.len() as f64;
        counts
            .into_iter()
            .map(|(pair, c)| (pair, c as f64 / n))
            .unzip()
    }

    /// Number of round indices after which scripted policies repeat.
    fn script_period(&self) -> u64 {
        let len = |p: &crate::protocol::ClientPolicy| match p {
            crate::protocol::ClientPolicy::Uniform => 1u64,
            crate::protocol::ClientPolicy::Scripted(s) => s.len() as u64,
        };
        let (a, b) = (len(&self.policies.alice), len(&self.policies.bob));
        a / gcd(a, b) * b
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), MonteCarloError> {
        self.spec.validate()?;
        if self.rounds == 0 {
            return Err(MonteCarloError::Config("rounds must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(MonteCarloError::Config(
                "parallelism must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One trial: draw the secret position, then run a protocol round.
fn trial_round(
    strategy: &Strategy,
    policies: &Policies,
    pairs: &(Vec<(Bit, Bit)>, Vec<f64>),
    round_index: u64,
    rng: &mut dyn RoundRng,
) -> Result<RoundTranscript, ProtocolError> {
    let k = rng.stream(Stream::Secrets).choose(&pairs.1);
    let (m_a, m_b) = pairs.0[k];
    let mut acc = ComparisonAccumulator::new(vec![m_a], vec![m_b])?;
    run_round(&mut acc, round_index, policies, strategy, rng)
}

/// Named boolean events of a finished round.
///
/// `detect.case{1,2}.{alice,bob}` failed eavesdropper checks, `detect.step5` TP
/// exposed, `detect.any` the round aborted, `compared` a bit was compared,
/// `leak.<by>.<victim>.{attempt,correct}` adversary guesses of a secret bit, and
/// `tpview.m_a=<b>.r_a=<b>` what an honest TP sees of Alice's masked bit.
pub fn round_events(t: &RoundTranscript) -> Vec<String> {
    let mut events = Vec::new();
    for c in &t.state.checks {
        if c.result == Some(crate::protocol::CheckResult::Fail) {
            let case = match c.check {
                crate::protocol::ClientCheck::ZCheck => 1,
                _ => 2,
            };
            events.push(format!("detect.case{case}.{}", c.client.lower()));
        }
    }
    if t.state.step5 == Some(Step5Result::TpDetected) {
        events.push("detect.step5".into());
    }
    if t.outcome.kind.is_detection() {
        events.push("detect.any".into());
    }
    if let OutcomeKind::ComparedBit(_) = t.outcome.kind {
        events.push("compared".into());
        if let Some(c) = t.state.comparison {
            // m_a is recoverable as r_a ⊕ mr_a
            let m_a = c.r_a ^ t.state.mr_a.unwrap_or_default();
            events.push(format!("tpview.m_a={m_a}.r_a={}", c.r_a));
        }
    }
    for inf in &t.state.inferences {
        let key = format!("leak.{}.{}", inf.by, inf.victim.lower());
        events.push(format!("{key}.attempt"));
        if inf.guess == inf.truth {
            events.push(format!("{key}.correct"));
        }
    }
    events
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Counts {
    rounds: u64,
    outcomes: BTreeMap<String, u64>,
    events: BTreeMap<String, u64>,
}

impl Counts {
    fn add(&mut self, t: &RoundTranscript) {
        self.rounds += 1;
        *self.outcomes.entry(t.outcome.kind.key()).or_default() += 1;
        for e in round_events(t) {
            *self.events.entry(e).or_default() += 1;
        }
    }

    fn merge(mut self, other: Counts) -> Counts {
        self.rounds += other.rounds;
        for (k, v) in other.outcomes {
            *self.outcomes.entry(k).or_default() += v;
        }
        for (k, v) in other.events {
            *self.events.entry(k).or_default() += v;
        }
        self
    }
}

/// A proportion with its score interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub count: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn new(count: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = binomial_interval(count, trials, CONFIDENCE);
        Estimate {
            count,
            trials,
            p_hat: count as f64 / trials as f64,
            ci_low,
            ci_high,
        }
    }

    /// Whether `p` lies within `k` binomial standard errors (computed at `p`) of the estimate.
    pub fn within_sigma(&self, p: f64, k: f64) -> bool {
        let sigma = (p * (1.0 - p) / self.trials as f64).sqrt();
        (self.p_hat - p).abs() <= k * sigma
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakTally {
    pub attempts: u64,
    pub correct: u64,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Aggregated trial results. Every derived field is a function of the counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub rounds: u64,
    pub outcomes: BTreeMap<String, u64>,
    pub events: BTreeMap<String, u64>,
    /// Per-round rate of every event, with a 95% score interval.
    pub rates: BTreeMap<String, Estimate>,
    /// Compared bits per round.
    pub efficiency: Estimate,
    /// Keyed `<by>.<victim>`.
    pub leaks: BTreeMap<String, LeakTally>,
}

impl Stats {
    pub fn from_counts(
        rounds: u64,
        outcomes: BTreeMap<String, u64>,
        events: BTreeMap<String, u64>,
    ) -> Self {
        let rates = events
            .iter()
            .map(|(k, &v)| (k.clone(), Estimate::new(v, rounds)))
            .collect();
        let efficiency = Estimate::new(events.get("compared").copied().unwrap_or(0), rounds);
        let mut leaks = BTreeMap::new();
        for (k, &attempts) in &events {
            let Some(key) = k
                .strip_prefix("leak.")
                .and_then(|k| k.strip_suffix(".attempt"))
            else {
                continue;
            };
            let correct = events
                .get(&format!("leak.{key}.correct"))
                .copied()
                .unwrap_or(0);
            let (ci_low, ci_high) = binomial_interval(correct, attempts, CONFIDENCE);
            leaks.insert(
                key.to_string(),
                LeakTally {
                    attempts,
                    correct,
                    frequency: correct as f64 / attempts as f64,
                    ci_low,
                    ci_high,
                },
            );
        }
        Stats {
            rounds,
            outcomes,
            events,
            rates,
            efficiency,
            leaks,
        }
    }

    fn from_raw(c: Counts) -> Self {
        Stats::from_counts(c.rounds, c.outcomes, c.events)
    }

    /// Rate of an event or outcome key; zero count when never observed.
    pub fn estimate(&self, key: &str) -> Estimate {
        let count = self
            .events
            .get(key)
            .or_else(|| self.outcomes.get(key))
            .copied()
            .unwrap_or(0);
        Estimate::new(count, self.rounds)
    }

    pub fn count(&self, key: &str) -> u64 {
        self.events
            .get(key)
            .or_else(|| self.outcomes.get(key))
            .copied()
            .unwrap_or(0)
    }

    /// Pools two runs by summing their counts.
    pub fn merge(&self, other: &Stats) -> Stats {
        let mut outcomes = self.outcomes.clone();
        for (k, v) in &other.outcomes {
            *outcomes.entry(k.clone()).or_default() += v;
        }
        let mut events = self.events.clone();
        for (k, v) in &other.events {
            *events.entry(k.clone()).or_default() += v;
        }
        Stats::from_counts(self.rounds + other.rounds, outcomes, events)
    }
}

/// Runs `config.rounds` independent seeded rounds on `config.parallelism` threads.
pub fn run_trials(config: &ExperimentConfig) -> Result<Stats, MonteCarloError> {
    config.validate()?;
    let strategy = Strategy::from_spec(config.spec.strategy)?;
    let pairs = config.spec.secret_pairs();
    let policies = &config.spec.policies;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| MonteCarloError::Config(format!("thread pool: {e}")))?;
    let counts = pool.install(|| {
        (0..config.rounds)
            .into_par_iter()
            .try_fold(Counts::default, |mut c, k| {
                let mut rng = RoundStreams::new(config.master_seed, k);
                let t = trial_round(&strategy, policies, &pairs, k, &mut rng)?;
                c.add(&t);
                Ok::<_, ProtocolError>(c)
            })
            .try_reduce(Counts::default, |a, b| Ok(a.merge(b)))
    })?;
    Ok(Stats::from_raw(counts))
}

/// Exact probabilities of every round outcome and event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    /// Partition of rounds by outcome; sums to 1.
    pub outcomes: BTreeMap<String, f64>,
    /// Marginal probability of each event.
    pub events: BTreeMap<String, f64>,
    /// Number of leaves in the enumerated branch tree.
    pub leaves: u64,
}

impl OutcomeDistribution {
    pub fn event(&self, key: &str) -> f64 {
        self.events
            .get(key)
            .or_else(|| self.outcomes.get(key))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.outcomes.values().sum()
    }

    /// `P(correct) / P(attempt)` for a `<by>.<victim>` leak key.
    pub fn leak_frequency(&self, key: &str) -> Option<f64> {
        let attempt = self.event(&format!("leak.{key}.attempt"));
        (attempt > 0.0).then(|| self.event(&format!("leak.{key}.correct")) / attempt)
    }
}

/// Replays a prescribed prefix of choices, then always takes the first
/// reachable branch, queueing the untaken siblings for later runs.
struct BranchWalker {
    path: Vec<usize>,
    depth: usize,
    weight: f64,
    pending: Vec<Vec<usize>>,
}

impl BranchWalker {
    fn new(prefix: Vec<usize>) -> Self {
        BranchWalker {
            path: prefix,
            depth: 0,
            weight: 1.0,
            pending: Vec::new(),
        }
    }
}

impl Randomness for BranchWalker {
    fn choose(&mut self, weights: &[f64]) -> usize {
        let w: Vec<f64> = weights.iter().map(|&p| snap_dyadic(p)).collect();
        let pick = if self.depth < self.path.len() {
            self.path[self.depth]
        } else {
            let mut reachable = (0..w.len()).filter(|&i| w[i] > 0.0);
            let first = reachable.next().expect("a choice with no reachable branch");
            for sibling in reachable {
                let mut p = self.path.clone();
                p.push(sibling);
                self.pending.push(p);
            }
            self.path.push(first);
            first
        };
        self.depth += 1;
        self.weight *= w[pick];
        pick
    }
}

impl RoundRng for BranchWalker {
    fn stream(&mut self, _: Stream) -> &mut dyn Randomness {
        self
    }
}

/// Walks the full weighted branch tree of one round: state labels, flags,
/// secret positions, every measurement branch and every adversary coin.
pub fn enumerate_exact(spec: &ExperimentSpec) -> Result<OutcomeDistribution, MonteCarloError> {
    spec.validate()?;
    let strategy = Strategy::from_spec(spec.strategy)?;
    if !strategy.is_discrete() {
        return Err(MonteCarloError::UnsupportedStrategy(strategy.name()));
    }
    let pairs = spec.secret_pairs();
    let period = spec.script_period();
    let mut outcomes: BTreeMap<String, f64> = BTreeMap::new();
    let mut events: BTreeMap<String, f64> = BTreeMap::new();
    let mut leaves = 0u64;
    for round_index in 0..period {
        let share = 1.0 / period as f64;
        let mut stack = vec![Vec::new()];
        while let Some(prefix) = stack.pop() {
            let mut walker = BranchWalker::new(prefix);
            let t = trial_round(&strategy, &spec.policies, &pairs, round_index, &mut walker)?;
            let w = walker.weight * share;
            stack.append(&mut walker.pending);
            leaves += 1;
            *outcomes.entry(t.outcome.kind.key()).or_default() += w;
            for e in round_events(&t) {
                *events.entry(e).or_default() += w;
            }
        }
    }
    Ok(OutcomeDistribution {
        outcomes,
        events,
        leaves,
    })
}

/// `(k, (1 - p)^k)` for `k = 1..=n`: the chance of surviving `k` rounds undetected.
pub fn survival_curve(per_round_p: f64, n: u64) -> Vec<(u64, f64)> {
    assert!(
        (0.0..=1.0).contains(&per_round_p),
        "per-round probability {per_round_p} outside [0, 1]"
    );
    (1..=n)
        .map(|k| (k, (1.0 - per_round_p).powi(k as i32)))
        .collect()
}

/// Two-sided Wilson score interval for a binomial proportion.
pub fn binomial_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials >= 1, "binomial interval needs at least one trial");
    assert!(successes <= trials, "more successes than trials");
    assert!(
        confidence > 0.0 && confidence < 1.0,
        "confidence must lie in (0, 1)"
    );
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
