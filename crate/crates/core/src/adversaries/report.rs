use serde::{Deserialize, Serialize};

use crate::montecarlo::{ExperimentConfig, OutcomeDistribution, Stats};

use super::{InnerAttack, MPolicy, StrategySpec, Target};

/// A per-round detection rate published for a strategy, to set beside the
/// exact and empirical values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFigure {
    pub event: String,
    pub per_round: f64,
    pub label: String,
}

fn figure(event: String, per_round: f64, label: &str) -> ReferenceFigure {
    ReferenceFigure {
        event,
        per_round,
        label: label.to_string(),
    }
}

/// Published per-round detection figures for `spec`, keyed by event.
pub fn reference_figure(spec: &StrategySpec) -> Vec<ReferenceFigure> {
    let per_victim = |target: Target, case: u8| -> Vec<ReferenceFigure> {
        target
            .roles()
            .into_iter()
            .map(|r| figure(format!("detect.case{case}.{}", r.lower()), 0.125, "1/8"))
            .collect()
    };
    match *spec {
        StrategySpec::None => Vec::new(),
        StrategySpec::EveMeasureResend { target } => per_victim(target, 2),
        StrategySpec::EveFakeQubit { target, .. } => per_victim(target, 1),
        StrategySpec::MaliciousParticipant { attacker, inner } => {
            let victim = Target::from(attacker.other());
            match inner {
                InnerAttack::MeasureResend => per_victim(victim, 2),
                InnerAttack::FakeQubit(_) => per_victim(victim, 1),
            }
        }
        StrategySpec::TpFakeSingles {
            policy: MPolicy::HonestCompute,
        } => {
            vec![figure("detect.step5".into(), 1.0 / 16.0, "1/16")]
        }
        StrategySpec::TpFakeSingles { .. } => Vec::new(),
        StrategySpec::TpWrongPairing => vec![figure("detect.step5".into(), 1.0 / 32.0, "1/32")],
    }
}

/// One line of an attack report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub quantity: String,
    pub count: u64,
    pub trials: u64,
    pub empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub exact: Option<f64>,
    pub reference: Option<f64>,
    pub reference_label: Option<String>,
    pub note: String,
}

/// Detection statistics of one strategy: empirical rates, the exact oracle
/// values and any published figure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub toolkit_version: String,
    pub strategy: String,
    pub master_seed: u64,
    pub rounds: u64,
    pub stats: Stats,
    pub exact: Option<OutcomeDistribution>,
    pub references: Vec<ReferenceFigure>,
    pub rows: Vec<ReportRow>,
    /// Event whose per-round rate drives the survival curve.
    pub headline: Option<String>,
}

const FIXED_ROWS: [&str; 7] = [
    "detect.any",
    "detect.case1.alice",
    "detect.case1.bob",
    "detect.case2.alice",
    "detect.case2.bob",
    "detect.step5",
    "compared",
];

impl AttackReport {
    pub fn build(
        config: &ExperimentConfig,
        stats: Stats,
        exact: Option<OutcomeDistribution>,
    ) -> Self {
        Self::from_parts(&config.spec.strategy, config.master_seed, stats, exact)
    }

    /// Builds a report from already collected statistics, e.g. merged runs.
    pub fn from_parts(
        strategy: &StrategySpec,
        master_seed: u64,
        stats: Stats,
        exact: Option<OutcomeDistribution>,
    ) -> Self {
        let references = reference_figure(strategy);
        let mut rows: Vec<ReportRow> = FIXED_ROWS
            .iter()
            .map(|&q| {
                let est = stats.estimate(q);
                let exact_p = exact.as_ref().map(|d| d.event(q));
                let reference = references.iter().find(|r| r.event == q);
                let note = match (reference, exact_p) {
                    (Some(r), Some(p)) if (r.per_round - p).abs() > 1e-12 => {
                        format!(
                            "reference figure {} differs from the exact value {p}",
                            r.label
                        )
                    }
                    (Some(r), Some(_)) => {
                        format!("exact value agrees with reference figure {}", r.label)
                    }
                    (Some(r), None) => format!("reference figure {}", r.label),
                    (None, _) => String::new(),
                };
                ReportRow {
                    quantity: q.to_string(),
                    count: est.count,
                    trials: est.trials,
                    empirical: est.p_hat,
                    ci_low: est.ci_low,
                    ci_high: est.ci_high,
                    exact: exact_p,
                    reference: reference.map(|r| r.per_round),
                    reference_label: reference.map(|r| r.label.clone()),
                    note,
                }
            })
            .collect();
        for (key, tally) in &stats.leaks {
            let exact_freq = exact.as_ref().and_then(|d| d.leak_frequency(key));
            rows.push(ReportRow {
                quantity: format!("leak.{key}"),
                count: tally.correct,
                trials: tally.attempts,
                empirical: tally.frequency,
                ci_low: tally.ci_low,
                ci_high: tally.ci_high,
                exact: exact_freq,
                reference: None,
                reference_label: None,
                note: "fraction of compared rounds where the adversary's guess of the secret bit was right".into(),
            });
        }
        AttackReport {
            toolkit_version: crate::VERSION.to_string(),
            strategy: strategy.to_string(),
            master_seed,
            rounds: stats.rounds,
            stats,
            exact,
            headline: references.first().map(|r| r.event.clone()),
            references,
            rows,
        }
    }

    /// Per-round rate of the headline event (`detect.any` when the strategy has
    /// none): the exact value when available, otherwise the empirical estimate.
    pub fn headline_rate(&self) -> f64 {
        let event = self.headline.as_deref().unwrap_or("detect.any");
        match &self.exact {
            Some(d) => d.event(event),
            None => self.stats.estimate(event).p_hat,
        }
    }
}
