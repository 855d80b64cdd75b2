use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sqpc_core::adversaries::ReportRow;
use sqpc_core::montecarlo::{
    enumerate_exact, run_trials, survival_curve, MonteCarloError, OutcomeDistribution,
};
use sqpc_core::protocol::{
    default_max_rounds, format_bits, run_protocol, write_jsonl, ProtocolError,
};
use sqpc_core::verify::{
    swap_worked_example, verify_born_properties, verify_swap_identity, SwapReport, WorkedExample,
};
use sqpc_core::{AttackReport, BellIndex, ProtocolVerdict, Stats, Strategy, StrategySpec, VERSION};

use crate::config::{CommonFlags, Format};
use crate::error::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, body: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(body)?;
            w.flush()?;
        }
        None => std::io::stdout().write_all(body)?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn protocol_error(e: ProtocolError) -> CliError {
    match e {
        ProtocolError::LengthMismatch(..)
        | ProtocolError::EmptySecret
        | ProtocolError::NoRounds => CliError::Usage(e.to_string()),
        other => CliError::Internal(other.to_string()),
    }
}

fn montecarlo_error(e: MonteCarloError) -> CliError {
    match e {
        MonteCarloError::Config(_) | MonteCarloError::Adversary(_) => {
            CliError::Usage(e.to_string())
        }
        MonteCarloError::Protocol(p) => protocol_error(p),
        MonteCarloError::UnsupportedStrategy(_) => CliError::Internal(e.to_string()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerifySwapOutput {
    pub toolkit_version: String,
    pub swap: SwapReport,
    pub worked_example: WorkedExample,
    pub born_failures: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ComboRow {
    is_a: String,
    is_b: String,
    passed: bool,
}

pub fn verify_swap(flags: &CommonFlags) -> Result<(), CliError> {
    let config = flags.resolve()?;
    let output = VerifySwapOutput {
        toolkit_version: VERSION.to_string(),
        swap: verify_swap_identity(),
        worked_example: swap_worked_example(),
        born_failures: verify_born_properties(),
    };
    let swap = &output.swap;
    let w = &output.worked_example;
    match config.format {
        Some(Format::Json) => emit(config.out.as_deref(), &to_json(&output)?)?,
        Some(Format::Csv) => {
            let rows = BellIndex::ALL
                .into_iter()
                .flat_map(|a| BellIndex::ALL.into_iter().map(move |b| (a, b)));
            let rows = rows.map(|(a, b)| ComboRow {
                is_a: a.name().to_string(),
                is_b: b.name().to_string(),
                passed: !swap.failures.iter().any(|f| f.is_a == a && f.is_b == b)
                    && !swap.unnormalized.contains(&(a, b)),
            });
            emit(config.out.as_deref(), &to_csv(rows)?)?;
        }
        None => {
            let mut text = format!(
                "{}/{} initial-state combinations satisfy the swap identity ({} measurement branches)\n",
                swap.passed, swap.combinations, swap.branches
            );
            text += &format!(
                "worked example: φ+ ⊗ φ+, P(outcome on (1,3)) = {:?}; given φ- on (1,3), P on (2,4) = {:?} (partner φ-)\n",
                w.first_pair_probabilities, w.partner_given_phi_minus
            );
            if output.born_failures.is_empty() {
                text += "Born-rule property suite: all cases pass\n";
            } else {
                text += &format!(
                    "Born-rule property suite: {} failures\n",
                    output.born_failures.len()
                );
            }
            emit(config.out.as_deref(), text.as_bytes())?;
        }
    }
    if let Some(f) = swap.failures.first() {
        return Err(CliError::Verification(format!(
            "swap identity fails for IS_A={}, IS_B={}: outcome m13={}, m24={} (probability {})",
            f.is_a.name(),
            f.is_b.name(),
            f.m13.name(),
            f.m24.name(),
            f.probability
        )));
    }
    if let Some((a, b)) = swap.unnormalized.first() {
        return Err(CliError::Verification(format!(
            "branch probabilities do not sum to 1 for IS_A={}, IS_B={}",
            a.name(),
            b.name()
        )));
    }
    let expected_partner = [0.0, 1.0, 0.0, 0.0];
    if w.first_pair_probabilities != [0.25; 4] || w.partner_given_phi_minus != expected_partner {
        return Err(CliError::Verification(format!(
            "worked example mismatch: {w:?}"
        )));
    }
    if let Some(f) = output.born_failures.first() {
        return Err(CliError::Verification(f.clone()));
    }
    Ok(())
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub toolkit_version: String,
    pub master_seed: u64,
    pub strategy: String,
    pub secret_len: usize,
    pub rounds_used: u64,
    pub verdict: ProtocolVerdict,
}

pub fn run(flags: &CommonFlags, max_rounds: Option<u64>) -> Result<(), CliError> {
    let mut config = flags.resolve()?;
    if max_rounds.is_some() {
        config.max_rounds = max_rounds;
    }
    let spec = config.protocol_spec()?;
    let seed = config.seed()?;
    let strategy =
        Strategy::from_spec(spec.strategy).map_err(|e| CliError::Usage(e.to_string()))?;
    let budget = config
        .max_rounds
        .unwrap_or_else(|| default_max_rounds(spec.secret_a.len()));
    let (verdict, transcripts) = run_protocol(
        &spec.secret_a,
        &spec.secret_b,
        &spec.policies,
        &strategy,
        seed,
        budget,
    )
    .map_err(protocol_error)?;
    if let Some(path) = &config.out {
        let mut w = create(path)?;
        write_jsonl(&mut w, &transcripts)?;
        w.flush()?;
    }
    let summary = RunSummary {
        toolkit_version: VERSION.to_string(),
        master_seed: seed,
        strategy: spec.strategy.to_string(),
        secret_len: spec.secret_a.len(),
        rounds_used: transcripts.len() as u64,
        verdict,
    };
    match config.format {
        Some(Format::Json) => emit(None, &to_json(&summary)?),
        Some(Format::Csv) => emit(None, &to_csv([&summary])?),
        None => {
            println!("{}", summary.verdict);
            eprintln!(
                "seed {}, {} rounds, strategy {}, secrets {} / {}",
                seed,
                summary.rounds_used,
                summary.strategy,
                format_bits(&spec.secret_a),
                format_bits(&spec.secret_b)
            );
            Ok(())
        }
    }
}

/// One CSV line of an attack report, with provenance repeated on each row.
#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvReportRow {
    pub toolkit_version: String,
    pub strategy: String,
    pub master_seed: u64,
    pub rounds: u64,
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

fn csv_rows(report: &AttackReport) -> impl Iterator<Item = CsvReportRow> + '_ {
    report.rows.iter().map(|r: &ReportRow| CsvReportRow {
        toolkit_version: report.toolkit_version.clone(),
        strategy: report.strategy.clone(),
        master_seed: report.master_seed,
        rounds: report.rounds,
        quantity: r.quantity.clone(),
        count: r.count,
        trials: r.trials,
        empirical: r.empirical,
        ci_low: r.ci_low,
        ci_high: r.ci_high,
        exact: r.exact,
        reference: r.reference,
        reference_label: r.reference_label.clone(),
        note: r.note.clone(),
    })
}

fn table(report: &AttackReport) -> String {
    let mut s = format!(
        "strategy {} | seed {} | {} rounds | toolkit {}\n",
        report.strategy, report.master_seed, report.rounds, report.toolkit_version
    );
    s += &format!(
        "{:<28} {:>10} {:>23} {:>10} {:>10}  note\n",
        "quantity", "empirical", "95% CI", "exact", "reference"
    );
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
    for r in &report.rows {
        s += &format!(
            "{:<28} {:>10.6} [{:>9.6}, {:>9.6}] {:>10} {:>10}  {}\n",
            r.quantity,
            r.empirical,
            r.ci_low,
            r.ci_high,
            opt(r.exact),
            r.reference_label.clone().unwrap_or_else(|| "-".into()),
            r.note
        );
    }
    s
}

pub fn attack(flags: &CommonFlags) -> Result<(), CliError> {
    let cli = flags.resolve()?;
    let config = cli.experiment()?;
    Strategy::from_spec(config.spec.strategy).map_err(|e| CliError::Usage(e.to_string()))?;
    let stats = run_trials(&config).map_err(montecarlo_error)?;
    let exact = match enumerate_exact(&config.spec) {
        Ok(d) => Some(d),
        Err(MonteCarloError::UnsupportedStrategy(_)) => None,
        Err(e) => return Err(montecarlo_error(e)),
    };
    let report = AttackReport::build(&config, stats, exact);
    let body = match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report)?,
        Format::Csv => to_csv(csv_rows(&report))?,
    };
    emit(cli.out.as_deref(), &body)?;
    if cli.out.is_some() {
        print!("{}", table(&report));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InputSummary {
    pub path: PathBuf,
    pub strategy: String,
    pub master_seed: u64,
    pub rounds: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MergedReport {
    pub toolkit_version: String,
    pub inputs: Vec<InputSummary>,
    pub reports: Vec<AttackReport>,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    pub k: u64,
    pub survival: f64,
}

fn file_stem(strategy: &str) -> String {
    strategy
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn report(flags: &CommonFlags, inputs: &[PathBuf], horizon: u64) -> Result<(), CliError> {
    let config = flags.resolve()?;
    let out_dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out_dir.display())))?;

    let mut summaries = Vec::new();
    let mut groups: BTreeMap<String, Vec<AttackReport>> = BTreeMap::new();
    for path in inputs {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let report: AttackReport = serde_json::from_str(&text).map_err(|e| {
            CliError::Usage(format!("{} is not an attack report: {e}", path.display()))
        })?;
        summaries.push(InputSummary {
            path: path.clone(),
            strategy: report.strategy.clone(),
            master_seed: report.master_seed,
            rounds: report.rounds,
        });
        groups
            .entry(report.strategy.clone())
            .or_default()
            .push(report);
    }

    let mut merged = Vec::new();
    for (name, reports) in groups {
        let spec: StrategySpec = name.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
        let stats = reports
            .iter()
            .skip(1)
            .fold(reports[0].stats.clone(), |acc: Stats, r| {
                acc.merge(&r.stats)
            });
        let exact: Option<OutcomeDistribution> = reports.iter().find_map(|r| r.exact.clone());
        let report = AttackReport::from_parts(&spec, reports[0].master_seed, stats, exact);
        let rate = report.headline_rate();
        if !(0.0..=1.0).contains(&rate) {
            return Err(CliError::Internal(format!(
                "per-round rate {rate} for {name} is not a probability"
            )));
        }
        let curve = survival_curve(rate, horizon)
            .into_iter()
            .map(|(k, survival)| SurvivalRow { k, survival });
        let path = out_dir.join(format!("survival_{}.csv", file_stem(&name)));
        emit(Some(&path), &to_csv(curve)?)?;
        println!(
            "{}: per-round detection {rate:.6}, survival curve in {}",
            name,
            path.display()
        );
        merged.push(report);
    }

    let format = config.format.unwrap_or(Format::Json);
    let (file, body) = match format {
        Format::Json => (
            "merged.json",
            to_json(&MergedReport {
                toolkit_version: VERSION.to_string(),
                inputs: summaries,
                reports: merged,
            })?,
        ),
        Format::Csv => ("merged.csv", to_csv(merged.iter().flat_map(csv_rows))?),
    };
    let path = out_dir.join(file);
    emit(Some(&path), &body)?;
    println!("merged report in {}", path.display());
    Ok(())
}
