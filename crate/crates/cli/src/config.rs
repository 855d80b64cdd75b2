use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sqpc_core::montecarlo::{ExperimentConfig, ExperimentSpec};
use sqpc_core::protocol::{format_bits, parse_bits, Policies};
use sqpc_core::{Bit, StrategySpec};

use crate::error::CliError;

pub const SEED_ENV: &str = "SQPC_SEED";
pub const DEFAULT_ATTACK_ROUNDS: u64 = 100_000;
/// Secrets used when an attack config has none: every `(m_a, m_b)` pair once.
pub const DEFAULT_SECRET_A: &str = "0011";
pub const DEFAULT_SECRET_B: &str = "0101";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// The JSON config document. Every field is optional; command-line flags
/// override whatever is present.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub strategy: Option<String>,
    pub policies: Option<Policies>,
    pub secret_a: Option<String>,
    pub secret_b: Option<String>,
    pub rounds: Option<u64>,
    pub master_seed: Option<u64>,
    pub parallelism: Option<usize>,
    pub max_rounds: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }

    /// Applies `flags` on top of this config.
    pub fn overlay(mut self, flags: &CommonFlags) -> Self {
        macro_rules! take {
            ($($field:ident),*) => { $( if flags.$field.is_some() { self.$field = flags.$field.clone(); } )* };
        }
        take!(
            strategy,
            secret_a,
            secret_b,
            rounds,
            parallelism,
            out,
            format
        );
        if flags.seed.is_some() {
            self.master_seed = flags.seed;
        }
        self
    }

    pub fn strategy(&self) -> Result<StrategySpec, CliError> {
        match &self.strategy {
            None => Ok(StrategySpec::None),
            Some(s) => s.parse().map_err(|e| CliError::Usage(format!("{e}"))),
        }
    }

    /// Flag or config value, then `SQPC_SEED`, then 0.
    pub fn seed(&self) -> Result<u64, CliError> {
        if let Some(s) = self.master_seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not a u64 seed"))),
            Err(_) => Ok(0),
        }
    }

    fn secrets(&self, defaults: Option<(&str, &str)>) -> Result<(Vec<Bit>, Vec<Bit>), CliError> {
        let pick = |given: &Option<String>,
                    fallback: Option<&str>,
                    who: &str|
         -> Result<Vec<Bit>, CliError> {
            let text = given
                .as_deref()
                .or(fallback)
                .ok_or_else(|| CliError::Usage(format!("missing secret_{who}")))?;
            parse_bits(text).map_err(|e| CliError::Usage(format!("secret_{who}: {e}")))
        };
        let a = pick(&self.secret_a, defaults.map(|d| d.0), "a")?;
        let b = pick(&self.secret_b, defaults.map(|d| d.1), "b")?;
        if a.is_empty() || a.len() != b.len() {
            return Err(CliError::Usage(format!(
                "secrets must be nonempty and of equal length, got {:?} and {:?}",
                format_bits(&a),
                format_bits(&b)
            )));
        }
        Ok((a, b))
    }

    /// Spec for `run`: secrets are required.
    pub fn protocol_spec(&self) -> Result<ExperimentSpec, CliError> {
        let strategy = self.strategy()?;
        let (secret_a, secret_b) = self.secrets(None)?;
        let spec = ExperimentSpec {
            strategy,
            policies: self.policies.clone().unwrap_or_default(),
            secret_a,
            secret_b,
        };
        spec.validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(spec)
    }

    /// Full experiment for `attack`, filling in default secrets and round count.
    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let strategy = self.strategy()?;
        let (secret_a, secret_b) = self.secrets(Some((DEFAULT_SECRET_A, DEFAULT_SECRET_B)))?;
        let config = ExperimentConfig {
            spec: ExperimentSpec {
                strategy,
                policies: self.policies.clone().unwrap_or_default(),
                secret_a,
                secret_b,
            },
            rounds: self.rounds.unwrap_or(DEFAULT_ATTACK_ROUNDS),
            master_seed: self.seed()?,
            parallelism: self.parallelism.unwrap_or(1),
        };
        config
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Clone, Debug, Default, clap::Args)]
pub struct CommonFlags {
    /// JSON config document; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (falls back to the config, then SQPC_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rounds: Option<u64>,
    /// Adversary, as `name[:param,param]`.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Alice's secret as a 0/1 string.
    #[arg(long)]
    pub secret_a: Option<String>,
    #[arg(long)]
    pub secret_b: Option<String>,
}

impl CommonFlags {
    pub fn resolve(&self) -> Result<CliConfig, CliError> {
        let base = match &self.config {
            Some(p) => CliConfig::load(p)?,
            None => CliConfig::default(),
        };
        let config = base.overlay(self);
        config.strategy()?;
        Ok(config)
    }
}
