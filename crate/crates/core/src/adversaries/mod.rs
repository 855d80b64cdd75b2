//! Attack strategies: channel taps run by an outsider or a malicious client, and
//! behaviour overrides for a dishonest TP.
//!
//! A [`Strategy`] bundles zero or more taps with one TP behaviour. Strategies are
//! immutable configuration; anything a tap remembers during a round lives in the
//! round's [`TapMemory`].

mod report;
mod taps;
mod tp;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{Role, Slot, TapMemory};
use crate::qsim::{BellIndex, Bit, Randomness, StateVector};

pub use report::{reference_figure, AttackReport, ReferenceFigure, ReportRow};
pub use taps::{
    eve_fake_qubit, eve_measure_resend, malicious_participant, FakeQubit, MaliciousParticipant,
    MeasureResend,
};
pub use tp::{tp_fake_singles, tp_wrong_pairing, FakeSingles, HonestTp, MPolicy, WrongPairing};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("bad parameter for {strategy}: {reason}")]
    BadParameter { strategy: String, reason: String },
    #[error("{attacker} cannot tap its own channel")]
    TargetMismatch { attacker: Role },
}

/// Which client channel(s) a tap sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Alice,
    Bob,
    Both,
}

impl Target {
    pub fn covers(self, role: Role) -> bool {
        matches!(
            (self, role),
            (Target::Both, _) | (Target::Alice, Role::Alice) | (Target::Bob, Role::Bob)
        )
    }

    pub fn roles(self) -> Vec<Role> {
        Role::BOTH.into_iter().filter(|&r| self.covers(r)).collect()
    }
}

impl From<Role> for Target {
    fn from(r: Role) -> Self {
        match r {
            Role::Alice => Target::Alice,
            Role::Bob => Target::Bob,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Alice => "alice",
            Target::Bob => "bob",
            Target::Both => "both",
        })
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "both" => Ok(Target::Both),
            other => other.parse::<Role>().map(Target::from),
        }
    }
}

/// The qubit travelling on one client channel, as a tap sees it.
pub struct Transit<'a> {
    pub role: Role,
    pub register: &'a mut StateVector,
    pub slot: &'a mut Slot,
    pub memory: &'a mut TapMemory,
}

/// An interceptor on the quantum channel between TP and a client. It never
/// touches the qubits TP retains.
pub trait ChannelTap: fmt::Debug + Send + Sync {
    fn name(&self) -> String;

    fn target(&self) -> Target;

    /// Participant running the tap, if it is not an outsider.
    fn credited_to(&self) -> Option<Role> {
        None
    }

    fn on_tp_to_client(&self, transit: &mut Transit<'_>, rng: &mut dyn Randomness);

    fn on_client_to_tp(&self, transit: &mut Transit<'_>, rng: &mut dyn Randomness);

    /// False when the tap draws from a continuous distribution.
    fn is_discrete(&self) -> bool {
        true
    }
}

/// What TP sends out at the start of a round.
#[derive(Clone, Debug)]
pub struct Preparation {
    /// Claimed initial states.
    pub is_a: BellIndex,
    pub is_b: BellIndex,
    pub register: StateVector,
    /// Z values when TP prepared single photons.
    pub prepared_bits: Option<[Bit; 4]>,
}

/// TP's knowledge when it handles Case 3. Deliberately carries no client flag or
/// measurement result.
pub struct Case3View<'a> {
    pub is_a: BellIndex,
    pub is_b: BellIndex,
    pub register: &'a StateVector,
    pub prepared_bits: Option<[Bit; 4]>,
}

#[derive(Clone, Debug)]
pub struct Case3Decision {
    pub register: StateVector,
    pub m_flag: Bit,
    pub announced: Option<BellIndex>,
    pub bell_a1b1: Option<BellIndex>,
    pub bell_a2b2: Option<BellIndex>,
    /// Bit TP uses as `C_T` if the round reaches the comparison.
    pub c_t: Bit,
    /// TP's belief about each client's Z result, indexed by [`Role::index`].
    pub inferred_mr: [Option<Bit>; 2],
}

/// TP conduct. The default methods are the honest protocol.
pub trait TpBehavior: fmt::Debug + Send + Sync {
    fn name(&self) -> String;

    fn prepare(&self, rng: &mut dyn Randomness) -> Preparation;

    /// Whether TP acts on failed Case 1/2 checks. A TP that sent fake states
    /// has no reason to abort on its own forgery.
    fn enforces_checks(&self) -> bool {
        true
    }

    fn case3(&self, view: Case3View<'_>, rng: &mut dyn Randomness) -> Case3Decision;

    fn is_discrete(&self) -> bool {
        true
    }
}

/// Inner attack a malicious participant runs on the other client's channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InnerAttack {
    MeasureResend,
    FakeQubit(Bit),
}

/// Named, parameterised strategy as written in configs and on the command line.
///
/// Grammar: `name[:param,param...]`, e.g. `eve_measure_resend:alice`,
/// `eve_fake_qubit:both,1`, `tp_fake_singles:coin`,
/// `malicious_participant:alice,fake_qubit,0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum StrategySpec {
    #[default]
    None,
    EveMeasureResend {
        target: Target,
    },
    EveFakeQubit {
        target: Target,
        fake_value: Bit,
    },
    TpFakeSingles {
        policy: MPolicy,
    },
    TpWrongPairing,
    MaliciousParticipant {
        attacker: Role,
        inner: InnerAttack,
    },
}

impl StrategySpec {
    pub fn base_name(&self) -> &'static str {
        match self {
            StrategySpec::None => "none",
            StrategySpec::EveMeasureResend { .. } => "eve_measure_resend",
            StrategySpec::EveFakeQubit { .. } => "eve_fake_qubit",
            StrategySpec::TpFakeSingles { .. } => "tp_fake_singles",
            StrategySpec::TpWrongPairing => "tp_wrong_pairing",
            StrategySpec::MaliciousParticipant { .. } => "malicious_participant",
        }
    }

    /// Every strategy the toolkit ships, with default parameters.
    pub fn catalogue() -> Vec<StrategySpec> {
        vec![
            StrategySpec::None,
            StrategySpec::EveMeasureResend {
                target: Target::Alice,
            },
            StrategySpec::EveFakeQubit {
                target: Target::Alice,
                fake_value: Bit::ZERO,
            },
            StrategySpec::TpFakeSingles {
                policy: MPolicy::HonestCompute,
            },
            StrategySpec::TpFakeSingles {
                policy: MPolicy::AlwaysZero,
            },
            StrategySpec::TpFakeSingles {
                policy: MPolicy::AlwaysOne,
            },
            StrategySpec::TpFakeSingles {
                policy: MPolicy::Coin,
            },
            StrategySpec::TpWrongPairing,
            StrategySpec::MaliciousParticipant {
                attacker: Role::Alice,
                inner: InnerAttack::MeasureResend,
            },
        ]
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.base_name();
        match self {
            StrategySpec::None | StrategySpec::TpWrongPairing => f.write_str(name),
            StrategySpec::EveMeasureResend { target } => write!(f, "{name}:{target}"),
            StrategySpec::EveFakeQubit { target, fake_value } => {
                write!(f, "{name}:{target},{fake_value}")
            }
            StrategySpec::TpFakeSingles { policy } => write!(f, "{name}:{policy}"),
            StrategySpec::MaliciousParticipant { attacker, inner } => {
                write!(f, "{name}:{}", attacker.lower())?;
                match inner {
                    InnerAttack::MeasureResend => f.write_str(",measure_resend"),
                    InnerAttack::FakeQubit(v) => write!(f, ",fake_qubit,{v}"),
                }
            }
        }
    }
}

impl FromStr for StrategySpec {
    type Err = AdversaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), p.split(',').map(str::trim).collect::<Vec<_>>()),
            None => (s.trim(), Vec::new()),
        };
        let bad = |reason: String| AdversaryError::BadParameter {
            strategy: name.to_string(),
            reason,
        };
        let bit = |p: &str| -> Result<Bit, AdversaryError> {
            match p {
                "0" => Ok(Bit::ZERO),
                "1" => Ok(Bit::ONE),
                other => Err(bad(format!("expected 0 or 1, got {other:?}"))),
            }
        };
        let target = |p: Option<&&str>| -> Result<Target, AdversaryError> {
            p.map_or(Ok(Target::Alice), |t| t.parse().map_err(&bad))
        };
        let too_many = |max: usize| -> Result<(), AdversaryError> {
            if params.len() > max {
                Err(bad(format!(
                    "takes at most {max} parameter(s), got {}",
                    params.len()
                )))
            } else {
                Ok(())
            }
        };
        match name {
            "none" | "honest" => {
                too_many(0)?;
                Ok(StrategySpec::None)
            }
            "eve_measure_resend" => {
                too_many(1)?;
                Ok(StrategySpec::EveMeasureResend {
                    target: target(params.first())?,
                })
            }
            "eve_fake_qubit" => {
                too_many(2)?;
                let fake_value = params.get(1).map_or(Ok(Bit::ZERO), |p| bit(p))?;
                Ok(StrategySpec::EveFakeQubit {
                    target: target(params.first())?,
                    fake_value,
                })
            }
            "tp_fake_singles" => {
                too_many(1)?;
                let policy = params
                    .first()
                    .map_or(Ok(MPolicy::HonestCompute), |p| p.parse().map_err(&bad))?;
                Ok(StrategySpec::TpFakeSingles { policy })
            }
            "tp_wrong_pairing" => {
                too_many(0)?;
                Ok(StrategySpec::TpWrongPairing)
            }
            "malicious_participant" => {
                too_many(3)?;
                let attacker = params
                    .first()
                    .ok_or_else(|| bad("missing attacker".into()))?
                    .parse::<Role>()
                    .map_err(&bad)?;
                let inner = match params.get(1).copied().unwrap_or("measure_resend") {
                    "measure_resend" | "eve_measure_resend" => InnerAttack::MeasureResend,
                    "fake_qubit" | "eve_fake_qubit" => {
                        InnerAttack::FakeQubit(params.get(2).map_or(Ok(Bit::ZERO), |p| bit(p))?)
                    }
                    other => return Err(bad(format!("unknown inner attack {other:?}"))),
                };
                Ok(StrategySpec::MaliciousParticipant { attacker, inner })
            }
            other => Err(AdversaryError::UnknownStrategy(other.to_string())),
        }
    }
}

impl Serialize for StrategySpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StrategySpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Installed adversary configuration for a run.
#[derive(Clone, Debug)]
pub struct Strategy {
    pub spec: StrategySpec,
    pub taps: Vec<Arc<dyn ChannelTap>>,
    pub tp: Arc<dyn TpBehavior>,
}

impl Strategy {
    pub fn honest() -> Self {
        Strategy {
            spec: StrategySpec::None,
            taps: Vec::new(),
            tp: Arc::new(HonestTp),
        }
    }

    pub fn from_spec(spec: StrategySpec) -> Result<Self, AdversaryError> {
        let mut strategy = Strategy::honest();
        strategy.spec = spec;
        match spec {
            StrategySpec::None => {}
            StrategySpec::EveMeasureResend { target } => {
                strategy.taps.push(Arc::new(eve_measure_resend(target)))
            }
            StrategySpec::EveFakeQubit { target, fake_value } => strategy
                .taps
                .push(Arc::new(eve_fake_qubit(target, fake_value))),
            StrategySpec::TpFakeSingles { policy } => {
                strategy.tp = Arc::new(tp_fake_singles(policy))
            }
            StrategySpec::TpWrongPairing => strategy.tp = Arc::new(tp_wrong_pairing()),
            StrategySpec::MaliciousParticipant { attacker, inner } => {
                let victim = Target::from(attacker.other());
                let inner: Arc<dyn ChannelTap> = match inner {
                    InnerAttack::MeasureResend => Arc::new(eve_measure_resend(victim)),
                    InnerAttack::FakeQubit(v) => Arc::new(eve_fake_qubit(victim, v)),
                };
                strategy
                    .taps
                    .push(Arc::new(malicious_participant(attacker, inner)?));
            }
        }
        Ok(strategy)
    }

    pub fn name(&self) -> String {
        self.spec.to_string()
    }

    pub fn is_discrete(&self) -> bool {
        self.tp.is_discrete() && self.taps.iter().all(|t| t.is_discrete())
    }
}
