//! The three-party round state machine: TP preparation, client flag handling,
//! the TP dispatch table, entanglement-swapping comparison and the public
//! discussion that exposes a dishonest TP.

mod round;
mod steps;
mod transcript;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qsim::{BellIndex, Bit, QsimError, Randomness, StateVector};

pub use round::{
    client_step3, default_max_rounds, run_protocol, run_round, tp_prepare_round, RoundRng,
    RoundStreams, Stream,
};
pub use steps::{
    case1_check, case2_check, case3_compute_m, step5_discussion, step6_compare, tp_dispatch,
    CheckResult, ClientCheck, Comparison, Step5Result, TpAction,
};
pub use transcript::{read_jsonl, write_jsonl, Message, MessageKind, Party};

/// Register positions of the four qubits of a round.
pub mod qubit {
    pub const A1: usize = 0;
    pub const A2: usize = 1;
    pub const B1: usize = 2;
    pub const B2: usize = 3;
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("secret lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("secrets must be nonempty")]
    EmptySecret,
    #[error("max_rounds must be at least 1")]
    NoRounds,
    #[error("inconsistent dispatch input: {0}")]
    InconsistentInput(String),
    #[error("TP announced M=0 without a Bell result")]
    MissingAnnouncement,
    #[error("no uncompared secret bits remain")]
    AccumulatorExhausted,
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

/// A client of the protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Alice,
    Bob,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::Alice, Role::Bob];

    pub fn index(self) -> usize {
        match self {
            Role::Alice => 0,
            Role::Bob => 1,
        }
    }

    pub fn other(self) -> Role {
        match self {
            Role::Alice => Role::Bob,
            Role::Bob => Role::Alice,
        }
    }

    /// Register position of the qubit sent to this client.
    pub fn travelling_qubit(self) -> usize {
        match self {
            Role::Alice => qubit::A1,
            Role::Bob => qubit::B1,
        }
    }

    /// Register position of the partner TP keeps.
    pub fn retained_qubit(self) -> usize {
        match self {
            Role::Alice => qubit::A2,
            Role::Bob => qubit::B2,
        }
    }

    pub fn lower(self) -> &'static str {
        match self {
            Role::Alice => "alice",
            Role::Bob => "bob",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Alice => "Alice",
            Role::Bob => "Bob",
        })
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "alice" | "a" => Ok(Role::Alice),
            "bob" | "b" => Ok(Role::Bob),
            other => Err(format!("unknown participant {other:?}")),
        }
    }
}

/// The check/compare flags a client sets for one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Flags {
    /// 0: check for an eavesdropper with TP; 1: check TP (or compare).
    pub i1: Bit,
    /// 0: measure and resend; 1: reflect.
    pub i2: Bit,
}

impl Flags {
    pub fn new(i1: u8, i2: u8) -> Self {
        Flags {
            i1: Bit::from(i1 != 0),
            i2: Bit::from(i2 != 0),
        }
    }

    /// All four flag settings.
    pub fn all() -> [Flags; 4] {
        [
            Flags::new(0, 0),
            Flags::new(0, 1),
            Flags::new(1, 0),
            Flags::new(1, 1),
        ]
    }

    /// What the client tells TP before Step 5: `i2` only when `i1 = 0`.
    pub fn revealed_i2(self) -> Option<Bit> {
        (!self.i1.is_one()).then_some(self.i2)
    }
}

/// How a client picks its flags.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientPolicy {
    /// `i1` and `i2` independent fair coins every round.
    #[default]
    Uniform,
    /// Round `k` uses `script[k % script.len()]`.
    Scripted(Vec<Flags>),
}

impl ClientPolicy {
    pub fn draw(&self, round_index: u64, rng: &mut dyn Randomness) -> Flags {
        match self {
            ClientPolicy::Uniform => {
                let i1 = rng.coin();
                let i2 = rng.coin();
                Flags { i1, i2 }
            }
            ClientPolicy::Scripted(script) => {
                assert!(
                    !script.is_empty(),
                    "scripted policy needs at least one entry"
                );
                script[(round_index % script.len() as u64) as usize]
            }
        }
    }
}

/// Flag policies of both clients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policies {
    #[serde(default)]
    pub alice: ClientPolicy,
    #[serde(default)]
    pub bob: ClientPolicy,
}

impl Policies {
    pub fn scripted(alice: Flags, bob: Flags) -> Self {
        Policies {
            alice: ClientPolicy::Scripted(vec![alice]),
            bob: ClientPolicy::Scripted(vec![bob]),
        }
    }

    pub fn get(&self, role: Role) -> &ClientPolicy {
        match role {
            Role::Alice => &self.alice,
            Role::Bob => &self.bob,
        }
    }
}

/// Whether the qubit a client returned is the one TP sent or one it prepared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitOrigin {
    Original,
    ClientPrepared,
}

/// What currently travels on a client's channel.
#[derive(Clone, Debug, PartialEq)]
pub enum Slot {
    /// The register qubit at the client's travelling position.
    Register,
    /// A qubit outside the register (a substitute); the register qubit is withheld.
    Detached(StateVector),
}

/// Per-round scratch space of one tap on one channel.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TapMemory {
    /// Z value the tap observed on the TP-to-client leg.
    pub observed: Option<Bit>,
    /// The tap holds the genuine qubit and forwarded something else.
    pub withheld: bool,
    /// The tap's prediction of the client's measurement result.
    pub predicted_mr: Option<Bit>,
}

/// Result of one TP-side check on one client.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckRecord {
    pub client: Role,
    pub check: ClientCheck,
    /// `None` when the check was ignored or waived by a dishonest TP.
    pub result: Option<CheckResult>,
}

/// An adversary's guess at a client's secret bit in a compared round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Inference {
    pub by: &'static str,
    pub victim: Role,
    pub guess: Bit,
    pub truth: Bit,
}

/// All per-round protocol variables.
#[derive(Clone, Debug)]
pub struct RoundState {
    pub round_index: u64,
    pub is_a: BellIndex,
    pub is_b: BellIndex,
    /// Qubit order a1, a2, b1, b2.
    pub register: StateVector,
    /// Z values TP prepared when it emits single photons instead of Bell pairs.
    pub prepared_bits: Option<[Bit; 4]>,
    pub in_flight: [Slot; 2],
    pub flags_a: Option<Flags>,
    pub flags_b: Option<Flags>,
    pub mr_a: Option<Bit>,
    pub mr_b: Option<Bit>,
    pub returned_a: QubitOrigin,
    pub returned_b: QubitOrigin,
    pub m_flag: Option<Bit>,
    pub announced_bell: Option<BellIndex>,
    pub tp_bell_a1b1: Option<BellIndex>,
    pub tp_bell_a2b2: Option<BellIndex>,
    pub checks: Vec<CheckRecord>,
    pub step5: Option<Step5Result>,
    pub comparison: Option<Comparison>,
    pub inferences: Vec<Inference>,
}

impl RoundState {
    pub fn flags(&self, role: Role) -> Option<Flags> {
        match role {
            Role::Alice => self.flags_a,
            Role::Bob => self.flags_b,
        }
    }

    pub fn mr(&self, role: Role) -> Option<Bit> {
        match role {
            Role::Alice => self.mr_a,
            Role::Bob => self.mr_b,
        }
    }

    pub fn is(&self, role: Role) -> BellIndex {
        match role {
            Role::Alice => self.is_a,
            Role::Bob => self.is_b,
        }
    }
}

/// Classification of a finished round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutcomeKind {
    /// A Z-basis check of a returned qubit failed.
    EveDetectedCase1,
    /// A Bell check of a reflected qubit with its retained partner failed.
    EveDetectedCase2,
    /// The clients' public discussion exposed TP.
    TPDetectedStep5,
    /// One client's check passed, the named client was ignored.
    ClientIgnored(Role),
    /// Case 3 ran but the clients could not check TP.
    NoCheckPossible,
    /// Every check performed this round passed.
    PassedCheck,
    ComparedBit(Bit),
}

impl OutcomeKind {
    pub fn is_detection(self) -> bool {
        matches!(
            self,
            Self::EveDetectedCase1 | Self::EveDetectedCase2 | Self::TPDetectedStep5
        )
    }

    /// Stable key used in statistics and reports.
    pub fn key(self) -> String {
        match self {
            Self::EveDetectedCase1 => "EveDetectedCase1".into(),
            Self::EveDetectedCase2 => "EveDetectedCase2".into(),
            Self::TPDetectedStep5 => "TPDetectedStep5".into(),
            Self::ClientIgnored(r) => format!("ClientIgnored({r})"),
            Self::NoCheckPossible => "NoCheckPossible".into(),
            Self::PassedCheck => "PassedCheck".into(),
            Self::ComparedBit(b) => format!("ComparedBit({b})"),
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundOutcome {
    pub kind: OutcomeKind,
    pub detail: String,
}

/// Ordered message log, final state and outcome of one round.
#[derive(Clone, Debug)]
pub struct RoundTranscript {
    pub messages: Vec<Message>,
    pub state: RoundState,
    pub outcome: RoundOutcome,
}

/// Secret bits of both clients and the comparison results so far.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComparisonAccumulator {
    secret_a: Vec<Bit>,
    secret_b: Vec<Bit>,
    next_bit_index: usize,
    r_bits: Vec<Bit>,
}

impl ComparisonAccumulator {
    pub fn new(secret_a: Vec<Bit>, secret_b: Vec<Bit>) -> Result<Self, ProtocolError> {
        if secret_a.len() != secret_b.len() {
            return Err(ProtocolError::LengthMismatch(
                secret_a.len(),
                secret_b.len(),
            ));
        }
        if secret_a.is_empty() {
            return Err(ProtocolError::EmptySecret);
        }
        Ok(ComparisonAccumulator {
            secret_a,
            secret_b,
            next_bit_index: 0,
            r_bits: Vec::new(),
        })
    }

    /// The pair `(M_A^i, M_B^i)` awaiting comparison.
    pub fn current(&self) -> Option<(Bit, Bit)> {
        (self.next_bit_index < self.secret_a.len()).then(|| {
            (
                self.secret_a[self.next_bit_index],
                self.secret_b[self.next_bit_index],
            )
        })
    }

    pub fn next_bit_index(&self) -> usize {
        self.next_bit_index
    }

    pub fn len(&self) -> usize {
        self.secret_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.secret_a.is_empty()
    }

    pub fn r_bits(&self) -> &[Bit] {
        &self.r_bits
    }

    pub fn record(&mut self, r: Bit) {
        self.r_bits.push(r);
        self.next_bit_index += 1;
    }

    pub fn is_complete(&self) -> bool {
        self.next_bit_index >= self.secret_a.len()
    }

    pub fn found_difference(&self) -> bool {
        self.r_bits.iter().any(|b| b.is_one())
    }
}

/// Final result of a protocol run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolVerdict {
    Identical,
    Different,
    AbortedDetection(String),
    Exhausted,
}

impl fmt::Display for ProtocolVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolVerdict::Identical => f.write_str("Identical"),
            ProtocolVerdict::Different => f.write_str("Different"),
            ProtocolVerdict::AbortedDetection(cause) => write!(f, "AbortedDetection: {cause}"),
            ProtocolVerdict::Exhausted => f.write_str("Exhausted"),
        }
    }
}

/// Parses a secret written as a string of `0`/`1` characters.
pub fn parse_bits(s: &str) -> Result<Vec<Bit>, String> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(Bit::ZERO),
            '1' => Ok(Bit::ONE),
            other => Err(format!("invalid bit character {other:?}")),
        })
        .collect()
}

pub fn format_bits(bits: &[Bit]) -> String {
    bits.iter()
        .map(|b| if b.is_one() { '1' } else { '0' })
        .collect()
}
