//! Simulator and attack analysis toolkit for semi-quantum private comparison
//! (SQPC) with a quantum third party (TP) that may misbehave but does not
//! collude.
//!
//! Two semi-quantum clients, Alice and Bob, compare secret bit strings for
//! equality with the help of a quantum TP that prepares Bell pairs. Clients can
//! only measure in the Z basis, prepare Z eigenstates or reflect qubits. The
//! crate provides:
//!
//! * [`qsim`]: exact statevector simulation of the 4-qubit register of a round.
//! * [`protocol`]: the round state machine, dispatch table and comparison.
//! * [`adversaries`]: eavesdroppers, malicious participants and dishonest TPs.
//! * [`montecarlo`]: seeded trials, the exact branch-enumeration oracle and
//!   statistics.
//! * [`verify`]: exhaustive checks of the swapping identity.

pub mod adversaries;
pub mod montecarlo;
pub mod protocol;
pub mod qsim;
pub mod verify;

pub use adversaries::{AttackReport, Strategy, StrategySpec, Target};
pub use montecarlo::{
    binomial_interval, enumerate_exact, run_trials, survival_curve, ExperimentConfig,
    ExperimentSpec, OutcomeDistribution, Stats,
};
pub use protocol::{
    run_protocol, run_round, ClientPolicy, ComparisonAccumulator, Flags, OutcomeKind, Policies,
    ProtocolVerdict, Role, RoundTranscript,
};
pub use qsim::{BellIndex, Bit, RandSource, Randomness, StateVector};

/// Toolkit version stamped into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
