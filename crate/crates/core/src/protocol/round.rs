use serde_json::{json, Value};

use crate::adversaries::{Case3View, Strategy, Transit};
use crate::qsim::{
    measure_bell, measure_z, prepare_bell, tensor, BellIndex, Bit, RandSource, Randomness,
    StateVector,
};

use super::steps::client_r;
use super::transcript::Party;
use super::{
    case1_check, case2_check, step5_discussion, tp_dispatch, CheckRecord, CheckResult, ClientCheck,
    ClientPolicy, Comparison, ComparisonAccumulator, Flags, Inference, Message, MessageKind,
    OutcomeKind, Policies, ProtocolError, ProtocolVerdict, QubitOrigin, Role, RoundOutcome,
    RoundState, RoundTranscript, Slot, Step5Result, TapMemory, TpAction,
};

/// Independent randomness consumers within a round. Keeping them apart means an
/// adversary's draws never shift the clients' flags or TP's state labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Preparation = 0,
    Alice = 1,
    Bob = 2,
    Adversary = 3,
    Tp = 4,
    Secrets = 5,
}

impl Stream {
    fn client(role: Role) -> Stream {
        match role {
            Role::Alice => Stream::Alice,
            Role::Bob => Stream::Bob,
        }
    }
}

/// Randomness for one round, split by consumer.
pub trait RoundRng {
    fn stream(&mut self, which: Stream) -> &mut dyn Randomness;
}

/// Seeded streams for round `round_index`: ChaCha stream number
/// `8 * round_index + stream` under the key derived from the master seed.
#[derive(Clone, Debug)]
pub struct RoundStreams {
    streams: [RandSource; 6],
}

impl RoundStreams {
    pub fn new(master_seed: u64, round_index: u64) -> Self {
        RoundStreams {
            streams: std::array::from_fn(|i| {
                RandSource::substream(master_seed, round_index * 8 + i as u64)
            }),
        }
    }
}

impl RoundRng for RoundStreams {
    fn stream(&mut self, which: Stream) -> &mut dyn Randomness {
        &mut self.streams[which as usize]
    }
}

/// TP's honest preparation: two uniformly labelled Bell pairs in qubit order
/// a1, a2, b1, b2. a1 and b1 go out, a2 and b2 stay.
pub fn tp_prepare_round(rng: &mut dyn Randomness) -> RoundState {
    let is_a = BellIndex::ALL[rng.uniform(4)];
    let is_b = BellIndex::ALL[rng.uniform(4)];
    let register =
        tensor(&prepare_bell(is_a), &prepare_bell(is_b)).expect("two pairs fit in four qubits");
    RoundState::fresh(is_a, is_b, register, None)
}

impl RoundState {
    fn fresh(
        is_a: BellIndex,
        is_b: BellIndex,
        register: StateVector,
        prepared_bits: Option<[Bit; 4]>,
    ) -> Self {
        RoundState {
            round_index: 0,
            is_a,
            is_b,
            register,
            prepared_bits,
            in_flight: [Slot::Register, Slot::Register],
            flags_a: None,
            flags_b: None,
            mr_a: None,
            mr_b: None,
            returned_a: QubitOrigin::Original,
            returned_b: QubitOrigin::Original,
            m_flag: None,
            announced_bell: None,
            tp_bell_a1b1: None,
            tp_bell_a2b2: None,
            checks: Vec::new(),
            step5: None,
            comparison: None,
            inferences: Vec::new(),
        }
    }

    fn set_client(&mut self, role: Role, flags: Flags, mr: Option<Bit>, origin: QubitOrigin) {
        match role {
            Role::Alice => {
                self.flags_a = Some(flags);
                self.mr_a = mr;
                self.returned_a = origin;
            }
            Role::Bob => {
                self.flags_b = Some(flags);
                self.mr_b = mr;
                self.returned_b = origin;
            }
        }
    }
}

/// A client's Step 3: pick flags, then either Z-measure the arrived qubit and
/// send back a fresh qubit in the measured value (`i2 = 0`) or reflect it.
///
/// Measuring leaves the register qubit in exactly the eigenstate the client
/// would prepare, so the collapsed qubit stands in for the fresh one.
pub fn client_step3(
    role: Role,
    policy: &ClientPolicy,
    round_index: u64,
    state: &mut RoundState,
    rng: &mut dyn Randomness,
) -> Flags {
    let flags = policy.draw(round_index, rng);
    if flags.i2.is_one() {
        state.set_client(role, flags, None, QubitOrigin::Original);
        return flags;
    }
    let slot = &mut state.in_flight[role.index()];
    let mr = match slot {
        Slot::Register => {
            let (mr, collapsed) = measure_z(&state.register, role.travelling_qubit(), rng);
            state.register = collapsed;
            mr
        }
        Slot::Detached(q) => {
            let (mr, _) = measure_z(q, 0, rng);
            *q = StateVector::ket(mr);
            mr
        }
    };
    state.set_client(role, flags, Some(mr), QubitOrigin::ClientPrepared);
    flags
}

struct Log {
    messages: Vec<Message>,
}

impl Log {
    fn send(
        &mut self,
        from: impl Into<Party>,
        to: impl Into<Party>,
        kind: MessageKind,
        payload: Value,
    ) {
        let seq = self.messages.len() as u64;
        self.messages.push(Message {
            seq,
            from: from.into(),
            to: to.into(),
            kind,
            payload,
        });
    }
}

fn qubit_label(role: Role, returned: bool) -> &'static str {
    match (role, returned) {
        (Role::Alice, false) => "a1",
        (Role::Alice, true) => "a1*",
        (Role::Bob, false) => "b1",
        (Role::Bob, true) => "b1*",
    }
}

fn run_taps(
    strategy: &Strategy,
    state: &mut RoundState,
    memories: &mut [[TapMemory; 2]],
    role: Role,
    outbound: bool,
    rng: &mut dyn Randomness,
) {
    for (tap, memory) in strategy.taps.iter().zip(memories.iter_mut()) {
        if !tap.target().covers(role) {
            continue;
        }
        let mut transit = Transit {
            role,
            register: &mut state.register,
            slot: &mut state.in_flight[role.index()],
            memory: &mut memory[role.index()],
        };
        if outbound {
            tap.on_tp_to_client(&mut transit, rng);
        } else {
            tap.on_client_to_tp(&mut transit, rng);
        }
    }
}

/// Runs one round (one Bell pair per client) under `strategy`. A compared bit
/// consumes the accumulator's current secret index.
pub fn run_round(
    acc: &mut ComparisonAccumulator,
    round_index: u64,
    policies: &Policies,
    strategy: &Strategy,
    rng: &mut dyn RoundRng,
) -> Result<RoundTranscript, ProtocolError> {
    let secret_bits = acc.current().ok_or(ProtocolError::AccumulatorExhausted)?;
    let mut log = Log {
        messages: Vec::new(),
    };
    log.send(
        Party::Tp,
        Party::All,
        MessageKind::RoundStart,
        json!({ "round": round_index }),
    );

    // Steps 1-2
    let prep = strategy.tp.prepare(rng.stream(Stream::Preparation));
    let mut state = RoundState::fresh(prep.is_a, prep.is_b, prep.register, prep.prepared_bits);
    state.round_index = round_index;
    let mut memories = vec![<[TapMemory; 2]>::default(); strategy.taps.len()];

    for role in Role::BOTH {
        log.send(
            Party::Tp,
            role,
            MessageKind::Qubit,
            json!({ "qubit": qubit_label(role, false) }),
        );
        run_taps(
            strategy,
            &mut state,
            &mut memories,
            role,
            true,
            rng.stream(Stream::Adversary),
        );
    }

    // Step 3
    let mut flags = [Flags::new(0, 0); 2];
    for role in Role::BOTH {
        flags[role.index()] = client_step3(
            role,
            policies.get(role),
            round_index,
            &mut state,
            rng.stream(Stream::client(role)),
        );
        log.send(
            role,
            Party::Tp,
            MessageKind::Qubit,
            json!({ "qubit": qubit_label(role, true) }),
        );
        log.send(
            role,
            Party::Tp,
            MessageKind::I1,
            json!({ "i1": flags[role.index()].i1 }),
        );
    }
    for role in Role::BOTH {
        run_taps(
            strategy,
            &mut state,
            &mut memories,
            role,
            false,
            rng.stream(Stream::Adversary),
        );
        // A substitute still on the line displaces the withheld original.
        if let Slot::Detached(q) =
            std::mem::replace(&mut state.in_flight[role.index()], Slot::Register)
        {
            state.register = state.register.replace_qubit(
                role.travelling_qubit(),
                &q,
                rng.stream(Stream::Adversary),
            );
        }
    }
    for role in Role::BOTH {
        let f = flags[role.index()];
        if let Some(i2) = f.revealed_i2() {
            log.send(Party::Tp, role, MessageKind::Ack, Value::Null);
            log.send(role, Party::Tp, MessageKind::I2, json!({ "i2": i2 }));
            if let Some(mr) = state.mr(role) {
                log.send(role, Party::Tp, MessageKind::Mr, json!({ "mr": mr }));
            }
        }
    }

    // Step 4
    let action = tp_dispatch(
        flags[0].i1,
        flags[1].i1,
        [flags[0].revealed_i2(), flags[1].revealed_i2()],
    )?;
    let outcome = match action {
        TpAction::Separate { alice, bob } => separate_checks(
            &mut state,
            [alice, bob],
            strategy,
            rng.stream(Stream::Tp),
            &mut log,
        ),
        TpAction::Case3Swap => case3(
            &mut state,
            flags,
            secret_bits,
            acc,
            strategy,
            &memories,
            rng.stream(Stream::Tp),
            &mut log,
        )?,
    };
    Ok(RoundTranscript {
        messages: log.messages,
        state,
        outcome,
    })
}

fn separate_checks(
    state: &mut RoundState,
    checks: [ClientCheck; 2],
    strategy: &Strategy,
    rng: &mut dyn Randomness,
    log: &mut Log,
) -> RoundOutcome {
    let enforce = strategy.tp.enforces_checks();
    let mut failure: Option<(OutcomeKind, Role)> = None;
    for role in Role::BOTH {
        let check = checks[role.index()];
        let result = match check {
            ClientCheck::Ignore => None,
            _ if !enforce => None,
            ClientCheck::ZCheck => {
                let (tp_mr, reg) = measure_z(&state.register, role.travelling_qubit(), rng);
                state.register = reg;
                let client_mr = state.mr(role).expect("Z-checked client measured");
                Some(case1_check(client_mr, tp_mr))
            }
            ClientCheck::BellPairCheck => {
                let pair = (role.travelling_qubit(), role.retained_qubit());
                let (bell, reg) = measure_bell(&state.register, pair, rng);
                state.register = reg;
                Some(case2_check(bell, state.is(role)))
            }
        };
        if result == Some(CheckResult::Fail) && failure.is_none() {
            let kind = match check {
                ClientCheck::ZCheck => OutcomeKind::EveDetectedCase1,
                _ => OutcomeKind::EveDetectedCase2,
            };
            failure = Some((kind, role));
        }
        state.checks.push(CheckRecord {
            client: role,
            check,
            result,
        });
    }
    if let Some((kind, role)) = failure {
        log.send(
            Party::Tp,
            Party::All,
            MessageKind::Abort,
            json!({ "reason": kind.key(), "client": role }),
        );
        let case = if kind == OutcomeKind::EveDetectedCase1 {
            "Z-basis"
        } else {
            "Bell"
        };
        return RoundOutcome {
            kind,
            detail: format!("{case} check on {role}'s qubit failed"),
        };
    }
    match checks {
        [ClientCheck::Ignore, _] => RoundOutcome {
            kind: OutcomeKind::ClientIgnored(Role::Alice),
            detail: "Alice ignored; Bob's check passed".into(),
        },
        [_, ClientCheck::Ignore] => RoundOutcome {
            kind: OutcomeKind::ClientIgnored(Role::Bob),
            detail: "Bob ignored; Alice's check passed".into(),
        },
        _ => RoundOutcome {
            kind: OutcomeKind::PassedCheck,
            detail: "both eavesdropper checks passed".into(),
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn case3(
    state: &mut RoundState,
    flags: [Flags; 2],
    (m_a, m_b): (Bit, Bit),
    acc: &mut ComparisonAccumulator,
    strategy: &Strategy,
    memories: &[[TapMemory; 2]],
    rng: &mut dyn Randomness,
    log: &mut Log,
) -> Result<RoundOutcome, ProtocolError> {
    let view = Case3View {
        is_a: state.is_a,
        is_b: state.is_b,
        register: &state.register,
        prepared_bits: state.prepared_bits,
    };
    let decision = strategy.tp.case3(view, rng);
    state.register = decision.register;
    state.m_flag = Some(decision.m_flag);
    state.announced_bell = decision.announced;
    state.tp_bell_a1b1 = decision.bell_a1b1;
    state.tp_bell_a2b2 = decision.bell_a2b2;

    log.send(
        Party::Tp,
        Party::All,
        MessageKind::M,
        json!({ "m": decision.m_flag }),
    );
    if let Some(bell) = decision.announced {
        log.send(
            Party::Tp,
            Party::All,
            MessageKind::Bell,
            json!({ "bell": bell }),
        );
    }

    // Step 5: i2 (and MR when TP claimed M=0 and both measured) between clients.
    log.send(
        Role::Alice,
        Role::Bob,
        MessageKind::I2,
        json!({ "i2": flags[0].i2 }),
    );
    log.send(
        Role::Bob,
        Role::Alice,
        MessageKind::I2,
        json!({ "i2": flags[1].i2 }),
    );
    if !decision.m_flag.is_one() && !flags[0].i2.is_one() && !flags[1].i2.is_one() {
        log.send(
            Role::Alice,
            Role::Bob,
            MessageKind::Mr,
            json!({ "mr": state.mr_a }),
        );
        log.send(
            Role::Bob,
            Role::Alice,
            MessageKind::Mr,
            json!({ "mr": state.mr_b }),
        );
    }
    let step5 = step5_discussion(
        decision.m_flag,
        decision.announced,
        flags[0],
        flags[1],
        state.mr_a,
        state.mr_b,
    )?;
    state.step5 = Some(step5);

    let outcome = match step5 {
        Step5Result::Pass => RoundOutcome {
            kind: OutcomeKind::PassedCheck,
            detail: "announced Bell parity consistent with both Z results".into(),
        },
        Step5Result::NoCheck => RoundOutcome {
            kind: OutcomeKind::NoCheckPossible,
            detail: format!(
                "M={} with i2 = ({}, {})",
                decision.m_flag, flags[0].i2, flags[1].i2
            ),
        },
        Step5Result::TpDetected => {
            log.send(
                Role::Alice,
                Party::All,
                MessageKind::Abort,
                json!({ "reason": "TPDetectedStep5" }),
            );
            let detail = if decision.m_flag.is_one() {
                "TP announced M=1 although both clients reflected".to_string()
            } else {
                "announced Bell parity contradicts the clients' Z results".to_string()
            };
            RoundOutcome {
                kind: OutcomeKind::TPDetectedStep5,
                detail,
            }
        }
        Step5Result::ProceedToCompare => {
            let (mr_a, mr_b) = match (state.mr_a, state.mr_b) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(ProtocolError::InconsistentInput(
                        "comparison without both MRs".into(),
                    ))
                }
            };
            let r_a = client_r(mr_a, m_a);
            let r_b = client_r(mr_b, m_b);
            log.send(
                Role::Alice,
                Party::Tp,
                MessageKind::RA,
                json!({ "r_a": r_a }),
            );
            log.send(Role::Bob, Party::Tp, MessageKind::RB, json!({ "r_b": r_b }));
            let c_t = decision.c_t;
            let r = r_a ^ r_b ^ c_t;
            state.comparison = Some(Comparison { r, r_a, r_b, c_t });
            acc.record(r);
            if r.is_one() {
                log.send(
                    Party::Tp,
                    Party::All,
                    MessageKind::Result,
                    json!({ "r": r }),
                );
            }
            record_inferences(
                state,
                strategy,
                memories,
                &decision.inferred_mr,
                [r_a, r_b],
                [m_a, m_b],
            );
            RoundOutcome {
                kind: OutcomeKind::ComparedBit(r),
                detail: format!("R = {r}"),
            }
        }
    };
    Ok(outcome)
}

fn record_inferences(
    state: &mut RoundState,
    strategy: &Strategy,
    memories: &[[TapMemory; 2]],
    tp_mr: &[Option<Bit>; 2],
    public_r: [Bit; 2],
    truth: [Bit; 2],
) {
    for role in Role::BOTH {
        let k = role.index();
        if let Some(mr) = tp_mr[k] {
            state.inferences.push(Inference {
                by: "tp",
                victim: role,
                guess: mr ^ public_r[k],
                truth: truth[k],
            });
        }
        for (tap, memory) in strategy.taps.iter().zip(memories) {
            if let Some(mr) = memory[k].predicted_mr {
                let by = if tap.credited_to().is_some() {
                    "participant"
                } else {
                    "eve"
                };
                state.inferences.push(Inference {
                    by,
                    victim: role,
                    guess: mr ^ public_r[k],
                    truth: truth[k],
                });
            }
        }
    }
}

/// Runs rounds until every bit is compared, a compared bit differs, a check
/// fires or `max_rounds` is reached. Round `k` draws from
/// `RoundStreams::new(master_seed, k)`.
pub fn run_protocol(
    secret_a: &[Bit],
    secret_b: &[Bit],
    policies: &Policies,
    strategy: &Strategy,
    master_seed: u64,
    max_rounds: u64,
) -> Result<(ProtocolVerdict, Vec<RoundTranscript>), ProtocolError> {
    if max_rounds == 0 {
        return Err(ProtocolError::NoRounds);
    }
    let mut acc = ComparisonAccumulator::new(secret_a.to_vec(), secret_b.to_vec())?;
    let mut rounds = Vec::new();
    for k in 0..max_rounds {
        let transcript = run_round(
            &mut acc,
            k,
            policies,
            strategy,
            &mut RoundStreams::new(master_seed, k),
        )?;
        let outcome = transcript.outcome.clone();
        rounds.push(transcript);
        if outcome.kind.is_detection() {
            return Ok((
                ProtocolVerdict::AbortedDetection(format!("{}: {}", outcome.kind, outcome.detail)),
                rounds,
            ));
        }
        if acc.found_difference() {
            return Ok((ProtocolVerdict::Different, rounds));
        }
        if acc.is_complete() {
            return Ok((ProtocolVerdict::Identical, rounds));
        }
    }
    Ok((ProtocolVerdict::Exhausted, rounds))
}

/// Default round budget, 256 rounds per secret bit (a bit is compared every
/// 32 honest rounds on average).
pub fn default_max_rounds(secret_len: usize) -> u64 {
    256 * secret_len as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::{StrategySpec, Target};
    use crate::protocol::{format_bits, parse_bits};

    fn bits(s: &str) -> Vec<Bit> {
        parse_bits(s).unwrap()
    }

    fn honest_round(policies: &Policies, seed: u64) -> RoundTranscript {
        let mut acc = ComparisonAccumulator::new(bits("1"), bits("0")).unwrap();
        run_round(
            &mut acc,
            0,
            policies,
            &Strategy::honest(),
            &mut RoundStreams::new(seed, 0),
        )
        .unwrap()
    }

    #[test]
    fn prepare_draws_register_from_labels() {
        struct Fixed;
        impl Randomness for Fixed {
            fn choose(&mut self, _: &[f64]) -> usize {
                0
            }
        }
        let state = tp_prepare_round(&mut Fixed);
        assert_eq!(
            (state.is_a, state.is_b),
            (BellIndex::PHI_PLUS, BellIndex::PHI_PLUS)
        );
        for (i, a) in state.register.amplitudes().iter().enumerate() {
            let want = if [0, 3, 12, 15].contains(&i) {
                0.5
            } else {
                0.0
            };
            assert!((a.re - want).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn reflecting_leaves_register_untouched() {
        let mut rng = RandSource::from_seed(5);
        let mut state = tp_prepare_round(&mut rng);
        let before = state.register.clone();
        let f = client_step3(
            Role::Alice,
            &ClientPolicy::Scripted(vec![Flags::new(0, 1)]),
            0,
            &mut state,
            &mut rng,
        );
        assert_eq!(f, Flags::new(0, 1));
        assert!(state.register.approx_eq(&before));
        assert_eq!(state.mr_a, None);
        assert_eq!(state.returned_a, QubitOrigin::Original);
    }

    #[test]
    fn measuring_collapses_retained_partner() {
        let mut seen = [0; 2];
        for seed in 0..200 {
            let mut rng = RandSource::from_seed(seed);
            let mut state = RoundState::fresh(
                BellIndex::PHI_PLUS,
                BellIndex::PHI_PLUS,
                tensor(
                    &prepare_bell(BellIndex::PHI_PLUS),
                    &prepare_bell(BellIndex::PHI_PLUS),
                )
                .unwrap(),
                None,
            );
            client_step3(
                Role::Alice,
                &ClientPolicy::Scripted(vec![Flags::new(0, 0)]),
                0,
                &mut state,
                &mut rng,
            );
            let mr = state.mr_a.unwrap();
            seen[mr.value() as usize] += 1;
            let d = crate::qsim::born_distribution(&state.register, crate::qsim::Basis::Z(1));
            assert!((d[mr.value() as usize].1 - 1.0).abs() < 1e-12);
            let d = crate::qsim::born_distribution(&state.register, crate::qsim::Basis::Z(0));
            assert!((d[mr.value() as usize].1 - 1.0).abs() < 1e-12);
        }
        assert!(seen[0] > 70 && seen[1] > 70);
    }

    #[test]
    fn i1_one_never_reveals_i2_to_tp() {
        let t = honest_round(&Policies::scripted(Flags::new(1, 0), Flags::new(0, 0)), 1);
        let leaked = t
            .messages
            .iter()
            .any(|m| m.from == Party::Alice && m.to == Party::Tp && m.kind == MessageKind::I2);
        assert!(!leaked);
        assert_eq!(t.outcome.kind, OutcomeKind::ClientIgnored(Role::Alice));
        // Bob's i2 follows TP's ack
        let ack = t
            .messages
            .iter()
            .position(|m| m.kind == MessageKind::Ack && m.to == Party::Bob)
            .unwrap();
        let i2 = t
            .messages
            .iter()
            .position(|m| m.kind == MessageKind::I2 && m.from == Party::Bob)
            .unwrap();
        assert!(ack < i2);
    }

    #[test]
    fn honest_case1_case2_pass() {
        for seed in 0..50 {
            let t = honest_round(
                &Policies::scripted(Flags::new(0, 0), Flags::new(0, 1)),
                seed,
            );
            assert_eq!(t.outcome.kind, OutcomeKind::PassedCheck);
            assert!(t
                .state
                .checks
                .iter()
                .all(|c| c.result == Some(CheckResult::Pass)));
        }
    }

    #[test]
    fn honest_compared_bit_is_xor_of_secrets() {
        let mut compared = 0;
        for seed in 0..200 {
            let t = honest_round(
                &Policies::scripted(Flags::new(1, 0), Flags::new(1, 0)),
                seed,
            );
            match t.outcome.kind {
                OutcomeKind::ComparedBit(r) => {
                    compared += 1;
                    assert_eq!(r, Bit::ONE);
                }
                OutcomeKind::PassedCheck => {}
                other => panic!("unexpected outcome {other}"),
            }
        }
        assert!(compared > 60, "{compared}");
    }

    #[test]
    fn run_protocol_verdicts() {
        let p = Policies::default();
        let s = Strategy::honest();
        let (v, _) = run_protocol(
            &bits("1010"),
            &bits("1010"),
            &p,
            &s,
            9,
            default_max_rounds(4),
        )
        .unwrap();
        assert_eq!(v, ProtocolVerdict::Identical);
        let (v, rounds) = run_protocol(
            &bits("0010"),
            &bits("1010"),
            &p,
            &s,
            9,
            default_max_rounds(4),
        )
        .unwrap();
        assert_eq!(v, ProtocolVerdict::Different);
        let compared: Vec<_> = rounds.iter().filter_map(|r| r.state.comparison).collect();
        assert_eq!(compared.len(), 1, "stops at the first differing bit");
        assert!(matches!(
            run_protocol(&bits("10"), &bits("1"), &p, &s, 0, 10),
            Err(ProtocolError::LengthMismatch(2, 1))
        ));
        assert!(matches!(
            run_protocol(&bits("1"), &bits("1"), &p, &s, 0, 0),
            Err(ProtocolError::NoRounds)
        ));
        let (v, _) = run_protocol(&bits("11111111"), &bits("11111111"), &p, &s, 1, 1).unwrap();
        assert_eq!(v, ProtocolVerdict::Exhausted);
        assert_eq!(format_bits(&bits("0110")), "0110");
    }

    #[test]
    fn taps_do_not_shift_labels_or_flags() {
        let eve = Strategy::from_spec(StrategySpec::EveMeasureResend {
            target: Target::Both,
        })
        .unwrap();
        for seed in 0..50 {
            let mut a1 = ComparisonAccumulator::new(bits("0"), bits("0")).unwrap();
            let mut a2 = a1.clone();
            let h = run_round(
                &mut a1,
                3,
                &Policies::default(),
                &Strategy::honest(),
                &mut RoundStreams::new(seed, 3),
            )
            .unwrap();
            let e = run_round(
                &mut a2,
                3,
                &Policies::default(),
                &eve,
                &mut RoundStreams::new(seed, 3),
            )
            .unwrap();
            assert_eq!((h.state.is_a, h.state.is_b), (e.state.is_a, e.state.is_b));
            assert_eq!(
                (h.state.flags_a, h.state.flags_b),
                (e.state.flags_a, e.state.flags_b)
            );
        }
    }
}
