mod common;

use common::bits;
use sqpc_core::protocol::{
    read_jsonl, run_round, write_jsonl, ComparisonAccumulator, Flags, MessageKind, Party,
    RoundStreams,
};
use sqpc_core::{
    run_protocol, Bit, OutcomeKind, Policies, ProtocolVerdict, Role, RoundTranscript, Strategy,
    StrategySpec,
};

fn rounds(strategy: &Strategy, seed: u64, n: u64) -> Vec<RoundTranscript> {
    let policies = Policies::default();
    (0..n)
        .map(|k| {
            let mut acc = ComparisonAccumulator::new(bits("0"), bits("1")).unwrap();
            run_round(
                &mut acc,
                k,
                &policies,
                strategy,
                &mut RoundStreams::new(seed, k),
            )
            .unwrap()
        })
        .collect()
}

fn all_strategies() -> Vec<Strategy> {
    let mut specs = StrategySpec::catalogue();
    for s in [
        "eve_measure_resend:both",
        "eve_fake_qubit:bob,1",
        "malicious_participant:bob,fake_qubit,1",
    ] {
        specs.push(s.parse().unwrap());
    }
    specs
        .into_iter()
        .map(|s| Strategy::from_spec(s).unwrap())
        .collect()
}

#[test]
fn i2_of_an_i1_one_client_never_reaches_tp() {
    for strategy in all_strategies() {
        for t in rounds(&strategy, 17, 400) {
            for role in Role::BOTH {
                let flags = t.state.flags(role).unwrap();
                let to_tp = |kind| {
                    t.messages.iter().position(|m| {
                        m.from == Party::from(role) && m.to == Party::Tp && m.kind == kind
                    })
                };
                if flags.i1 == Bit::ONE {
                    assert_eq!(
                        to_tp(MessageKind::I2),
                        None,
                        "{} round {}",
                        strategy.name(),
                        t.state.round_index
                    );
                    assert_eq!(to_tp(MessageKind::Mr), None);
                } else if let Some(i2) = to_tp(MessageKind::I2) {
                    let ack = t
                        .messages
                        .iter()
                        .position(|m| m.kind == MessageKind::Ack && m.to == Party::from(role))
                        .expect("i2 without an ack");
                    assert!(ack < i2);
                }
            }
        }
    }
}

#[test]
fn taps_do_not_shift_labels_or_flags() {
    let honest = rounds(&Strategy::honest(), 5, 300);
    for strategy in all_strategies() {
        let attacked = rounds(&strategy, 5, 300);
        for (h, a) in honest.iter().zip(&attacked) {
            assert_eq!(h.state.flags_a, a.state.flags_a, "{}", strategy.name());
            assert_eq!(h.state.flags_b, a.state.flags_b, "{}", strategy.name());
            if strategy.spec.base_name().starts_with("eve")
                || strategy.spec.base_name() == "malicious_participant"
            {
                assert_eq!((h.state.is_a, h.state.is_b), (a.state.is_a, a.state.is_b));
            }
        }
    }
}

#[test]
fn run_stops_at_the_first_difference() {
    let honest = Strategy::honest();
    for seed in 0..50 {
        let a = bits("00000000");
        let b = bits("00010000");
        let (verdict, log) =
            run_protocol(&a, &b, &Policies::default(), &honest, seed, 10_000).unwrap();
        assert_eq!(verdict, ProtocolVerdict::Different);
        let compared: Vec<_> = log
            .iter()
            .filter(|t| matches!(t.outcome.kind, OutcomeKind::ComparedBit(_)))
            .collect();
        assert_eq!(compared.len(), 4);
        assert!(matches!(
            log.last().unwrap().outcome.kind,
            OutcomeKind::ComparedBit(Bit::ONE)
        ));
    }
}

#[test]
fn detection_aborts_the_run() {
    let eve = Strategy::from_spec("eve_measure_resend:alice".parse().unwrap()).unwrap();
    let a = bits("0101010101010101");
    let (verdict, log) = run_protocol(&a, &a, &Policies::default(), &eve, 3, 100_000).unwrap();
    assert!(
        matches!(verdict, ProtocolVerdict::AbortedDetection(_)),
        "{verdict:?}"
    );
    assert!(log.last().unwrap().outcome.kind.is_detection());
    assert_eq!(
        log.iter().filter(|t| t.outcome.kind.is_detection()).count(),
        1
    );
}

#[test]
fn budget_exhaustion_is_reported() {
    let never = Policies {
        alice: sqpc_core::ClientPolicy::Scripted(vec![Flags::new(0, 0)]),
        ..Default::default()
    };
    let (verdict, log) =
        run_protocol(&bits("01"), &bits("01"), &never, &Strategy::honest(), 1, 40).unwrap();
    assert_eq!(verdict, ProtocolVerdict::Exhausted);
    assert_eq!(log.len(), 40);
}

#[test]
fn transcripts_are_deterministic_and_round_trip() {
    let a = bits("0110100111010010");
    let honest = Strategy::honest();
    let dump = |seed| {
        let (_, log) = run_protocol(&a, &a, &Policies::default(), &honest, seed, 10_000).unwrap();
        let mut out = Vec::new();
        write_jsonl(&mut out, &log).unwrap();
        out
    };
    let first = dump(99);
    assert_eq!(first, dump(99));
    assert_ne!(first, dump(100));

    let messages = read_jsonl(first.as_slice()).unwrap();
    let mut again = Vec::new();
    for m in &messages {
        serde_json::to_writer(&mut again, m).unwrap();
        again.push(b'\n');
    }
    assert_eq!(again, first);
    assert!(messages.windows(2).all(|w| w[1].seq == w[0].seq + 1));
    for line in std::str::from_utf8(&first).unwrap().lines().take(5) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 5);
        for k in ["seq", "from", "to", "kind", "payload"] {
            assert!(keys.iter().any(|x| x == k));
        }
    }
}

#[test]
fn honest_tp_never_receives_secret_bits() {
    // TP only ever sees R_A and R_B, each masked by a uniformly random MR
    for t in rounds(&Strategy::honest(), 8, 500) {
        for m in t.messages.iter().filter(|m| m.to == Party::Tp) {
            let text = m.payload.to_string();
            assert!(!text.contains("m_a") && !text.contains("secret"), "{text}");
        }
    }
}
