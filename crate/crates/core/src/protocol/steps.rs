use crate::qsim::{bell_xor, BellIndex, Bit};

use super::{Flags, ProtocolError, Role};

/// What TP does with one client's returned qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClientCheck {
    /// Z-measure the returned qubit and compare with the client's MR.
    ZCheck,
    /// Bell-measure the returned qubit with its retained partner and compare with IS.
    BellPairCheck,
    Ignore,
}

/// TP's response to a pair of flag messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TpAction {
    Separate {
        alice: ClientCheck,
        bob: ClientCheck,
    },
    /// Bell measurements on (a1*, b1*) and (a2, b2).
    Case3Swap,
}

impl TpAction {
    pub fn for_client(self, role: Role) -> Option<ClientCheck> {
        match (self, role) {
            (TpAction::Separate { alice, .. }, Role::Alice) => Some(alice),
            (TpAction::Separate { bob, .. }, Role::Bob) => Some(bob),
            (TpAction::Case3Swap, _) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckResult {
    Pass,
    Fail,
}

impl CheckResult {
    fn from_match(ok: bool) -> Self {
        if ok {
            CheckResult::Pass
        } else {
            CheckResult::Fail
        }
    }
}

/// Outcome of the clients' public discussion after Case 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step5Result {
    Pass,
    TpDetected,
    ProceedToCompare,
    NoCheck,
}

/// Bits exchanged in the comparison step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub r: Bit,
    pub r_a: Bit,
    pub r_b: Bit,
    pub c_t: Bit,
}

/// TP's dispatch table. `revealed_i2` holds what each client disclosed before
/// Step 5, which must be exactly the `i2` of clients with `i1 = 0`.
pub fn tp_dispatch(
    i1_a: Bit,
    i1_b: Bit,
    revealed_i2: [Option<Bit>; 2],
) -> Result<TpAction, ProtocolError> {
    let mut per_client = [ClientCheck::Ignore; 2];
    for (k, (i1, i2)) in [(i1_a, revealed_i2[0]), (i1_b, revealed_i2[1])]
        .into_iter()
        .enumerate()
    {
        let who = if k == 0 { Role::Alice } else { Role::Bob };
        per_client[k] = match (i1.is_one(), i2) {
            (true, Some(_)) => {
                return Err(ProtocolError::InconsistentInput(format!(
                    "{who} revealed i2 while i1=1"
                )));
            }
            (false, None) => {
                return Err(ProtocolError::InconsistentInput(format!(
                    "{who} set i1=0 but sent no i2"
                )));
            }
            (false, Some(i2)) if i2.is_one() => ClientCheck::BellPairCheck,
            (false, Some(_)) => ClientCheck::ZCheck,
            (true, None) => ClientCheck::Ignore,
        };
    }
    if i1_a.is_one() && i1_b.is_one() {
        return Ok(TpAction::Case3Swap);
    }
    Ok(TpAction::Separate {
        alice: per_client[0],
        bob: per_client[1],
    })
}

/// Eavesdropper check on a measured-and-resent qubit.
pub fn case1_check(client_mr: Bit, tp_mr: Bit) -> CheckResult {
    CheckResult::from_match(client_mr == tp_mr)
}

/// Eavesdropper check on a reflected qubit.
pub fn case2_check(bell_result: BellIndex, initial: BellIndex) -> CheckResult {
    CheckResult::from_match(bell_result == initial)
}

/// `M = 0` iff `IS_A ⊕ IS_B = M(a1*,b1*) ⊕ M(a2,b2)`.
pub fn case3_compute_m(
    is_a: BellIndex,
    is_b: BellIndex,
    m_a1b1: BellIndex,
    m_a2b2: BellIndex,
) -> Bit {
    Bit::from(bell_xor(is_a, is_b) != bell_xor(m_a1b1, m_a2b2))
}

/// The clients' public discussion after TP announces `M`.
pub fn step5_discussion(
    m_flag: Bit,
    announced_bell: Option<BellIndex>,
    flags_a: Flags,
    flags_b: Flags,
    mr_a: Option<Bit>,
    mr_b: Option<Bit>,
) -> Result<Step5Result, ProtocolError> {
    let both_measured = !flags_a.i2.is_one() && !flags_b.i2.is_one();
    let both_reflected = flags_a.i2.is_one() && flags_b.i2.is_one();
    if !m_flag.is_one() {
        let bell = announced_bell.ok_or(ProtocolError::MissingAnnouncement)?;
        if !both_measured {
            return Ok(Step5Result::NoCheck);
        }
        let (a, b) = match (mr_a, mr_b) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(ProtocolError::InconsistentInput(
                    "both clients measured but an MR is missing".into(),
                ))
            }
        };
        // φ family: correlated results, ψ family: anticorrelated.
        return Ok(if a ^ b == bell.parity {
            Step5Result::Pass
        } else {
            Step5Result::TpDetected
        });
    }
    Ok(if both_reflected {
        Step5Result::TpDetected
    } else if both_measured {
        Step5Result::ProceedToCompare
    } else {
        Step5Result::NoCheck
    })
}

/// A client's masked bit `R = MR ⊕ M`.
pub fn client_r(mr: Bit, secret_bit: Bit) -> Bit {
    mr ^ secret_bit
}

/// Step 6 end to end. `C_T` is the parity bit of TP's (a1*, b1*) result.
pub fn step6_compare(mr_a: Bit, m_a: Bit, mr_b: Bit, m_b: Bit, bell_a1b1: BellIndex) -> Comparison {
    let r_a = client_r(mr_a, m_a);
    let r_b = client_r(mr_b, m_b);
    let c_t = bell_a1b1.parity;
    Comparison {
        r: r_a ^ r_b ^ c_t,
        r_a,
        r_b,
        c_t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: u8) -> Bit {
        Bit::from(v != 0)
    }

    fn bell(code: u8) -> BellIndex {
        BellIndex::from_code(code)
    }

    fn dispatch(a: Flags, bb: Flags) -> TpAction {
        tp_dispatch(a.i1, bb.i1, [a.revealed_i2(), bb.revealed_i2()]).unwrap()
    }

    #[test]
    fn table_rows_from_the_examples() {
        use ClientCheck::*;
        assert_eq!(
            dispatch(Flags::new(0, 0), Flags::new(0, 1)),
            TpAction::Separate {
                alice: ZCheck,
                bob: BellPairCheck
            }
        );
        assert_eq!(
            dispatch(Flags::new(0, 1), Flags::new(1, 0)),
            TpAction::Separate {
                alice: BellPairCheck,
                bob: Ignore
            }
        );
        assert_eq!(
            dispatch(Flags::new(1, 1), Flags::new(1, 0)),
            TpAction::Case3Swap
        );
        assert_eq!(
            dispatch(Flags::new(1, 0), Flags::new(0, 0)),
            TpAction::Separate {
                alice: Ignore,
                bob: ZCheck
            }
        );
    }

    #[test]
    fn table_is_total() {
        use ClientCheck::*;
        let expect = |f: Flags, other_i1: Bit| -> Option<ClientCheck> {
            match (f.i1.is_one(), f.i2.is_one(), other_i1.is_one()) {
                (true, _, true) => None,
                (true, _, false) => Some(Ignore),
                (false, false, _) => Some(ZCheck),
                (false, true, _) => Some(BellPairCheck),
            }
        };
        let mut seen = 0;
        for fa in Flags::all() {
            for fb in Flags::all() {
                let action = dispatch(fa, fb);
                match action {
                    TpAction::Case3Swap => {
                        assert!(fa.i1.is_one() && fb.i1.is_one());
                    }
                    TpAction::Separate { alice, bob } => {
                        assert_eq!(Some(alice), expect(fa, fb.i1));
                        assert_eq!(Some(bob), expect(fb, fa.i1));
                    }
                }
                seen += 1;
            }
        }
        assert_eq!(seen, 16);
    }

    #[test]
    fn dispatch_rejects_early_i2() {
        assert!(matches!(
            tp_dispatch(b(1), b(0), [Some(b(0)), Some(b(0))]),
            Err(ProtocolError::InconsistentInput(_))
        ));
        assert!(matches!(
            tp_dispatch(b(0), b(0), [None, Some(b(0))]),
            Err(ProtocolError::InconsistentInput(_))
        ));
    }

    #[test]
    fn case_checks() {
        assert_eq!(case1_check(b(0), b(0)), CheckResult::Pass);
        assert_eq!(case1_check(b(0), b(1)), CheckResult::Fail);
        assert_eq!(case2_check(bell(0), bell(0)), CheckResult::Pass);
        assert_eq!(case2_check(bell(1), bell(0)), CheckResult::Fail);
    }

    #[test]
    fn compute_m_examples() {
        assert_eq!(case3_compute_m(bell(0), bell(0), bell(1), bell(1)), b(0));
        assert_eq!(case3_compute_m(bell(0), bell(0), bell(1), bell(0)), b(1));
    }

    #[test]
    fn step5_branches() {
        let measured = Flags::new(1, 0);
        let reflected = Flags::new(1, 1);
        let run = |m, ann, fa, fb, a, bb| step5_discussion(b(m), ann, fa, fb, a, bb).unwrap();
        assert_eq!(
            run(0, Some(bell(0)), measured, measured, Some(b(1)), Some(b(1))),
            Step5Result::Pass
        );
        assert_eq!(
            run(0, Some(bell(2)), measured, measured, Some(b(1)), Some(b(1))),
            Step5Result::TpDetected
        );
        assert_eq!(
            run(0, Some(bell(3)), measured, measured, Some(b(1)), Some(b(0))),
            Step5Result::Pass
        );
        assert_eq!(
            run(0, Some(bell(0)), measured, reflected, Some(b(1)), None),
            Step5Result::NoCheck
        );
        assert_eq!(
            run(1, None, reflected, reflected, None, None),
            Step5Result::TpDetected
        );
        assert_eq!(
            run(1, None, measured, reflected, Some(b(0)), None),
            Step5Result::NoCheck
        );
        assert_eq!(
            run(1, None, measured, measured, Some(b(0)), Some(b(1))),
            Step5Result::ProceedToCompare
        );
        assert!(matches!(
            step5_discussion(b(0), None, measured, measured, Some(b(0)), Some(b(0))),
            Err(ProtocolError::MissingAnnouncement)
        ));
    }

    #[test]
    fn step6_examples() {
        assert_eq!(client_r(b(0), b(1)), b(1));
        let c = step6_compare(b(1), b(1), b(0), b(1), bell(0b10));
        assert_eq!(
            c,
            Comparison {
                r: b(0),
                r_a: b(0),
                r_b: b(1),
                c_t: b(1)
            }
        );
    }

    /// Exhaustive over the honest branch structure: once both clients measured,
    /// (a1*, b1*) is the product |mr_a mr_b⟩, so any Bell result on it has parity
    /// mr_a ⊕ mr_b and r collapses to m_a ⊕ m_b.
    #[test]
    fn step6_identity_over_all_branches() {
        for mr_a in [b(0), b(1)] {
            for mr_b in [b(0), b(1)] {
                for phase in [b(0), b(1)] {
                    for m_a in [b(0), b(1)] {
                        for m_b in [b(0), b(1)] {
                            let bell = BellIndex::new(mr_a ^ mr_b, phase);
                            assert_eq!(step6_compare(mr_a, m_a, mr_b, m_b, bell).r, m_a ^ m_b);
                        }
                    }
                }
            }
        }
    }
}
