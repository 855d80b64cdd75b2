use std::fmt;
use std::str::FromStr;

use crate::protocol::{case3_compute_m, qubit, tp_prepare_round, Role};
use crate::qsim::{measure_bell, measure_z, BellIndex, Bit, Randomness, StateVector};

use super::{Case3Decision, Case3View, Preparation, TpBehavior};

/// The protocol as written.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HonestTp;

/// Bell-measures (a1*, b1*) then (a2, b2) and applies the swap formula.
fn honest_swap(
    view: &Case3View<'_>,
    rng: &mut dyn Randomness,
) -> (StateVector, BellIndex, BellIndex, Bit) {
    let (m1, reg) = measure_bell(view.register, (qubit::A1, qubit::B1), rng);
    let (m2, reg) = measure_bell(&reg, (qubit::A2, qubit::B2), rng);
    let m = case3_compute_m(view.is_a, view.is_b, m1, m2);
    (reg, m1, m2, m)
}

impl TpBehavior for HonestTp {
    fn name(&self) -> String {
        "honest".into()
    }

    fn prepare(&self, rng: &mut dyn Randomness) -> Preparation {
        let state = tp_prepare_round(rng);
        Preparation {
            is_a: state.is_a,
            is_b: state.is_b,
            register: state.register,
            prepared_bits: None,
        }
    }

    fn case3(&self, view: Case3View<'_>, rng: &mut dyn Randomness) -> Case3Decision {
        let (register, m1, m2, m) = honest_swap(&view, rng);
        Case3Decision {
            register,
            m_flag: m,
            announced: (!m.is_one()).then_some(m1),
            bell_a1b1: Some(m1),
            bell_a2b2: Some(m2),
            c_t: m1.parity,
            inferred_mr: [None, None],
        }
    }
}

/// How a single-photon TP picks the `M` it announces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MPolicy {
    /// Apply the swap formula to its (meaningless) Bell results.
    HonestCompute,
    AlwaysZero,
    AlwaysOne,
    Coin,
}

impl fmt::Display for MPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MPolicy::HonestCompute => "honest-compute",
            MPolicy::AlwaysZero => "always-zero",
            MPolicy::AlwaysOne => "always-one",
            MPolicy::Coin => "coin",
        })
    }
}

impl FromStr for MPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "honest-compute" | "honest_compute" => Ok(MPolicy::HonestCompute),
            "always-zero" | "always_zero" => Ok(MPolicy::AlwaysZero),
            "always-one" | "always_one" => Ok(MPolicy::AlwaysOne),
            "coin" => Ok(MPolicy::Coin),
            other => Err(format!("unknown M policy {other:?}")),
        }
    }
}

/// TP sends Z eigenstates instead of Bell pairs so that every client Z result
/// is known to it in advance.
///
/// Each claimed label gets the parity of the bits TP actually prepared for that
/// pair and a random phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FakeSingles {
    pub policy: MPolicy,
}

pub fn tp_fake_singles(policy: MPolicy) -> FakeSingles {
    FakeSingles { policy }
}

impl TpBehavior for FakeSingles {
    fn name(&self) -> String {
        format!("tp_fake_singles({})", self.policy)
    }

    fn prepare(&self, rng: &mut dyn Randomness) -> Preparation {
        let bits = [rng.coin(), rng.coin(), rng.coin(), rng.coin()];
        let is_a = BellIndex::new(bits[qubit::A1] ^ bits[qubit::A2], rng.coin());
        let is_b = BellIndex::new(bits[qubit::B1] ^ bits[qubit::B2], rng.coin());
        let register = StateVector::basis(&bits).expect("four qubits fit");
        Preparation {
            is_a,
            is_b,
            register,
            prepared_bits: Some(bits),
        }
    }

    fn enforces_checks(&self) -> bool {
        false
    }

    fn case3(&self, view: Case3View<'_>, rng: &mut dyn Randomness) -> Case3Decision {
        let (register, m1, m2, computed) = honest_swap(&view, rng);
        let m = match self.policy {
            MPolicy::HonestCompute => computed,
            MPolicy::AlwaysZero => Bit::ZERO,
            MPolicy::AlwaysOne => Bit::ONE,
            MPolicy::Coin => rng.coin(),
        };
        let inferred_mr = match view.prepared_bits {
            Some(bits) => [Some(bits[qubit::A1]), Some(bits[qubit::B1])],
            None => [None, None],
        };
        Case3Decision {
            register,
            m_flag: m,
            announced: (!m.is_one()).then_some(m1),
            bell_a1b1: Some(m1),
            bell_a2b2: Some(m2),
            c_t: m1.parity,
            inferred_mr,
        }
    }
}

/// TP Bell-measures Bob's own pair (b1*, b2) to learn whether Bob measured.
///
/// On a mismatch with `IS_B` it Z-measures a1* to learn Alice's result and
/// announces `M = 1`; it cannot learn Bob's result, so its `C_T` is a coin.
/// On a match it announces `M = 0` with a uniformly guessed (a1*, b1*) label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WrongPairing;

pub fn tp_wrong_pairing() -> WrongPairing {
    WrongPairing
}

impl TpBehavior for WrongPairing {
    fn name(&self) -> String {
        "tp_wrong_pairing".into()
    }

    fn prepare(&self, rng: &mut dyn Randomness) -> Preparation {
        HonestTp.prepare(rng)
    }

    fn case3(&self, view: Case3View<'_>, rng: &mut dyn Randomness) -> Case3Decision {
        let (bob_pair, register) = measure_bell(view.register, (qubit::B1, qubit::B2), rng);
        if bob_pair != view.is_b {
            let (mr_a, register) = measure_z(&register, qubit::A1, rng);
            let mut inferred_mr = [None, None];
            inferred_mr[Role::Alice.index()] = Some(mr_a);
            Case3Decision {
                register,
                m_flag: Bit::ONE,
                announced: None,
                bell_a1b1: None,
                bell_a2b2: None,
                c_t: rng.coin(),
                inferred_mr,
            }
        } else {
            let guess = BellIndex::ALL[rng.uniform(4)];
            Case3Decision {
                register,
                m_flag: Bit::ZERO,
                announced: Some(guess),
                bell_a1b1: None,
                bell_a2b2: None,
                c_t: guess.parity,
                inferred_mr: [None, None],
            }
        }
    }
}
