use std::sync::Arc;

use crate::protocol::{Role, Slot};
use crate::qsim::{measure_z, Bit, Randomness, StateVector};

use super::{AdversaryError, ChannelTap, Target, Transit};

/// Z-measures the qubit on its way to the client and forwards the collapsed qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasureResend {
    pub target: Target,
}

pub fn eve_measure_resend(target: Target) -> MeasureResend {
    MeasureResend { target }
}

impl ChannelTap for MeasureResend {
    fn name(&self) -> String {
        format!("eve_measure_resend({})", self.target)
    }

    fn target(&self) -> Target {
        self.target
    }

    fn on_tp_to_client(&self, t: &mut Transit<'_>, rng: &mut dyn Randomness) {
        let seen = match &mut *t.slot {
            Slot::Register => {
                let (seen, collapsed) = measure_z(t.register, t.role.travelling_qubit(), rng);
                *t.register = collapsed;
                seen
            }
            Slot::Detached(q) => {
                let (seen, collapsed) = measure_z(q, 0, rng);
                *q = collapsed;
                seen
            }
        };
        t.memory.observed = Some(seen);
        t.memory.predicted_mr = Some(seen);
    }

    fn on_client_to_tp(&self, _: &mut Transit<'_>, _: &mut dyn Randomness) {}
}

/// Keeps the genuine qubit, hands the client `|fake_value⟩`, then swaps the
/// genuine qubit back in on the return leg.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FakeQubit {
    pub target: Target,
    pub fake_value: Bit,
}

pub fn eve_fake_qubit(target: Target, fake_value: Bit) -> FakeQubit {
    FakeQubit { target, fake_value }
}

impl ChannelTap for FakeQubit {
    fn name(&self) -> String {
        format!("eve_fake_qubit({},{})", self.target, self.fake_value)
    }

    fn target(&self) -> Target {
        self.target
    }

    fn on_tp_to_client(&self, t: &mut Transit<'_>, _: &mut dyn Randomness) {
        *t.slot = Slot::Detached(StateVector::ket(self.fake_value));
        t.memory.withheld = true;
        t.memory.predicted_mr = Some(self.fake_value);
    }

    fn on_client_to_tp(&self, t: &mut Transit<'_>, _: &mut dyn Randomness) {
        if t.memory.withheld {
            *t.slot = Slot::Register;
            t.memory.withheld = false;
        }
    }
}

/// A client running an outsider attack on the other client's channel.
#[derive(Clone, Debug)]
pub struct MaliciousParticipant {
    pub attacker: Role,
    pub inner: Arc<dyn ChannelTap>,
}

pub fn malicious_participant(
    attacker: Role,
    inner: Arc<dyn ChannelTap>,
) -> Result<MaliciousParticipant, AdversaryError> {
    if inner.target().covers(attacker) {
        return Err(AdversaryError::TargetMismatch { attacker });
    }
    Ok(MaliciousParticipant { attacker, inner })
}

impl ChannelTap for MaliciousParticipant {
    fn name(&self) -> String {
        format!(
            "malicious_participant({},{})",
            self.attacker.lower(),
            self.inner.name()
        )
    }

    fn target(&self) -> Target {
        self.inner.target()
    }

    fn credited_to(&self) -> Option<Role> {
        Some(self.attacker)
    }

    fn on_tp_to_client(&self, t: &mut Transit<'_>, rng: &mut dyn Randomness) {
        self.inner.on_tp_to_client(t, rng)
    }

    fn on_client_to_tp(&self, t: &mut Transit<'_>, rng: &mut dyn Randomness) {
        self.inner.on_client_to_tp(t, rng)
    }

    fn is_discrete(&self) -> bool {
        self.inner.is_discrete()
    }
}
