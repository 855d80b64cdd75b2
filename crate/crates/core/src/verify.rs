//! Exhaustive checks of the entanglement-swapping identity and of the Born-rule
//! machinery the protocol relies on.

use serde::{Deserialize, Serialize};

use crate::qsim::{
    bell_xor, born_distribution, measure_bell, prepare_bell, snap_dyadic, tensor, Basis, BellIndex,
    Bit, Outcome, Randomness, StateVector,
};

/// Always takes a fixed branch.
struct Take(usize);

impl Randomness for Take {
    fn choose(&mut self, weights: &[f64]) -> usize {
        assert!(weights[self.0] > 0.0, "forced an unreachable branch");
        self.0
    }
}

fn bell_probs(state: &StateVector, pair: (usize, usize)) -> [f64; 4] {
    let d = born_distribution(state, Basis::Bell(pair.0, pair.1));
    std::array::from_fn(|k| snap_dyadic(d[k].1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapFailure {
    pub is_a: BellIndex,
    pub is_b: BellIndex,
    pub m13: BellIndex,
    pub m24: BellIndex,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapReport {
    pub combinations: usize,
    pub passed: usize,
    /// Reachable `(m13, m24)` branches examined.
    pub branches: usize,
    pub failures: Vec<SwapFailure>,
    /// Combinations whose branch probabilities do not sum to exactly 1.
    pub unnormalized: Vec<(BellIndex, BellIndex)>,
}

impl SwapReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.unnormalized.is_empty() && self.passed == self.combinations
    }
}

/// Checks `IS_A ⊕ IS_B = m13 ⊕ m24` on every reachable branch for all 16
/// initial label pairs, pair A on qubits (1,2) and pair B on (3,4).
pub fn verify_swap_identity() -> SwapReport {
    verify_swap_identity_with(prepare_bell)
}

/// As [`verify_swap_identity`] with a caller-supplied Bell preparation.
pub fn verify_swap_identity_with(prepare: impl Fn(BellIndex) -> StateVector) -> SwapReport {
    let mut report = SwapReport {
        combinations: 0,
        passed: 0,
        branches: 0,
        failures: Vec::new(),
        unnormalized: Vec::new(),
    };
    for is_a in BellIndex::ALL {
        for is_b in BellIndex::ALL {
            report.combinations += 1;
            let register = tensor(&prepare(is_a), &prepare(is_b)).expect("two pairs fit");
            let mut total = 0.0;
            let mut combo_ok = true;
            let first = bell_probs(&register, (0, 2));
            for (i, &p13) in first.iter().enumerate() {
                if p13 == 0.0 {
                    continue;
                }
                let (m13, after) = measure_bell(&register, (0, 2), &mut Take(i));
                for (j, &p24) in bell_probs(&after, (1, 3)).iter().enumerate() {
                    if p24 == 0.0 {
                        continue;
                    }
                    let m24 = BellIndex::ALL[j];
                    report.branches += 1;
                    total += p13 * p24;
                    if bell_xor(is_a, is_b) != bell_xor(m13, m24) {
                        combo_ok = false;
                        report.failures.push(SwapFailure {
                            is_a,
                            is_b,
                            m13,
                            m24,
                            probability: p13 * p24,
                        });
                    }
                }
            }
            if total != 1.0 {
                combo_ok = false;
                report.unnormalized.push((is_a, is_b));
            }
            if combo_ok {
                report.passed += 1;
            }
        }
    }
    report
}

/// Both pairs φ+: the four outcomes on (1,3) and, given φ- there, the
/// distribution on (2,4).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkedExample {
    pub first_pair_probabilities: [f64; 4],
    pub partner_given_phi_minus: [f64; 4],
}

pub fn swap_worked_example() -> WorkedExample {
    let phi = prepare_bell(BellIndex::PHI_PLUS);
    let register = tensor(&phi, &phi).expect("two pairs fit");
    let first_pair_probabilities = bell_probs(&register, (0, 2));
    let (_, after) = measure_bell(
        &register,
        (0, 2),
        &mut Take(BellIndex::PHI_MINUS.code() as usize),
    );
    WorkedExample {
        first_pair_probabilities,
        partner_given_phi_minus: bell_probs(&after, (1, 3)),
    }
}

/// Born-rule properties over all basis states of 2 to 4 qubits: distributions
/// sum to 1, and a Bell measurement of two Z eigenstates `x, y` has parity
/// `x ⊕ y` with certainty and a uniform phase. Returns the failing cases.
pub fn verify_born_properties() -> Vec<String> {
    let mut failures = Vec::new();
    for n in 2..=4usize {
        for code in 0..(1u32 << n) {
            let bits: Vec<Bit> = (0..n)
                .map(|q| Bit::from(code >> (n - 1 - q) & 1 == 1))
                .collect();
            let state = StateVector::basis(&bits).expect("basis state");
            for i in 0..n {
                let z: f64 = born_distribution(&state, Basis::Z(i))
                    .iter()
                    .map(|x| x.1)
                    .sum();
                if snap_dyadic(z) != 1.0 {
                    failures.push(format!(
                        "Z distribution of qubit {i} in {code:0n$b} sums to {z}"
                    ));
                }
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let parity = bits[i] ^ bits[j];
                    for (outcome, p) in born_distribution(&state, Basis::Bell(i, j)) {
                        let Outcome::Bell(label) = outcome else {
                            unreachable!()
                        };
                        let want = if label.parity == parity { 0.5 } else { 0.0 };
                        if snap_dyadic(p) != want {
                            failures.push(format!(
                                "Bell({i},{j}) on |{code:0n$b}⟩: P({label}) = {p}, expected {want}"
                            ));
                        }
                    }
                }
            }
        }
    }
    failures
}
