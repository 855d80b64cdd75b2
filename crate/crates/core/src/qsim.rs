//! Exact statevector simulation of small (1 to 4 qubit) registers.
//!
//! Qubit 0 is the most significant bit of a basis index, so `|1⟩ ⊗ |0⟩` lives at
//! index `0b10`. Bell states use the fixed convention
//! `φ± = (|00⟩ ± |11⟩)/√2`, `ψ± = (|01⟩ ± |10⟩)/√2`, the first listed qubit being
//! the first qubit of the measured pair.

use std::fmt;
use std::ops::BitXor;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest register the simulator handles.
pub const MAX_QUBITS: usize = 4;

/// Absolute tolerance used for every floating point comparison in the simulator.
pub const TOLERANCE: f64 = 1e-12;

/// Branch probabilities below this are treated as exactly zero.
const FLUSH: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("register overflow: {0} qubits exceeds the {MAX_QUBITS}-qubit limit")]
    RegisterOverflow(usize),
    #[error("register must hold at least one qubit")]
    EmptyRegister,
    #[error("expected {expected} amplitudes, got {got}")]
    AmplitudeCount { expected: usize, got: usize },
    #[error("amplitudes are not normalized (sum of squares {0})")]
    NotNormalized(f64),
}

/// A classical bit.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(try_from = "u8", into = "u8")]
pub struct Bit(bool);

impl Bit {
    pub const ZERO: Bit = Bit(false);
    pub const ONE: Bit = Bit(true);

    pub fn value(self) -> u8 {
        self.0 as u8
    }

    pub fn is_one(self) -> bool {
        self.0
    }
}

impl From<bool> for Bit {
    fn from(b: bool) -> Self {
        Bit(b)
    }
}

impl TryFrom<u8> for Bit {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Bit::ZERO),
            1 => Ok(Bit::ONE),
            other => Err(format!("bit must be 0 or 1, got {other}")),
        }
    }
}

impl From<Bit> for u8 {
    fn from(b: Bit) -> u8 {
        b.value()
    }
}

impl BitXor for Bit {
    type Output = Bit;

    fn bitxor(self, rhs: Bit) -> Bit {
        Bit(self.0 ^ rhs.0)
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Two-bit Bell-state label: `φ+ = 00`, `φ- = 01`, `ψ+ = 10`, `ψ- = 11`,
/// written as (parity bit, phase bit).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BellIndex {
    /// 0 for the φ family, 1 for the ψ family.
    pub parity: Bit,
    /// 0 for "+", 1 for "-".
    pub phase: Bit,
}

impl BellIndex {
    pub const PHI_PLUS: BellIndex = BellIndex {
        parity: Bit::ZERO,
        phase: Bit::ZERO,
    };
    pub const PHI_MINUS: BellIndex = BellIndex {
        parity: Bit::ZERO,
        phase: Bit::ONE,
    };
    pub const PSI_PLUS: BellIndex = BellIndex {
        parity: Bit::ONE,
        phase: Bit::ZERO,
    };
    pub const PSI_MINUS: BellIndex = BellIndex {
        parity: Bit::ONE,
        phase: Bit::ONE,
    };

    /// All four labels in code order 00, 01, 10, 11.
    pub const ALL: [BellIndex; 4] = [
        Self::PHI_PLUS,
        Self::PHI_MINUS,
        Self::PSI_PLUS,
        Self::PSI_MINUS,
    ];

    pub fn new(parity: Bit, phase: Bit) -> Self {
        BellIndex { parity, phase }
    }

    /// Label from its 2-bit code `parity << 1 | phase`.
    pub fn from_code(code: u8) -> Self {
        Self::ALL[(code & 0b11) as usize]
    }

    pub fn code(self) -> u8 {
        (self.parity.value() << 1) | self.phase.value()
    }

    pub fn name(self) -> &'static str {
        match self.code() {
            0 => "φ+",
            1 => "φ-",
            2 => "ψ+",
            _ => "ψ-",
        }
    }
}

impl BitXor for BellIndex {
    type Output = BellIndex;

    fn bitxor(self, rhs: BellIndex) -> BellIndex {
        BellIndex {
            parity: self.parity ^ rhs.parity,
            phase: self.phase ^ rhs.phase,
        }
    }
}

impl fmt::Display for BellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.parity, self.phase)
    }
}

impl From<BellIndex> for String {
    fn from(b: BellIndex) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for BellIndex {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl std::str::FromStr for BellIndex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "00" | "φ+" | "phi+" => Ok(Self::PHI_PLUS),
            "01" | "φ-" | "phi-" => Ok(Self::PHI_MINUS),
            "10" | "ψ+" | "psi+" => Ok(Self::PSI_PLUS),
            "11" | "ψ-" | "psi-" => Ok(Self::PSI_MINUS),
            other => Err(format!("unknown Bell label {other:?}")),
        }
    }
}

/// Bitwise XOR of two Bell labels.
pub fn bell_xor(a: BellIndex, b: BellIndex) -> BellIndex {
    a ^ b
}

/// Source of branch choices. Every random event in the simulator is a draw from a
/// finite discrete distribution, which lets the same code run under a sampler
/// or under an exhaustive branch enumerator.
pub trait Randomness {
    /// Picks an index of `weights` (non-negative, summing to 1). Zero-weight
    /// entries are never picked.
    fn choose(&mut self, weights: &[f64]) -> usize;

    fn coin(&mut self) -> Bit {
        Bit::from(self.choose(&[0.5, 0.5]) == 1)
    }

    fn uniform(&mut self, n: usize) -> usize {
        assert!(n > 0, "uniform draw over an empty range");
        let w = vec![1.0 / n as f64; n];
        self.choose(&w)
    }
}

impl<R: Randomness + ?Sized> Randomness for &mut R {
    fn choose(&mut self, weights: &[f64]) -> usize {
        (**self).choose(weights)
    }
}

/// Deterministic pseudo-random stream.
///
/// Seeding scheme: the 64-bit seed is expanded into a ChaCha8 key with
/// `SeedableRng::seed_from_u64`; [`RandSource::substream`] additionally selects
/// the ChaCha stream number, so `(seed, index)` pairs yield independent streams.
#[derive(Clone, Debug)]
pub struct RandSource {
    rng: ChaCha8Rng,
}

impl RandSource {
    pub fn from_seed(seed: u64) -> Self {
        RandSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream number `index` under the key derived from `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        RandSource { rng }
    }

    pub fn next_f64(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl Randomness for RandSource {
    fn choose(&mut self, weights: &[f64]) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        let mut last = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = Some(i);
            if u < acc {
                return i;
            }
        }
        // Rounding left u just above the cumulative total.
        last.expect("choose called with no positive weight")
    }
}

/// Exact complex amplitudes of a 1 to 4 qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Builds a state from explicit amplitudes, checking size and normalization.
    pub fn new(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self, QsimError> {
        check_size(num_qubits)?;
        let expected = 1usize << num_qubits;
        if amplitudes.len() != expected {
            return Err(QsimError::AmplitudeCount {
                expected,
                got: amplitudes.len(),
            });
        }
        let s = StateVector {
            num_qubits,
            amplitudes,
        };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(s)
    }

    /// Computational basis state; `bits[q]` is the value of qubit `q`.
    pub fn basis(bits: &[Bit]) -> Result<Self, QsimError> {
        let n = bits.len();
        check_size(n)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        let idx = bits
            .iter()
            .fold(0usize, |acc, b| (acc << 1) | b.value() as usize);
        amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            num_qubits: n,
            amplitudes,
        })
    }

    /// Single qubit `|value⟩`.
    pub fn ket(value: Bit) -> Self {
        StateVector::basis(&[value]).expect("one qubit always fits")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= TOLERANCE
    }

    /// Entry-wise comparison within [`TOLERANCE`].
    pub fn approx_eq(&self, other: &StateVector) -> bool {
        self.num_qubits == other.num_qubits
            && self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .all(|(a, b)| (a - b).norm() <= TOLERANCE)
    }

    /// Pauli X on `qubit`.
    pub fn flip(&self, qubit: usize) -> StateVector {
        self.check_qubit(qubit);
        let mask = self.mask(qubit);
        let mut amplitudes = self.amplitudes.clone();
        for i in 0..amplitudes.len() {
            if i & mask == 0 {
                amplitudes.swap(i, i | mask);
            }
        }
        StateVector {
            num_qubits: self.num_qubits,
            amplitudes,
        }
    }

    /// Measures `qubit` in Z and re-prepares it as `|value⟩`. The rest of the
    /// register collapses according to the measurement.
    pub fn reset<R: Randomness + ?Sized>(
        &self,
        qubit: usize,
        value: Bit,
        rng: &mut R,
    ) -> StateVector {
        let (seen, collapsed) = measure_z(self, qubit, rng);
        if seen == value {
            collapsed
        } else {
            collapsed.flip(qubit)
        }
    }

    /// Puts the single-qubit state `single` in place of `qubit`. The displaced
    /// qubit is Z-measured first, an unravelling of discarding it.
    pub fn replace_qubit<R: Randomness + ?Sized>(
        &self,
        qubit: usize,
        single: &StateVector,
        rng: &mut R,
    ) -> StateVector {
        assert_eq!(single.num_qubits, 1, "replacement must be a single qubit");
        let (seen, collapsed) = measure_z(self, qubit, rng);
        let mask = self.mask(qubit);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (i, &a) in collapsed.amplitudes.iter().enumerate() {
            if ((i & mask != 0) as u8) != seen.value() {
                continue;
            }
            let base = i & !mask;
            amplitudes[base] += a * single.amplitudes[0];
            amplitudes[base | mask] += a * single.amplitudes[1];
        }
        StateVector {
            num_qubits: self.num_qubits,
            amplitudes,
        }
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) {
        assert!(
            qubit < self.num_qubits,
            "qubit {qubit} out of range for a {}-qubit register",
            self.num_qubits
        );
    }

    fn renormalized(num_qubits: usize, mut amplitudes: Vec<Complex64>) -> StateVector {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amplitudes {
            *a /= norm;
        }
        StateVector {
            num_qubits,
            amplitudes,
        }
    }
}

fn check_size(n: usize) -> Result<(), QsimError> {
    match n {
        0 => Err(QsimError::EmptyRegister),
        n if n > MAX_QUBITS => Err(QsimError::RegisterOverflow(n)),
        _ => Ok(()),
    }
}

/// Amplitudes of a Bell state over `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn bell_vector(idx: BellIndex) -> [Complex64; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if idx.phase.is_one() { -h } else { h };
    let z = 0.0;
    let v = if idx.parity.is_one() {
        [z, h, sign, z]
    } else {
        [h, z, z, sign]
    };
    v.map(|x| Complex64::new(x, 0.0))
}

/// The two-qubit Bell state labelled `idx`.
pub fn prepare_bell(idx: BellIndex) -> StateVector {
    #[cfg(feature = "fault-phase")]
    let idx = if idx.parity.is_one() {
        BellIndex::new(idx.parity, idx.phase ^ Bit::ONE)
    } else {
        idx
    };
    StateVector {
        num_qubits: 2,
        amplitudes: bell_vector(idx).to_vec(),
    }
}

/// Kronecker product; `a`'s qubits take the lower indices.
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector, QsimError> {
    let n = a.num_qubits + b.num_qubits;
    if n > MAX_QUBITS {
        return Err(QsimError::RegisterOverflow(n));
    }
    let amplitudes = a
        .amplitudes
        .iter()
        .flat_map(|x| b.amplitudes.iter().map(move |y| x * y))
        .collect();
    Ok(StateVector {
        num_qubits: n,
        amplitudes,
    })
}

/// Rounds `p` to the nearest multiple of 2^-20 when it lies within
/// [`TOLERANCE`] of one. Every branch probability of the protocol is such a
/// dyadic rational, so products of snapped values are exact in binary floating
/// point.
pub fn snap_dyadic(p: f64) -> f64 {
    const SCALE: f64 = (1u64 << 20) as f64;
    let snapped = (p * SCALE).round() / SCALE;
    if (p - snapped).abs() <= TOLERANCE {
        snapped
    } else {
        p
    }
}

/// Measurement basis for [`born_distribution`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Z(usize),
    Bell(usize, usize),
}

/// A measurement outcome label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Z(Bit),
    Bell(BellIndex),
}

/// Outcome probabilities of measuring `state` in `basis`, without collapsing.
/// Outcomes are listed in code order; probabilities below 1e-13 are flushed to 0.
pub fn born_distribution(state: &StateVector, basis: Basis) -> Vec<(Outcome, f64)> {
    match basis {
        Basis::Z(q) => {
            let p = z_probabilities(state, q);
            vec![(Outcome::Z(Bit::ZERO), p[0]), (Outcome::Z(Bit::ONE), p[1])]
        }
        Basis::Bell(i, j) => BellIndex::ALL
            .iter()
            .map(|&b| (Outcome::Bell(b), flush(bell_projection(state, i, j, b).1)))
            .collect(),
    }
}

fn flush(p: f64) -> f64 {
    if p < FLUSH {
        0.0
    } else {
        p
    }
}

fn z_probabilities(state: &StateVector, qubit: usize) -> [f64; 2] {
    state.check_qubit(qubit);
    let mask = state.mask(qubit);
    let mut p = [0.0; 2];
    for (i, a) in state.amplitudes.iter().enumerate() {
        p[(i & mask != 0) as usize] += a.norm_sqr();
    }
    p.map(flush)
}

/// Z-basis measurement of `qubit`, sampled by the Born rule.
pub fn measure_z<R: Randomness + ?Sized>(
    state: &StateVector,
    qubit: usize,
    rng: &mut R,
) -> (Bit, StateVector) {
    let p = z_probabilities(state, qubit);
    let outcome = rng.choose(&p);
    let mask = state.mask(qubit);
    let amplitudes = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            if ((i & mask != 0) as usize) == outcome {
                a
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    (
        Bit::from(outcome == 1),
        StateVector::renormalized(state.num_qubits, amplitudes),
    )
}

/// Unnormalized projection of qubits `(i, j)` onto Bell state `label`, with its probability.
fn bell_projection(
    state: &StateVector,
    i: usize,
    j: usize,
    label: BellIndex,
) -> (Vec<Complex64>, f64) {
    state.check_qubit(i);
    state.check_qubit(j);
    assert_ne!(i, j, "Bell measurement needs two distinct qubits");
    let (mi, mj) = (state.mask(i), state.mask(j));
    let c = bell_vector(label);
    let mut out = vec![Complex64::new(0.0, 0.0); state.amplitudes.len()];
    let mut prob = 0.0;
    for base in 0..state.amplitudes.len() {
        if base & (mi | mj) != 0 {
            continue;
        }
        let idx =
            |x: usize, y: usize| base | if x == 1 { mi } else { 0 } | if y == 1 { mj } else { 0 };
        let overlap: Complex64 = (0..4)
            .map(|k| c[k].conj() * state.amplitudes[idx(k >> 1, k & 1)])
            .sum();
        prob += overlap.norm_sqr();
        for k in 0..4 {
            out[idx(k >> 1, k & 1)] = c[k] * overlap;
        }
    }
    (out, prob)
}

/// Bell-basis measurement of qubits `(i, j)`; `i` is the first qubit of the basis
/// vectors. The register keeps its size.
pub fn measure_bell<R: Randomness + ?Sized>(
    state: &StateVector,
    pair: (usize, usize),
    rng: &mut R,
) -> (BellIndex, StateVector) {
    let (i, j) = pair;
    let projections: Vec<_> = BellIndex::ALL
        .iter()
        .map(|&b| bell_projection(state, i, j, b))
        .collect();
    let probs: Vec<f64> = projections.iter().map(|(_, p)| flush(*p)).collect();
    let k = rng.choose(&probs);
    let (amps, _) = projections.into_iter().nth(k).expect("four projections");
    (
        BellIndex::ALL[k],
        StateVector::renormalized(state.num_qubits, amps),
    )
}
