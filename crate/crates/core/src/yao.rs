//! Compilation of public-coin one-way classical protocols into quantum
//! fingerprint protocols with simultaneous messages, plus a message
//! discretizer that trades the quantum message for an exponentially
//! longer classical one.
//!
//! Both parties fingerprint their whole behavior: Alice superposes her
//! message over every coin string with a marker qubit set, Bob
//! superposes the accept predicate over every coin and message. The
//! overlap of the two fingerprints is the accepting fraction scaled by
//! `2^(-s/2)`, so a swap-test estimate of the overlap separates
//! accepting inputs from rejecting ones.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::protocol::enumerate::ENUMERATION_GUARD_LOG2;
use crate::protocol::one_way::{AcceptRule, MessageRule};
use crate::protocol::{
    Channel, CostReport, DomainCheck, GenericProtocol, ModelTag, OneWayClassicalProtocol,
    ProtocolBody, Resource, StatePreparation, StateReferee, Topology,
};
use crate::quantum::{swap_test_accept_prob, OutcomeDistribution, Register, StateVector};
use crate::rng::stream_rng;
use crate::tolerance::IDENTITY_TOL;

// Fingerprint states enumerate every (coin, message) pair, so their
// dimension is guarded like any other enumeration.
fn guard_fingerprint_size(r: usize, s: usize) -> Result<()> {
    let log2_size = (r + s + 1) as u64;
    if log2_size > ENUMERATION_GUARD_LOG2 as u64 {
        return Err(Error::EnumerationTooLarge { log2_size, guard_log2: ENUMERATION_GUARD_LOG2 });
    }
    Ok(())
}

// Coin register, message register, one flag qubit. Zero-width
// registers are omitted rather than carried around.
fn fingerprint_registers(r: usize, s: usize) -> Vec<Register> {
    let mut regs = Vec::with_capacity(3);
    if r > 0 {
        regs.push(Register::new("q", r));
    }
    if s > 0 {
        regs.push(Register::new("m", s));
    }
    regs.push(Register::new("p", 1));
    regs
}

/// Alice's fingerprint: the uniform superposition over coin strings of
/// her message, with the flag qubit constantly set.
pub fn alpha_state(protocol: &OneWayClassicalProtocol, x: usize) -> Result<StateVector> {
    let (r, s) = (protocol.random_bits(), protocol.message_bits());
    guard_fingerprint_size(r, s)?;
    let coin_count = 1usize << r;
    let scale = Complex64::new(1.0 / (coin_count as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (r + s + 1)];
    for q in 0..coin_count {
        let coins = BitString::from_index(q, r);
        let message = protocol.message(x, &coins)?;
        amps[((q << s) | message.to_index()) << 1 | 1] = scale;
    }
    StateVector::new(fingerprint_registers(r, s), amps)
}

/// Bob's fingerprint: the uniform superposition over coin strings and
/// candidate messages, with the flag qubit carrying his verdict.
pub fn beta_state(protocol: &OneWayClassicalProtocol, y: usize) -> Result<StateVector> {
    let (r, s) = (protocol.random_bits(), protocol.message_bits());
    guard_fingerprint_size(r, s)?;
    let coin_count = 1usize << r;
    let message_count = 1usize << s;
    let scale = Complex64::new(1.0 / ((coin_count * message_count) as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (r + s + 1)];
    for q in 0..coin_count {
        let coins = BitString::from_index(q, r);
        for a in 0..message_count {
            let message = BitString::from_index(a, s);
            let verdict = protocol.accepts(y, &message, &coins)?;
            amps[((q << s) | a) << 1 | usize::from(verdict)] = scale;
        }
    }
    StateVector::new(fingerprint_registers(r, s), amps)
}

/// Builds both fingerprints and their overlap, then cross-checks the
/// overlap against its closed form `2^(-s/2)` times the accepting
/// fraction, computed by coin enumeration instead of amplitudes. The
/// two paths agreeing within 1e-9 is a structural self-check; failure
/// is an error, not a debug assertion.
pub fn build_fingerprint_states(
    protocol: &OneWayClassicalProtocol,
    x: usize,
    y: usize,
) -> Result<(StateVector, StateVector, f64)> {
    let alpha = alpha_state(protocol, x)?;
    let beta = beta_state(protocol, y)?;
    let overlap = alpha.inner_product(&beta)?;
    let s = protocol.message_bits();
    let predicted = 2f64.powf(-(s as f64) / 2.0) * protocol.accepting_fraction(x, y)?;
    if (overlap.re - predicted).abs() > IDENTITY_TOL || overlap.im.abs() > IDENTITY_TOL {
        return Err(Error::IdentityViolation(format!(
            "overlap {overlap} differs from the accepting-fraction form {predicted}"
        )));
    }
    Ok((alpha, beta, overlap.re))
}

/// `P(X >= m)` for `X ~ Binomial(k, p)`, through the regularized
/// incomplete beta function.
fn binomial_tail_at_least(k: u64, m: u64, p: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if m > k {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    beta_reg(m as f64, (k - m + 1) as f64, p)
}

/// A compiled fingerprint protocol: each party ships `k` copies of its
/// fingerprint, the referee swap-tests the pairs and accepts when the
/// derived overlap-squared estimate `2*(hits/k) - 1` reaches
/// `tau^2`. Ties at the threshold accept.
#[derive(Clone)]
pub struct CompiledQsmpProtocol {
    source: OneWayClassicalProtocol,
    k: u64,
    tau: f64,
    threshold_hits: u64,
    cost: CostReport,
}

/// The serializable face of a compiled protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledSummary {
    pub k: u64,
    pub tau: f64,
    pub cost: CostReport,
}

/// Compiles a one-way protocol that decides a function with worst-case
/// advantage `gamma` into a fingerprint protocol whose decision is
/// wrong with probability at most `delta` on every input. The copy
/// count `k = ceil(16 * 4^s * ln(2/delta) / gamma^2)` makes the
/// swap-test frequency resolve the overlap gap with room to spare.
pub fn compile_to_qsmp(
    protocol: &OneWayClassicalProtocol,
    gamma: f64,
    delta: f64,
) -> Result<CompiledQsmpProtocol> {
    if !(gamma > 0.0 && gamma <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "advantage gamma must lie in (0, 1/2], got {gamma}"
        )));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "target error delta must lie in (0, 1/2), got {delta}"
        )));
    }
    let (r, s) = (protocol.random_bits(), protocol.message_bits());
    let tau = 2f64.powf(-(s as f64) / 2.0 - 1.0);
    let k_float = (16.0 * 4f64.powi(s as i32) * (2.0 / delta).ln() / (gamma * gamma)).ceil();
    if !k_float.is_finite() || k_float > 1e15 {
        return Err(Error::InvalidArgument(format!(
            "copy count {k_float:e} is beyond any simulable range"
        )));
    }
    let k = k_float as u64;
    // Accept iff hits/k >= (1 + tau^2)/2. With tau^2 = 2^-(s+2) the
    // cutoff is the exact rational k*(2^(s+2)+1) / 2^(s+3).
    let numer = k as u128 * ((1u128 << (s + 2)) + 1);
    let denom = 1u128 << (s + 3);
    let threshold_hits = numer.div_ceil(denom) as u64;
    let per_copy = r + s + 1;
    let qubits = (k as usize).checked_mul(per_copy).ok_or_else(|| {
        Error::InvalidArgument("per-side qubit cost overflows".into())
    })?;
    let cost = CostReport {
        alice_to_referee_qubits: qubits,
        bob_to_referee_qubits: qubits,
        ..CostReport::default()
    };
    Ok(CompiledQsmpProtocol { source: protocol.clone(), k, tau, threshold_hits, cost })
}

const SWAP_TEST_DOMAIN: u64 = 0x59;

impl CompiledQsmpProtocol {
    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Smallest number of accepting swap tests that makes the referee
    /// accept.
    pub fn threshold_hits(&self) -> u64 {
        self.threshold_hits
    }

    pub fn cost(&self) -> &CostReport {
        &self.cost
    }

    pub fn source(&self) -> &OneWayClassicalProtocol {
        &self.source
    }

    pub fn summary(&self) -> CompiledSummary {
        CompiledSummary { k: self.k, tau: self.tau, cost: self.cost.clone() }
    }

    /// Exact acceptance probability on `(x, y)`: the swap-test accept
    /// probability feeds a binomial tail at the hit threshold. No
    /// sampling is involved.
    pub fn accept_probability(&self, x: usize, y: usize) -> Result<f64> {
        let (alpha, beta, _) = build_fingerprint_states(&self.source, x, y)?;
        let p_swap = swap_test_accept_prob(&alpha, &beta)?;
        Ok(binomial_tail_at_least(self.k, self.threshold_hits, p_swap))
    }

    /// One Monte-Carlo run of the referee: `k` independent swap tests,
    /// each on its own RNG stream, against the hit threshold.
    pub fn sample_decision(&self, x: usize, y: usize, seed: u64) -> Result<bool> {
        let (alpha, beta, _) = build_fingerprint_states(&self.source, x, y)?;
        let p_swap = swap_test_accept_prob(&alpha, &beta)?;
        let mut hits = 0u64;
        for test in 0..self.k {
            let mut rng = stream_rng(seed, SWAP_TEST_DOMAIN, test);
            if rng.gen::<f64>() < p_swap {
                hits += 1;
            }
        }
        Ok(hits >= self.threshold_hits)
    }

    /// Executor form: a quantum simultaneous-message protocol over
    /// paired inputs. Each party prepares one fingerprint copy; the
    /// declared cost counts all `k`. The referee's verdict distribution
    /// is the exact binomial tail, labels "1"/"0".
    pub fn to_generic(&self) -> GenericProtocol<(usize, usize)> {
        let alice: StatePreparation<(usize, usize)> = {
            let source = self.source.clone();
            Arc::new(move |&(x, _): &(usize, usize)| alpha_state(&source, x))
        };
        let bob: StatePreparation<(usize, usize)> = {
            let source = self.source.clone();
            Arc::new(move |&(_, y): &(usize, usize)| beta_state(&source, y))
        };
        let (k, threshold) = (self.k, self.threshold_hits);
        let referee: StateReferee = Arc::new(move |sa: &StateVector, sb: &StateVector| {
            let p_swap = swap_test_accept_prob(sa, sb)?;
            let accept = binomial_tail_at_least(k, threshold, p_swap);
            Ok(OutcomeDistribution::from_weighted([
                ("1".to_string(), accept),
                ("0".to_string(), 1.0 - accept),
            ]))
        });
        let domain: DomainCheck<(usize, usize)> = {
            let (xs, ys) = (self.source.x_size(), self.source.y_size());
            Arc::new(move |&(x, y): &(usize, usize)| {
                if x >= xs || y >= ys {
                    return Err(Error::DomainMismatch(format!("({x}, {y}) outside {xs}x{ys}")));
                }
                Ok(())
            })
        };
        GenericProtocol::new(
            ModelTag::new(Channel::Quantum, Topology::Simultaneous, Resource::None),
            self.cost.clone(),
            0,
            ProtocolBody::QuantumSmp { alice, bob, referee },
            domain,
        )
        .expect("construction is consistent by design")
    }
}

/// Joint verdict over (Alice's message, Bob's message, coins).
pub type JointAcceptRule = Arc<dyn Fn(&BitString, &BitString, &BitString) -> bool + Send + Sync>;

/// Embeds a public-coin simultaneous-message protocol as a one-way
/// protocol: Alice forwards her message, Bob recomputes his own from
/// `(y, coins)` and runs the referee's accept predicate himself. The
/// accepting fraction on every input pair is untouched, so the
/// compiler applies to simultaneous sources through this adapter.
#[allow(clippy::too_many_arguments)]
pub fn embed_smp_as_one_way(
    random_bits: usize,
    alice_message_bits: usize,
    x_size: usize,
    y_size: usize,
    alice: MessageRule,
    bob: MessageRule,
    accept: JointAcceptRule,
) -> Result<OneWayClassicalProtocol> {
    let verdict: AcceptRule = Arc::new(move |y: usize, message: &BitString, coins: &BitString| {
        let bob_message = bob(y, coins);
        accept(message, &bob_message, coins)
    });
    OneWayClassicalProtocol::new(
        random_bits,
        alice_message_bits,
        x_size,
        y_size,
        alice,
        verdict,
    )
}

/// A two-coin demonstration protocol deciding equality of two bits
/// with worst-case advantage exactly 1/4: Alice's two-bit message
/// carries her bit, and Bob deliberately flips his verdict on one of
/// the four coin strings, so every input succeeds on exactly three of
/// them.
pub fn equality_demo_protocol() -> OneWayClassicalProtocol {
    let alice: MessageRule =
        Arc::new(|x: usize, _| BitString::new(vec![x == 1, false]));
    let bob: AcceptRule = Arc::new(|y: usize, message: &BitString, coins: &BitString| {
        (message.get(0) == (y == 1)) ^ (coins.count_ones() == 2)
    });
    OneWayClassicalProtocol::new(2, 2, 2, 2, alice, bob)
        .expect("fixed parameters are valid")
}

/// Rounding width for discretized amplitudes: `t` bits per real and
/// imaginary part at the requested precision, for a state of
/// `qubit_count` qubits.
pub fn precision_bits(qubit_count: usize, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "precision epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok((qubit_count as f64 / 2.0 + 2.0 + (1.0 / epsilon).log2()).ceil() as usize)
}

// Each part is a t-bit two's-complement integer q meaning q * 2^(1-t);
// the representable grid covers [-1, 1) and rounding clamps at the top
// so a part of exactly 1 maps to the largest grid point.
fn push_part(bits: &mut Vec<bool>, part: f64, t: usize) {
    let scale = (1u64 << (t - 1)) as f64;
    let q = (part * scale).round() as i64;
    let q = q.clamp(-(1i64 << (t - 1)), (1i64 << (t - 1)) - 1);
    let raw = (q as u64) & ((1u64 << t) - 1);
    for bit in (0..t).rev() {
        bits.push(raw >> bit & 1 == 1);
    }
}

fn read_part(bits: &BitString, offset: usize, t: usize) -> f64 {
    let mut raw = 0u64;
    for i in 0..t {
        raw = raw << 1 | u64::from(bits.get(offset + i));
    }
    let q = if raw >= 1u64 << (t - 1) { raw as i64 - (1i64 << t) } else { raw as i64 };
    q as f64 / (1u64 << (t - 1)) as f64
}

fn encode_state(state: &StateVector, t: usize) -> BitString {
    let mut bits = Vec::with_capacity(state.dim() * 2 * t);
    for amp in state.amplitudes() {
        push_part(&mut bits, amp.re, t);
        push_part(&mut bits, amp.im, t);
    }
    BitString::new(bits)
}

fn decode_state(
    description: &BitString,
    registers: Vec<Register>,
    t: usize,
) -> Result<StateVector> {
    let dim = 1usize << registers.iter().map(|r| r.width).sum::<usize>();
    let mut amps = Vec::with_capacity(dim);
    for i in 0..dim {
        let re = read_part(description, 2 * i * t, t);
        let im = read_part(description, (2 * i + 1) * t, t);
        amps.push(Complex64::new(re, im));
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return Err(Error::InvalidArgument("description decodes to the zero vector".into()));
    }
    let scale = Complex64::new(1.0 / norm, 0.0);
    StateVector::new(registers, amps.into_iter().map(|a| a * scale).collect())
}

/// Rounds every amplitude of `state` to the grid that `epsilon`
/// dictates and renormalizes. The description is a fixed point of the
/// round-trip: discretizing the reconstructed state at the same
/// epsilon reproduces it bit for bit. Projective outcome probabilities
/// of the reconstruction stay within `epsilon` of the original's.
pub fn discretize_message(
    state: &StateVector,
    epsilon: f64,
) -> Result<(BitString, StateVector)> {
    let t = precision_bits(state.total_qubits(), epsilon)?;
    let registers = state.registers().to_vec();
    // Rounding then renormalizing can shift the next rounding, so
    // iterate until the description repeats. The orbit is finite; on a
    // longer cycle the lexicographically smallest member is canonical.
    let mut seen: Vec<BitString> = Vec::new();
    let mut current = state.clone();
    loop {
        let description = encode_state(&current, t);
        if let Some(pos) = seen.iter().position(|d| *d == description) {
            let best = seen[pos..].iter().min().expect("cycle is nonempty").clone();
            let reconstructed = decode_state(&best, registers, t)?;
            return Ok((best, reconstructed));
        }
        current = decode_state(&description, registers.clone(), t)?;
        seen.push(description);
        if seen.len() > 64 {
            return Err(Error::IdentityViolation(
                "amplitude rounding failed to reach a fixed point".into(),
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::TableProtocol;
    use crate::quantum::{measure_projective, ProjectorFamily, Subspace};
    use nalgebra::{DMatrix, DVector};

    fn constant_verdict_protocol(r: usize, s: usize, verdict: bool) -> OneWayClassicalProtocol {
        let alice: MessageRule = Arc::new(move |_, _| BitString::zeros(s));
        let bob: AcceptRule = Arc::new(move |_, _, _| verdict);
        OneWayClassicalProtocol::new(r, s, 2, 2, alice, bob).unwrap()
    }

    #[test]
    fn overlap_matches_hand_worked_examples() {
        for (r, s) in [(1usize, 1usize), (2, 1), (2, 2), (0, 2)] {
            let all = constant_verdict_protocol(r, s, true);
            let (_, _, overlap) = build_fingerprint_states(&all, 0, 0).unwrap();
            assert!((overlap - 2f64.powf(-(s as f64) / 2.0)).abs() < 1e-12);
            let none = constant_verdict_protocol(r, s, false);
            let (_, _, overlap) = build_fingerprint_states(&none, 0, 0).unwrap();
            assert!(overlap.abs() < 1e-12);
        }
        // One accepting coin string out of two, one message bit.
        let alice: MessageRule = Arc::new(|_, coins: &BitString| coins.clone());
        let bob: AcceptRule = Arc::new(|_, _, coins: &BitString| coins.get(0));
        let half = OneWayClassicalProtocol::new(1, 1, 1, 1, alice, bob).unwrap();
        let (_, _, overlap) = build_fingerprint_states(&half, 0, 0).unwrap();
        assert!((overlap - 0.5 / 2f64.sqrt()).abs() < 1e-12);
        assert!((overlap - 0.35355339).abs() < 1e-8);
    }

    fn random_table(r: usize, s: usize, seed: u64) -> OneWayClassicalProtocol {
        let mut rng = stream_rng(seed, 0x77, (r * 8 + s) as u64);
        let coin_count = 1usize << r;
        let message_count = 1usize << s;
        let messages = (0..2)
            .map(|_| (0..coin_count).map(|_| BitString::random(s, &mut rng)).collect())
            .collect();
        let accepts = (0..2)
            .map(|_| {
                (0..message_count)
                    .map(|_| (0..coin_count).map(|_| u8::from(rng.gen::<bool>())).collect())
                    .collect()
            })
            .collect();
        TableProtocol { random_bits: r, message_bits: s, messages, accepts }
            .to_protocol()
            .unwrap()
    }

    #[test]
    fn overlap_identity_survives_a_random_sweep() {
        for r in 0..=3usize {
            for s in 0..=2usize {
                for seed in 0..3u64 {
                    let p = random_table(r, s, seed);
                    for x in 0..2 {
                        for y in 0..2 {
                            // The identity is checked internally; also
                            // pin the returned value's range.
                            let (_, _, overlap) =
                                build_fingerprint_states(&p, x, y).unwrap();
                            assert!(overlap >= -1e-12);
                            assert!(overlap <= 2f64.powf(-(s as f64) / 2.0) + 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn fingerprints_are_guarded_against_huge_protocols() {
        let p = constant_verdict_protocol(26, 2, true);
        assert!(matches!(
            alpha_state(&p, 0),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn threshold_and_copy_count_formulas() {
        let p = constant_verdict_protocol(1, 2, true);
        let compiled = compile_to_qsmp(&p, 0.25, 0.1).unwrap();
        assert!((compiled.tau() - 0.25).abs() < 1e-15);
        // ceil(16 * 16 * ln(20) / 0.0625) frozen by a separate
        // evaluation of the closed form.
        assert_eq!(compiled.k(), 12271);
        assert_eq!(compiled.threshold_hits(), 6519);
        assert_eq!(compiled.cost().alice_to_referee_qubits, 12271 * 4);
        assert_eq!(compiled.cost().bob_to_referee_qubits, 12271 * 4);
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        let p = constant_verdict_protocol(1, 1, true);
        for (gamma, delta) in
            [(0.0, 0.1), (0.6, 0.1), (-0.1, 0.1), (0.25, 0.0), (0.25, 0.5), (0.25, 0.7)]
        {
            assert!(matches!(
                compile_to_qsmp(&p, gamma, delta),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn extreme_sources_compile_to_confident_decisions() {
        for s in 0..=3usize {
            let accepting = constant_verdict_protocol(1, s, true);
            let compiled = compile_to_qsmp(&accepting, 0.5, 0.1).unwrap();
            let p = compiled.accept_probability(0, 0).unwrap();
            assert!(p >= 0.9, "s={s}: all-accepting source landed at {p}");

            let rejecting = constant_verdict_protocol(1, s, false);
            let compiled = compile_to_qsmp(&rejecting, 0.5, 0.1).unwrap();
            let p = compiled.accept_probability(0, 0).unwrap();
            assert!(p <= 0.1, "s={s}: all-rejecting source landed at {p}");
        }
    }

    #[test]
    fn equality_demo_has_exact_quarter_advantage() {
        let p = equality_demo_protocol();
        for x in 0..2 {
            for y in 0..2 {
                let fraction = p.accepting_fraction(x, y).unwrap();
                let expect = if x == y { 0.75 } else { 0.25 };
                assert!((fraction - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn compiled_equality_decides_with_the_target_confidence() {
        let compiled = compile_to_qsmp(&equality_demo_protocol(), 0.25, 0.1).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let p = compiled.accept_probability(x, y).unwrap();
                if x == y {
                    assert!(p >= 0.9, "({x},{y}) accepted with only {p}");
                } else {
                    assert!(p <= 0.1, "({x},{y}) accepted with {p}");
                }
            }
        }
    }

    #[test]
    fn generic_form_reports_the_same_acceptance() {
        let compiled = compile_to_qsmp(&equality_demo_protocol(), 0.25, 0.1).unwrap();
        let generic = compiled.to_generic();
        for x in 0..2 {
            for y in 0..2 {
                let (dist, cost) = generic.run_exact(&(x, y)).unwrap();
                let direct = compiled.accept_probability(x, y).unwrap();
                assert!((dist.probability("1") - direct).abs() < 1e-12);
                assert_eq!(cost.alice_to_referee_qubits, 12271 * 5);
            }
        }
        assert!(matches!(generic.run_exact(&(2, 0)), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn sampled_decisions_follow_the_analytic_verdict() {
        let compiled = compile_to_qsmp(&equality_demo_protocol(), 0.25, 0.1).unwrap();
        for seed in 0..5u64 {
            assert!(compiled.sample_decision(0, 0, seed).unwrap());
            assert!(compiled.sample_decision(1, 1, seed).unwrap());
            assert!(!compiled.sample_decision(0, 1, seed).unwrap());
            assert!(!compiled.sample_decision(1, 0, seed).unwrap());
        }
    }

    #[test]
    fn acceptance_is_monotone_in_the_source_fraction() {
        let mut points: Vec<(f64, f64)> = Vec::new();
        for seed in 0..6u64 {
            let p = random_table(2, 1, seed + 100);
            let compiled = compile_to_qsmp(&p, 0.25, 0.1).unwrap();
            for x in 0..2 {
                for y in 0..2 {
                    points.push((
                        p.accepting_fraction(x, y).unwrap(),
                        compiled.accept_probability(x, y).unwrap(),
                    ));
                }
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-12, "{w:?}");
        }
    }

    #[test]
    fn binomial_tail_matches_brute_force() {
        for &(k, p) in &[(9u64, 0.3f64), (10, 0.5), (12, 0.85), (7, 0.01)] {
            for m in 0..=k + 1 {
                let mut direct = 0.0;
                for i in m..=k {
                    let mut term = p.powi(i as i32) * (1.0 - p).powi((k - i) as i32);
                    // binomial coefficient by running product
                    for j in 0..i {
                        term *= (k - j) as f64 / (i - j) as f64;
                    }
                    direct += term;
                }
                let tail = binomial_tail_at_least(k, m, p);
                assert!(
                    (tail - direct).abs() < 1e-12,
                    "k={k} m={m} p={p}: {tail} vs {direct}"
                );
            }
        }
        assert_eq!(binomial_tail_at_least(10, 0, 0.3), 1.0);
        assert_eq!(binomial_tail_at_least(10, 11, 0.3), 0.0);
        assert_eq!(binomial_tail_at_least(10, 3, 0.0), 0.0);
        assert_eq!(binomial_tail_at_least(10, 3, 1.0), 1.0);
    }

    #[test]
    fn smp_embedding_preserves_the_accepting_fraction() {
        // Alice and Bob each forward their bit XOR the coin; the
        // referee accepts when the two messages agree (equality).
        let alice: MessageRule =
            Arc::new(|x: usize, coins: &BitString| BitString::new(vec![(x == 1) ^ coins.get(0)]));
        let bob: MessageRule =
            Arc::new(|y: usize, coins: &BitString| BitString::new(vec![(y == 1) ^ coins.get(0)]));
        let accept = Arc::new(|ma: &BitString, mb: &BitString, _: &BitString| ma == mb);
        let one_way = embed_smp_as_one_way(1, 1, 2, 2, alice, bob, accept).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let expect = if x == y { 1.0 } else { 0.0 };
                assert!((one_way.accepting_fraction(x, y).unwrap() - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn precision_bit_formula() {
        assert_eq!(precision_bits(3, 0.01).unwrap(), 11);
        assert_eq!(precision_bits(0, 0.25).unwrap(), 4);
        assert!(precision_bits(2, 0.0).is_err());
        assert!(precision_bits(2, 1.0).is_err());
        assert!(precision_bits(2, -0.5).is_err());
    }

    #[test]
    fn basis_state_discretizes_exactly() {
        let state = StateVector::basis(vec![Register::new("R", 2)], &[0]).unwrap();
        for epsilon in [0.5, 0.01, 1e-6] {
            let (description, reconstructed) = discretize_message(&state, epsilon).unwrap();
            let t = precision_bits(2, epsilon).unwrap();
            assert_eq!(description.len(), 8 * t);
            for (got, want) in reconstructed.amplitudes().iter().zip(state.amplitudes()) {
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn description_length_follows_the_formula() {
        let mut rng = stream_rng(3, 0x78, 0);
        let state = StateVector::random(vec![Register::new("R", 3)], &mut rng);
        let (description, _) = discretize_message(&state, 0.01).unwrap();
        assert_eq!(description.len(), 176);
    }

    fn random_complete_family(dim: usize, splits: &[usize], seed: u64) -> ProjectorFamily {
        let mut rng = stream_rng(seed, 0x79, 0);
        let vectors: Vec<DVector<Complex64>> = (0..dim)
            .map(|_| {
                DVector::from_iterator(
                    dim,
                    (0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)),
                )
            })
            .collect();
        let basis = Subspace::span(dim, &vectors).unwrap();
        assert_eq!(basis.dim(), dim);
        let mut start = 0;
        let mut parts = Vec::new();
        for &width in splits {
            let block = DMatrix::from_columns(
                &(start..start + width).map(|c| basis.basis().column(c).into_owned()).collect::<Vec<_>>(),
            );
            parts.push(Subspace::new(dim, block).unwrap());
            start += width;
        }
        ProjectorFamily::new("R", parts).unwrap()
    }

    #[test]
    fn discretization_shifts_no_outcome_by_more_than_epsilon() {
        let mut rng = stream_rng(11, 0x7A, 0);
        let state = StateVector::random(vec![Register::new("R", 2)], &mut rng);
        let epsilon = 0.01;
        let (_, reconstructed) = discretize_message(&state, epsilon).unwrap();
        let mut worst = 0.0f64;
        for seed in 0..100u64 {
            let splits = match seed % 3 {
                0 => vec![1usize, 1, 2],
                1 => vec![2usize, 2],
                _ => vec![1usize, 3],
            };
            let family = random_complete_family(4, &splits, seed);
            let (before, _) = measure_projective(&state, &family).unwrap();
            let (after, _) = measure_projective(&reconstructed, &family).unwrap();
            for (label, p) in before.iter() {
                worst = worst.max((p - after.probability(label)).abs());
            }
        }
        assert!(worst <= epsilon, "worst shift {worst}");
    }

    #[test]
    fn discretization_reaches_a_fixed_point() {
        let mut rng = stream_rng(23, 0x7B, 0);
        for trial in 0..20 {
            let state = StateVector::random(vec![Register::new("R", 2)], &mut rng);
            let epsilon = if trial % 2 == 0 { 0.01 } else { 0.2 };
            let (description, reconstructed) = discretize_message(&state, epsilon).unwrap();
            let (again, twice) = discretize_message(&reconstructed, epsilon).unwrap();
            assert_eq!(description, again, "trial {trial}");
            for (a, b) in twice.amplitudes().iter().zip(reconstructed.amplitudes()) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn compiled_summary_serializes_with_its_fields() {
        let compiled = compile_to_qsmp(&equality_demo_protocol(), 0.25, 0.1).unwrap();
        let json = serde_json::to_string(&compiled.summary()).unwrap();
        assert!(json.contains("\"k\":12271"));
        assert!(json.contains("\"tau\":0.25"));
        let back: CompiledSummary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, compiled.summary());
    }
}
