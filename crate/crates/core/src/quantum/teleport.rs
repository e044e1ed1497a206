//! Teleportation of a single qubit through a shared maximally entangled
//! pair, paying two classical bits.

use num_complex::Complex64;
use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::tolerance::PROBABILITY_TOL;

use super::measure::{measure_projective, ProjectorFamily};
use super::{Register, StateVector};

/// One Bell-measurement branch: the two classical bits the sender
/// transmits, the branch probability, and the receiver's corrected state.
#[derive(Debug, Clone)]
pub struct TeleportBranch {
    pub classical_bits: BitString,
    pub probability: f64,
    pub state: StateVector,
}

/// Result of a sampled teleportation run.
#[derive(Debug, Clone)]
pub struct TeleportOutcome {
    pub classical_bits: BitString,
    pub state: StateVector,
}

/// All four Bell branches of teleporting `message` (one qubit) through
/// `pair`, which must be the standard maximally entangled two-qubit state.
/// Each branch reconstructs the message exactly, up to global phase.
pub fn teleport_branches(
    message: &StateVector,
    pair: &StateVector,
) -> Result<Vec<TeleportBranch>> {
    check_message(message)?;
    check_pair(pair)?;

    // Rebuild on canonical register names; layout (m, A, B), m most
    // significant.
    let mut joint = StateVector::new(
        vec![
            Register::new("m", 1),
            Register::new("A", 1),
            Register::new("B", 1),
        ],
        kron(message.amplitudes(), pair.amplitudes()),
    )?;

    joint = cnot_m_to_a(&joint);
    joint = joint.apply_hadamard("m")?;

    let mut branches = Vec::with_capacity(4);
    let family_m = ProjectorFamily::computational("m", 1);
    let (_, m_outcomes) = measure_projective(&joint, &family_m)?;
    for m_out in m_outcomes {
        let family_a = ProjectorFamily::computational("A", 1);
        let (_, a_outcomes) = measure_projective(&m_out.post_state, &family_a)?;
        for a_out in a_outcomes {
            let (m_bit, rest) = a_out.post_state.factor_basis_register("m")?;
            let (a_bit, b_state) = rest.factor_basis_register("A")?;
            let corrected = correct(&b_state, m_bit == 1, a_bit == 1);
            branches.push(TeleportBranch {
                classical_bits: BitString::new(vec![m_bit == 1, a_bit == 1]),
                probability: m_out.probability * a_out.probability,
                state: corrected.canonicalize_global_phase(),
            });
        }
    }
    Ok(branches)
}

/// Samples one Bell branch and returns the transmitted bits with the
/// receiver's reconstructed qubit.
pub fn teleport_qubit<R: Rng + ?Sized>(
    message: &StateVector,
    pair: &StateVector,
    rng: &mut R,
) -> Result<TeleportOutcome> {
    let branches = teleport_branches(message, pair)?;
    let mut draw: f64 = rng.gen();
    for b in &branches {
        draw -= b.probability;
        if draw <= 0.0 {
            return Ok(TeleportOutcome {
                classical_bits: b.classical_bits.clone(),
                state: b.state.clone(),
            });
        }
    }
    let last = branches.last().expect("four Bell branches");
    Ok(TeleportOutcome {
        classical_bits: last.classical_bits.clone(),
        state: last.state.clone(),
    })
}

fn check_message(message: &StateVector) -> Result<()> {
    if message.total_qubits() != 1 {
        return Err(Error::InvalidArgument(format!(
            "teleportation moves one qubit, message has {}",
            message.total_qubits()
        )));
    }
    Ok(())
}

fn check_pair(pair: &StateVector) -> Result<()> {
    if pair.registers().len() != 2
        || pair.registers().iter().any(|r| r.width != 1)
    {
        return Err(Error::InvalidArgument(
            "shared pair must be two one-qubit registers".into(),
        ));
    }
    let root_half = std::f64::consts::FRAC_1_SQRT_2;
    let expect = [root_half, 0.0, 0.0, root_half];
    for (a, e) in pair.amplitudes().iter().zip(expect) {
        if (a - Complex64::new(e, 0.0)).norm() > PROBABILITY_TOL {
            return Err(Error::InvalidArgument(
                "shared pair is not the standard maximally entangled state".into(),
            ));
        }
    }
    Ok(())
}

fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// CNOT with control `m` (bit 2) and target `A` (bit 1) on the fixed
/// (m, A, B) layout.
fn cnot_m_to_a(state: &StateVector) -> StateVector {
    let mut amps = state.amplitudes().to_vec();
    for idx in 0..amps.len() {
        if idx & 0b100 != 0 && idx & 0b010 == 0 {
            amps.swap(idx, idx | 0b010);
        }
    }
    StateVector { registers: state.registers().to_vec(), amps }
}

/// Receiver-side Pauli corrections on the one-qubit state.
fn correct(state: &StateVector, z: bool, x: bool) -> StateVector {
    let mut amps = state.amplitudes().to_vec();
    if x {
        amps.swap(0, 1);
    }
    if z {
        amps[1] = -amps[1];
    }
    StateVector { registers: state.registers().to_vec(), amps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    use crate::quantum::epr_state;
    use crate::rng::stream_rng;

    fn random_qubit(seed: u64) -> StateVector {
        let mut rng = stream_rng(seed, 30, 0);
        StateVector::random(vec![Register::new("m", 1)], &mut rng)
    }

    #[test]
    fn all_branches_reconstruct_exactly() {
        let pair = epr_state(1).unwrap();
        for seed in 0..25 {
            let message = random_qubit(seed);
            let branches = teleport_branches(&message, &pair).unwrap();
            assert_eq!(branches.len(), 4);
            let mut total = 0.0;
            for b in &branches {
                assert_abs_diff_eq!(b.probability, 0.25, epsilon = 1e-12);
                assert!(b.state.fidelity(&message).unwrap() > 1.0 - 1e-12);
                total += b.probability;
            }
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sampled_run_reports_two_bits() {
        let pair = epr_state(1).unwrap();
        let message = random_qubit(99);
        let mut rng = stream_rng(99, 31, 0);
        let out = teleport_qubit(&message, &pair, &mut rng).unwrap();
        assert_eq!(out.classical_bits.len(), 2);
        assert!(out.state.fidelity(&message).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn bit_pairs_are_uniform() {
        let pair = epr_state(1).unwrap();
        let message = random_qubit(7);
        let mut counts = [0u32; 4];
        let mut rng = stream_rng(7, 32, 0);
        let trials = 10_000;
        for _ in 0..trials {
            let out = teleport_qubit(&message, &pair, &mut rng).unwrap();
            counts[out.classical_bits.to_index()] += 1;
        }
        for c in counts {
            let freq = f64::from(c) / f64::from(trials);
            assert!((freq - 0.25).abs() < 0.02, "frequency {freq}");
        }
    }

    #[test]
    fn malformed_pair_is_rejected() {
        let message = random_qubit(1);
        // |00> is not entangled
        let bad = StateVector::basis(
            vec![Register::new("A", 1), Register::new("B", 1)],
            &[0, 0],
        )
        .unwrap();
        assert!(teleport_branches(&message, &bad).is_err());

        let two_wide = StateVector::basis(vec![Register::new("A", 2)], &[0]).unwrap();
        assert!(teleport_branches(&message, &two_wide).is_err());
    }
}
