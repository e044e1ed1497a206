//! Exact entanglement-assisted simultaneous protocol for the hidden
//! matching relation.
//!
//! The parties share one EPR pair per index bit. Each side folds its
//! bit string into the phases of its half; Alice projects her half
//! onto the two-dimensional span of one matching edge, then both
//! Hadamard-rotate and read out. The referee sees four bit strings and
//! recovers an edge together with the joint string's XOR across it,
//! never producing an invalid answer.

use std::sync::Arc;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::problems::{Matching, MhmInstance, MhmTriple};
use crate::protocol::{
    sample_local_branch, Channel, CostReport, DomainCheck, FallibleReferee, GenericProtocol,
    LocalBranch, LocalMeasurement, ModelTag, ProtocolBody, Resource, Topology,
};
use crate::quantum::{
    epr_state, measure_projective, OutcomeDistribution, ProjectorFamily, StateVector, Subspace,
};
use crate::rng::stream_rng;

/// The four classical strings one run puts on the wire: Alice's edge
/// endpoints and Hadamard readout, then Bob's Hadamard readout. All
/// four have the same width, the number of shared pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MhmTranscript {
    pub k: BitString,
    pub l: BitString,
    pub b1: BitString,
    pub b2: BitString,
}

impl MhmTranscript {
    pub fn decode(&self) -> Result<MhmTriple> {
        referee_decode(&self.k, &self.l, &self.b1, &self.b2)
    }

    /// The parity identity every reachable transcript satisfies: the
    /// decoded answer bit equals the joint string's XOR across the
    /// edge. Checked against the padded form of `instance`.
    pub fn identity_holds(&self, instance: &MhmInstance) -> Result<bool> {
        let triple = self.decode()?;
        let padded = pad_instance(instance)?;
        if triple.j() >= padded.n() {
            return Err(Error::DomainMismatch(format!(
                "transcript names index {} outside 0..{}",
                triple.j(),
                padded.n()
            )));
        }
        let a = padded.joint_string();
        Ok(triple.b() == (a.get(triple.i()) ^ a.get(triple.j())))
    }
}

/// Combines the four message strings into the output triple:
/// `(min(k,l), max(k,l), (b1 XOR b2) . (k XOR l))`.
pub fn referee_decode(
    k: &BitString,
    l: &BitString,
    b1: &BitString,
    b2: &BitString,
) -> Result<MhmTriple> {
    let width = k.len();
    if l.len() != width || b1.len() != width || b2.len() != width {
        return Err(Error::LayoutMismatch(format!(
            "referee needs four strings of one width, got {}/{}/{}/{}",
            k.len(),
            l.len(),
            b1.len(),
            b2.len()
        )));
    }
    if k == l {
        return Err(Error::InvalidArgument(format!("edge endpoints coincide at `{k}`")));
    }
    let bit = b1.xor(b2).dot(&k.xor(l));
    let (i, j) = (k.to_index(), l.to_index());
    MhmTriple::new(i.min(j), i.max(j), bit)
}

/// Embeds an instance into the next power-of-two size: both strings
/// gain zero bits and the matching gains edges pairing the fresh
/// indices in order. The identity when the size already is a power of
/// two. Answers on the padded instance are judged against the padded
/// relation, which contains the original relation's triples.
pub fn pad_instance(instance: &MhmInstance) -> Result<MhmInstance> {
    let n = instance.n();
    let padded_n = n.next_power_of_two();
    if padded_n == n {
        return Ok(instance.clone());
    }
    let mut edges = instance.matching().edges().to_vec();
    let mut v = n;
    while v < padded_n {
        edges.push((v, v + 1));
        v += 2;
    }
    MhmInstance::new(
        instance.alice_bits().pad_to(padded_n),
        instance.bob_bits().pad_to(padded_n),
        Matching::new(padded_n, edges)?,
    )
}

// Width of an index string for a power-of-two element count.
fn index_bits(padded_n: usize) -> usize {
    padded_n.trailing_zeros() as usize
}

// One two-dimensional subspace per matching edge; a perfect matching
// makes the family orthogonal and complete.
fn edge_family(register: &str, matching: &Matching) -> Result<ProjectorFamily> {
    let ambient = matching.n();
    let subspaces = matching
        .edges()
        .iter()
        .map(|&(k, l)| Subspace::computational(ambient, &[k, l]))
        .collect::<Result<Vec<_>>>()?;
    ProjectorFamily::new(register, subspaces)
}

// Alice's local work: phase-fold her padded string, project onto one
// edge, rotate and read out. Message layout: k, l, readout.
fn alice_branches(instance: &MhmInstance, shared: &StateVector) -> Result<Vec<LocalBranch>> {
    let padded = pad_instance(instance)?;
    let t = index_bits(padded.n());
    let flagged = shared.apply_phase_flags("A", padded.alice_bits())?;
    let family = edge_family("A", padded.matching())?;
    let (_, edge_outcomes) = measure_projective(&flagged, &family)?;
    let readout_family = ProjectorFamily::computational("A", t);
    let mut branches = Vec::new();
    for outcome in edge_outcomes {
        let (k, l) = padded.matching().edges()[outcome.index];
        let prefix = BitString::from_index(k, t).concat(&BitString::from_index(l, t));
        let rotated = outcome.post_state.apply_hadamard("A")?;
        let (_, readouts) = measure_projective(&rotated, &readout_family)?;
        for r in readouts {
            branches.push(LocalBranch {
                probability: outcome.probability * r.probability,
                message: prefix.concat(&BitString::from_index(r.index, t)),
                post: r.post_state,
            });
        }
    }
    Ok(branches)
}

// Bob's local work: phase-fold his padded string, rotate, read out.
fn bob_branches(instance: &MhmInstance, state: &StateVector) -> Result<Vec<LocalBranch>> {
    let padded = pad_instance(instance)?;
    let t = index_bits(padded.n());
    let rotated = state.apply_phase_flags("B", padded.bob_bits())?.apply_hadamard("B")?;
    let (_, readouts) = measure_projective(&rotated, &ProjectorFamily::computational("B", t))?;
    Ok(readouts
        .into_iter()
        .map(|r| LocalBranch {
            probability: r.probability,
            message: BitString::from_index(r.index, t),
            post: r.post_state,
        })
        .collect())
}

/// The exact protocol for instances on `n` elements: classical
/// simultaneous messages backed by shared EPR pairs. Output labels are
/// the `Display` form of the decoded triple. Costs: one EPR pair per
/// index bit, three index widths from Alice, one from Bob, no qubits
/// on the wire.
pub fn mhm_entangled_protocol(n: usize) -> Result<GenericProtocol<MhmInstance>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "the protocol needs an even element count of at least 2, got {n}"
        )));
    }
    let t = index_bits(n.next_power_of_two());
    let shared = epr_state(t)?;
    let alice: LocalMeasurement<MhmInstance> = Arc::new(alice_branches);
    let bob: LocalMeasurement<MhmInstance> = Arc::new(bob_branches);
    let referee: FallibleReferee = Arc::new(move |ma: &BitString, mb: &BitString| {
        let (k, rest) = ma.split_at(t);
        let (l, b1) = rest.split_at(t);
        let triple = referee_decode(&k, &l, &b1, mb)?;
        Ok(OutcomeDistribution::point_mass(triple.to_string()))
    });
    let domain: DomainCheck<MhmInstance> = Arc::new(move |instance: &MhmInstance| {
        if instance.n() == n {
            Ok(())
        } else {
            Err(Error::DomainMismatch(format!(
                "instance has {} elements, the protocol expects {n}",
                instance.n()
            )))
        }
    });
    GenericProtocol::new(
        ModelTag::new(Channel::Classical, Topology::Simultaneous, Resource::EprPairs),
        CostReport {
            alice_to_referee_bits: 3 * t,
            bob_to_referee_bits: t,
            shared_epr_pairs: t,
            ..CostReport::default()
        },
        0,
        ProtocolBody::EntangledClassicalSmp { shared, alice, bob, referee },
        domain,
    )
}

const TRANSCRIPT_DOMAIN: u64 = 0x3A;

/// Draws independent full transcripts of the protocol on `instance`.
/// Deterministic per seed; trial streams are independent.
pub fn sample_transcripts(
    instance: &MhmInstance,
    trials: usize,
    seed: u64,
) -> Result<Vec<MhmTranscript>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("sampled runs need at least one trial".into()));
    }
    let t = index_bits(instance.n().next_power_of_two());
    let shared = epr_state(t)?;
    let a_branches = alice_branches(instance, &shared)?;
    let mut transcripts = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = stream_rng(seed, TRANSCRIPT_DOMAIN, trial as u64);
        let a = sample_local_branch(&a_branches, &mut rng)?;
        let b_branches = bob_branches(instance, &a.post)?;
        let b = sample_local_branch(&b_branches, &mut rng)?;
        let (k, rest) = a.message.split_at(t);
        let (l, b1) = rest.split_at(t);
        transcripts.push(MhmTranscript { k, l, b1, b2: b.message.clone() });
    }
    Ok(transcripts)
}

/// One branch of Alice's edge projection on the phase-folded shared
/// state, with both parties' phase updates already applied and the
/// post state's global phase canonicalized.
#[derive(Debug, Clone)]
pub struct EdgeProjection {
    pub edge: (usize, usize),
    pub probability: f64,
    pub post: StateVector,
}

/// Alice's projection branches, one per edge of the padded matching.
/// Each post state restricts the shared state to the edge's span: an
/// equal superposition of the two doubled indices whose amplitudes
/// agree exactly when the joint string does across the edge.
pub fn alice_edge_projections(instance: &MhmInstance) -> Result<Vec<EdgeProjection>> {
    let padded = pad_instance(instance)?;
    let t = index_bits(padded.n());
    let state = epr_state(t)?
        .apply_phase_flags("A", padded.alice_bits())?
        .apply_phase_flags("B", padded.bob_bits())?;
    let family = edge_family("A", padded.matching())?;
    let (_, outcomes) = measure_projective(&state, &family)?;
    Ok(outcomes
        .into_iter()
        .map(|o| EdgeProjection {
            edge: padded.matching().edges()[o.index],
            probability: o.probability,
            post: o.post_state,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::edge_disjoint_matchings;
    use crate::quantum::Register;
    use crate::tolerance::PROBABILITY_TOL;
    use num_complex::Complex64;

    fn instance(n: usize, alice: &str, bob: &str, matching: usize) -> MhmInstance {
        let m = edge_disjoint_matchings(n).unwrap().swap_remove(matching);
        MhmInstance::new(BitString::parse(alice).unwrap(), BitString::parse(bob).unwrap(), m)
            .unwrap()
    }

    #[test]
    fn decode_matches_hand_worked_cases() {
        let parse = |s: &str| BitString::parse(s).unwrap();
        let t = referee_decode(&parse("00"), &parse("01"), &parse("10"), &parse("11")).unwrap();
        assert_eq!((t.i(), t.j(), t.b()), (0, 1, true));
        let t = referee_decode(&parse("00"), &parse("01"), &parse("11"), &parse("11")).unwrap();
        assert_eq!((t.i(), t.j(), t.b()), (0, 1, false));
        // Equal readouts force the bit to zero whatever the edge is.
        let t = referee_decode(&parse("10"), &parse("01"), &parse("01"), &parse("01")).unwrap();
        assert_eq!((t.i(), t.j(), t.b()), (1, 2, false));
        // Endpoint order does not matter.
        let t = referee_decode(&parse("01"), &parse("00"), &parse("10"), &parse("11")).unwrap();
        assert_eq!((t.i(), t.j()), (0, 1));
    }

    #[test]
    fn decode_rejects_bad_shapes() {
        let parse = |s: &str| BitString::parse(s).unwrap();
        assert!(matches!(
            referee_decode(&parse("00"), &parse("011"), &parse("10"), &parse("11")),
            Err(Error::LayoutMismatch(_))
        ));
        assert!(matches!(
            referee_decode(&parse("01"), &parse("01"), &parse("10"), &parse("11")),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn protocol_rejects_odd_or_tiny_sizes() {
        assert!(mhm_entangled_protocol(3).is_err());
        assert!(mhm_entangled_protocol(0).is_err());
        let p = mhm_entangled_protocol(4).unwrap();
        let other = instance(8, "10110100", "01101001", 0);
        assert!(matches!(p.run_exact(&other), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn cost_report_matches_bookkeeping() {
        let p = mhm_entangled_protocol(4).unwrap();
        let cost = p.cost();
        assert_eq!(cost.shared_epr_pairs, 2);
        assert_eq!(cost.alice_to_referee_bits, 6);
        assert_eq!(cost.bob_to_referee_bits, 2);
        assert_eq!(cost.alice_to_referee_qubits, 0);
        assert_eq!(cost.bob_to_referee_qubits, 0);
    }

    #[test]
    fn four_elements_split_mass_between_the_two_valid_triples() {
        let inst = instance(4, "1011", "0110", 0);
        let p = mhm_entangled_protocol(4).unwrap();
        let (dist, _) = p.run_exact(&inst).unwrap();
        let valid = inst.valid_outputs();
        assert_eq!(valid.len(), 2);
        assert_eq!(dist.len(), 2);
        for triple in &valid {
            assert!((dist.probability(&triple.to_string()) - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn eight_elements_put_a_quarter_on_each_valid_triple() {
        let inst = instance(8, "10110100", "01101001", 2);
        let p = mhm_entangled_protocol(8).unwrap();
        let (dist, _) = p.run_exact(&inst).unwrap();
        let valid = inst.valid_outputs();
        assert_eq!(valid.len(), 4);
        for triple in &valid {
            assert!((dist.probability(&triple.to_string()) - 0.25).abs() < 1e-9);
        }
        // Flipping the answer bit of a valid triple gives an invalid one.
        for triple in &valid {
            let flipped = MhmTriple::new(triple.i(), triple.j(), !triple.b()).unwrap();
            assert!(dist.probability(&flipped.to_string()) < 1e-12);
        }
    }

    #[test]
    fn zero_error_and_uniform_law_across_sizes() {
        let mut rng = stream_rng(7, 0x11, 0);
        for n in [2usize, 4, 8, 16] {
            let p = mhm_entangled_protocol(n).unwrap();
            for m in edge_disjoint_matchings(n).unwrap() {
                for _ in 0..100 {
                    let inst = MhmInstance::new(
                        BitString::random(n, &mut rng),
                        BitString::random(n, &mut rng),
                        m.clone(),
                    )
                    .unwrap();
                    let (dist, _) = p.run_exact(&inst).unwrap();
                    let valid = inst.valid_outputs();
                    assert!(
                        dist.zero_error(|label| valid.iter().any(|t| t.to_string() == label), 1e-12),
                        "invalid mass at n={n}"
                    );
                    for triple in &valid {
                        let want = 2.0 / n as f64;
                        assert!(
                            (dist.probability(&triple.to_string()) - want).abs() < 1e-9,
                            "triple {triple} off the uniform law at n={n}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn padding_preserves_exactness() {
        let inst = instance(6, "101101", "011010", 1);
        let padded = pad_instance(&inst).unwrap();
        assert_eq!(padded.n(), 8);
        assert_eq!(padded.matching().edges().len(), 4);
        assert!(padded.matching().edges().contains(&(6, 7)));

        let p = mhm_entangled_protocol(6).unwrap();
        assert_eq!(p.cost().shared_epr_pairs, 3);
        assert_eq!(p.cost().alice_to_referee_bits, 9);
        let (dist, _) = p.run_exact(&inst).unwrap();
        let valid = padded.valid_outputs();
        assert!(dist.zero_error(|label| valid.iter().any(|t| t.to_string() == label), 1e-12));
        // Uniform over the padded matching, dummy edge included.
        for triple in &valid {
            assert!((dist.probability(&triple.to_string()) - 0.25).abs() < 1e-9);
        }
        assert!(dist.probability("(6,7,0)") > 0.25 - 1e-9);
    }

    #[test]
    fn sampled_transcripts_satisfy_the_parity_identity() {
        let inst = instance(8, "11010010", "10011100", 3);
        let transcripts = sample_transcripts(&inst, 10_000, 42).unwrap();
        assert_eq!(transcripts.len(), 10_000);
        for tr in &transcripts {
            assert!(tr.identity_holds(&inst).unwrap());
            assert!(inst.is_valid_output(&tr.decode().unwrap()));
        }
    }

    #[test]
    fn edge_projections_are_uniform_two_term_superpositions() {
        let inst = instance(4, "1000", "0010", 0);
        // Joint string 1010: edges (0,3) and (1,2) both straddle one
        // set bit, so both post states carry a sign.
        let projections = alice_edge_projections(&inst).unwrap();
        assert_eq!(projections.len(), 2);
        let regs = vec![Register::new("A", 2), Register::new("B", 2)];
        let a = inst.joint_string();
        for pr in &projections {
            assert!((pr.probability - 0.5).abs() < 1e-9);
            let (k, l) = pr.edge;
            let sign = if a.get(k) ^ a.get(l) { -1.0 } else { 1.0 };
            let scale = Complex64::new(1.0 / 2.0f64.sqrt(), 0.0);
            let mut amps = vec![Complex64::new(0.0, 0.0); 16];
            amps[k * 4 + k] = scale;
            amps[l * 4 + l] = scale * sign;
            let expected =
                StateVector::new(regs.clone(), amps).unwrap().canonicalize_global_phase();
            assert!((pr.post.fidelity(&expected).unwrap() - 1.0).abs() < 1e-9);
            for (got, want) in pr.post.amplitudes().iter().zip(expected.amplitudes()) {
                assert!((got - want).norm() < 1e-9);
            }
        }
        let signs: Vec<bool> = projections
            .iter()
            .map(|pr| a.get(pr.edge.0) ^ a.get(pr.edge.1))
            .collect();
        assert!(signs.iter().all(|&s| s), "chosen instance should flip both edges");
    }

    #[test]
    fn exact_and_sampled_runs_agree() {
        let inst = instance(4, "1011", "0110", 1);
        let p = mhm_entangled_protocol(4).unwrap();
        let (exact, _) = p.run_exact(&inst).unwrap();
        let sampled = p.run_sampled(&inst, 10_000, 9).unwrap();
        assert!(exact.tv_distance(&sampled) < 0.03);
        assert!(sampled.validate(PROBABILITY_TOL).is_ok());
    }
}
