//! Exhaustive search over deterministic simultaneous-message
//! protocols on tiny domains.
//!
//! Every assignment of messages to inputs is enumerated for both
//! parties; for each pair of message functions the referee answers
//! each message pair with the output of maximum success mass. Masses
//! are exact integers, so results are independent of iteration order
//! and the parallel split.

use std::sync::Arc;

use rayon::prelude::*;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::problems::subm_dims;

/// Guard on the search-space size: 2^this many candidate pairs.
pub const ENUMERATION_GUARD_LOG2: u32 = 24;

/// A problem over index domains, judged by a validity predicate on
/// (x, y, output index). Outputs are sorted so "lexicographically
/// smallest" is well defined for tie-breaking.
pub struct FiniteProblem {
    x_size: usize,
    y_size: usize,
    outputs: Vec<String>,
    valid: Arc<dyn Fn(usize, usize, usize) -> bool + Send + Sync>,
}

impl FiniteProblem {
    pub fn new(
        x_size: usize,
        y_size: usize,
        mut outputs: Vec<String>,
        valid: Arc<dyn Fn(usize, usize, usize) -> bool + Send + Sync>,
    ) -> Result<Self> {
        if x_size == 0 || y_size == 0 || outputs.is_empty() {
            return Err(Error::InvalidArgument(
                "finite problems need nonempty domains and outputs".into(),
            ));
        }
        let before = outputs.len();
        outputs.sort_unstable();
        outputs.dedup();
        if outputs.len() != before {
            return Err(Error::InvalidArgument("duplicate output labels".into()));
        }
        Ok(FiniteProblem { x_size, y_size, outputs, valid })
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn is_valid(&self, x: usize, y: usize, output: usize) -> bool {
        (self.valid)(x, y, output)
    }
}

/// Winner of the exhaustive search: exact success mass plus the
/// witnessing tables. `referee_table[ma][mb]` is an output index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicSearch {
    pub success_mass: u64,
    pub total_mass: u64,
    pub alice_table: Vec<usize>,
    pub bob_table: Vec<usize>,
    pub referee_table: Vec<Vec<usize>>,
}

impl DeterministicSearch {
    pub fn success_probability(&self) -> f64 {
        self.success_mass as f64 / self.total_mass as f64
    }
}

/// Finds the best deterministic simultaneous protocol where Alice may
/// send `alice_bits` and Bob `bob_bits`. `weights[x * y_size + y]` is
/// the (integer) mass of input pair (x, y); success mass is the total
/// weight of pairs the referee answers validly, maximized exactly.
///
/// Ties break toward the smallest Alice table index, then the smallest
/// Bob table index, then the lexicographically smallest output, so the
/// witness is unique and reproducible.
pub fn best_deterministic_smp(
    problem: &FiniteProblem,
    weights: &[u64],
    alice_bits: u32,
    bob_bits: u32,
) -> Result<DeterministicSearch> {
    if weights.len() != problem.x_size * problem.y_size {
        return Err(Error::InvalidArgument(format!(
            "{} weights for a {}x{} domain",
            weights.len(),
            problem.x_size,
            problem.y_size
        )));
    }
    let total_mass: u64 = weights.iter().sum();
    if total_mass == 0 {
        return Err(Error::InvalidArgument("all input weights are zero".into()));
    }
    let log2_size =
        alice_bits as u64 * problem.x_size as u64 + bob_bits as u64 * problem.y_size as u64;
    if log2_size > ENUMERATION_GUARD_LOG2 as u64 {
        return Err(Error::EnumerationTooLarge {
            log2_size,
            guard_log2: ENUMERATION_GUARD_LOG2,
        });
    }
    let ma_count = 1usize << alice_bits;
    let mb_count = 1usize << bob_bits;
    let fa_total = (ma_count as u64).pow(problem.x_size as u32);
    let fb_total = (mb_count as u64).pow(problem.y_size as u32);
    let out_count = problem.outputs().len();

    // mass[(x * y_size + y) * out_count + o]
    let mass: Vec<u64> = (0..problem.x_size)
        .flat_map(|x| {
            (0..problem.y_size).flat_map(move |y| {
                (0..out_count).map(move |o| (x, y, o))
            })
        })
        .map(|(x, y, o)| {
            if problem.is_valid(x, y, o) {
                weights[x * problem.y_size + y]
            } else {
                0
            }
        })
        .collect();

    let best = (0..fa_total)
        .into_par_iter()
        .map(|fa_idx| {
            let fa = decode_table(fa_idx, ma_count, problem.x_size);
            let mut best_here: Option<(u64, u64)> = None;
            let mut bucket = vec![0u64; ma_count * mb_count * out_count];
            for fb_idx in 0..fb_total {
                let fb = decode_table(fb_idx, mb_count, problem.y_size);
                bucket.iter_mut().for_each(|b| *b = 0);
                for (x, &ma) in fa.iter().enumerate() {
                    for (y, &mb) in fb.iter().enumerate() {
                        let src = (x * problem.y_size + y) * out_count;
                        let dst = (ma * mb_count + mb) * out_count;
                        for o in 0..out_count {
                            bucket[dst + o] += mass[src + o];
                        }
                    }
                }
                let value: u64 = bucket
                    .chunks_exact(out_count)
                    .map(|options| options.iter().copied().max().unwrap_or(0))
                    .sum();
                // Strict improvement keeps the smallest fb index.
                if best_here.is_none_or(|(v, _)| value > v) {
                    best_here = Some((value, fb_idx));
                }
            }
            let (value, fb_idx) = best_here.expect("fb_total >= 1");
            (value, fa_idx, fb_idx)
        })
        .reduce(
            || (0u64, u64::MAX, u64::MAX),
            |a, b| {
                // Highest mass wins; ties prefer the smaller table pair.
                if (b.0, std::cmp::Reverse((b.1, b.2))) > (a.0, std::cmp::Reverse((a.1, a.2))) {
                    b
                } else {
                    a
                }
            },
        );

    let (success_mass, fa_idx, fb_idx) = best;
    let alice_table = decode_table(fa_idx, ma_count, problem.x_size);
    let bob_table = decode_table(fb_idx, mb_count, problem.y_size);

    // Rebuild the winning referee with the same greedy choice.
    let mut bucket = vec![0u64; ma_count * mb_count * out_count];
    for (x, &ma) in alice_table.iter().enumerate() {
        for (y, &mb) in bob_table.iter().enumerate() {
            let src = (x * problem.y_size + y) * out_count;
            let dst = (ma * mb_count + mb) * out_count;
            for o in 0..out_count {
                bucket[dst + o] += mass[src + o];
            }
        }
    }
    let mut referee_table = vec![vec![0usize; mb_count]; ma_count];
    let mut recomputed = 0u64;
    for ma in 0..ma_count {
        for mb in 0..mb_count {
            let options = &bucket[(ma * mb_count + mb) * out_count..][..out_count];
            let (o, v) = options
                .iter()
                .enumerate()
                .max_by_key(|&(o, &v)| (v, std::cmp::Reverse(o)))
                .expect("outputs are nonempty");
            referee_table[ma][mb] = o;
            recomputed += v;
        }
    }
    debug_assert_eq!(recomputed, success_mass);

    Ok(DeterministicSearch {
        success_mass,
        total_mass,
        alice_table,
        bob_table,
        referee_table,
    })
}

// Digit x of the table index, base `messages`: the message sent on
// input x.
fn decode_table(mut idx: u64, messages: usize, inputs: usize) -> Vec<usize> {
    let mut table = Vec::with_capacity(inputs);
    for _ in 0..inputs {
        table.push((idx % messages as u64) as usize);
        idx /= messages as u64;
    }
    table
}

/// The membership problem as a finite domain for the enumerator:
/// Alice's inputs are all strings of the query length, Bob's are all
/// ordered tuples of distinct strings, every pair carrying weight 1
/// (the uniform distribution). Outputs are "0" and "1".
pub fn subm_finite_problem(m_param: u64) -> Result<(FiniteProblem, Vec<u64>)> {
    let y_domain = subm_y_domain(m_param)?;
    let dims = subm_dims(m_param)?;
    let x_size = dims.universe;
    let y_size = y_domain.len();
    let membership: Vec<Vec<bool>> = (0..x_size)
        .map(|x| {
            let x_bits = BitString::from_index(x, dims.string_len);
            y_domain.iter().map(|tuple| tuple.contains(&x_bits)).collect()
        })
        .collect();
    let valid = Arc::new(move |x: usize, y: usize, output: usize| {
        // outputs sorted: index 0 is "0", index 1 is "1"
        (output == 1) == membership[x][y]
    });
    let problem = FiniteProblem::new(
        x_size,
        y_size,
        vec!["0".to_string(), "1".to_string()],
        valid,
    )?;
    let weights = vec![1u64; x_size * y_size];
    Ok((problem, weights))
}

/// All ordered tuples of distinct strings a Bob input can take, in
/// lexicographic order of index tuples.
pub fn subm_y_domain(m_param: u64) -> Result<Vec<Vec<BitString>>> {
    let dims = subm_dims(m_param)?;
    let mut tuples = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(dims.list_len);
    fill_tuples(dims.universe, dims.list_len, dims.string_len, &mut current, &mut tuples);
    Ok(tuples)
}

fn fill_tuples(
    universe: usize,
    remaining: usize,
    width: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<BitString>>,
) {
    if remaining == 0 {
        out.push(current.iter().map(|&v| BitString::from_index(v, width)).collect());
        return;
    }
    for v in 0..universe {
        if current.contains(&v) {
            continue;
        }
        current.push(v);
        fill_tuples(universe, remaining - 1, width, current, out);
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // x, y single bits, equality judged by the referee.
    fn equality_problem() -> (FiniteProblem, Vec<u64>) {
        let valid = Arc::new(|x: usize, y: usize, o: usize| (o == 1) == (x == y));
        let p = FiniteProblem::new(2, 2, vec!["0".into(), "1".into()], valid).unwrap();
        (p, vec![1; 4])
    }

    #[test]
    fn one_bit_each_solves_equality() {
        let (p, w) = equality_problem();
        let best = best_deterministic_smp(&p, &w, 1, 1).unwrap();
        assert_eq!(best.success_mass, 4);
        assert_eq!(best.total_mass, 4);
        assert!((best.success_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_bits_leaves_the_prior() {
        let (p, w) = equality_problem();
        let best = best_deterministic_smp(&p, &w, 0, 0).unwrap();
        // A constant answer is right on half the uniform mass.
        assert_eq!(best.success_mass, 2);
        assert_eq!(best.alice_table, vec![0, 0]);
        assert_eq!(best.referee_table.len(), 1);
    }

    #[test]
    fn more_bits_never_hurt() {
        let (p, w) = equality_problem();
        let mut last = 0;
        for (ca, cb) in [(0, 0), (0, 1), (1, 1), (2, 1)] {
            let best = best_deterministic_smp(&p, &w, ca, cb).unwrap();
            assert!(best.success_mass >= last, "regressed at ({ca}, {cb})");
            last = best.success_mass;
        }
    }

    #[test]
    fn weights_bias_the_referee() {
        // Only the (0, 0) cell matters; zero communication suffices.
        let valid = Arc::new(|x: usize, y: usize, o: usize| (o == 1) == (x == 0 && y == 0));
        let p = FiniteProblem::new(2, 2, vec!["0".into(), "1".into()], valid).unwrap();
        let w = vec![10, 0, 0, 0];
        let best = best_deterministic_smp(&p, &w, 0, 0).unwrap();
        assert_eq!(best.success_mass, 10);
        assert_eq!(best.referee_table[0][0], 1);
    }

    #[test]
    fn guard_rejects_oversized_searches() {
        let (p, w) = equality_problem();
        assert!(matches!(
            best_deterministic_smp(&p, &w, 13, 0),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn weight_vector_must_fit_the_domain() {
        let (p, _) = equality_problem();
        assert!(best_deterministic_smp(&p, &[1, 1], 1, 1).is_err());
        assert!(best_deterministic_smp(&p, &[0, 0, 0, 0], 1, 1).is_err());
    }

    #[test]
    fn membership_domain_shapes() {
        let (p, w) = subm_finite_problem(16).unwrap();
        assert_eq!(p.x_size(), 4);
        assert_eq!(p.y_size(), 12);
        assert_eq!(w.len(), 48);
        let y = subm_y_domain(16).unwrap();
        assert_eq!(y.len(), 12);
        assert!(y.iter().all(|t| t.len() == 2 && t[0] != t[1]));

        let (p4, _) = subm_finite_problem(4).unwrap();
        assert_eq!(p4.x_size(), 2);
        assert_eq!(p4.y_size(), 2);
    }

    #[test]
    fn membership_validity_agrees_with_instances() {
        use crate::problems::SubmInstance;
        let (p, _) = subm_finite_problem(16).unwrap();
        let y_domain = subm_y_domain(16).unwrap();
        for x in 0..p.x_size() {
            for (y, tuple) in y_domain.iter().enumerate() {
                let inst = SubmInstance::new(
                    16,
                    BitString::from_index(x, 2),
                    tuple.clone(),
                )
                .unwrap();
                assert_eq!(p.is_valid(x, y, 1), inst.is_member());
                assert_eq!(p.is_valid(x, y, 0), !inst.is_member());
            }
        }
    }
}
