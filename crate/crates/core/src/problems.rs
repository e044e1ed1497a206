//! Problem definitions shared by the protocols in this crate.
//!
//! Three problems live here: the hidden-matching relation (two parties
//! hold n-bit strings, the referee must report the XOR of the joint
//! string along one edge of a perfect matching), a small set-membership
//! predicate, and a promise function built from many independent
//! membership coordinates. Each instance type validates its invariants
//! at construction, so downstream code never re-checks them.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// A perfect matching on `{0..n-1}`, stored canonically: each edge as
/// `(i, j)` with `i < j`, edges sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MatchingRepr", into = "MatchingRepr")]
pub struct Matching {
    n: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct MatchingRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl From<Matching> for MatchingRepr {
    fn from(m: Matching) -> Self {
        MatchingRepr { n: m.n, edges: m.edges }
    }
}

impl TryFrom<MatchingRepr> for Matching {
    type Error = Error;

    fn try_from(raw: MatchingRepr) -> Result<Self> {
        Matching::new(raw.n, raw.edges)
    }
}

impl Matching {
    /// Builds a perfect matching; edges may arrive in any order and
    /// orientation. Fails unless every element of `{0..n-1}` is covered
    /// exactly once.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidMatching(format!(
                "element count {n} is not a positive even number"
            )));
        }
        if edges.len() != n / 2 {
            return Err(Error::InvalidMatching(format!(
                "{} edges cannot perfectly match {n} elements",
                edges.len()
            )));
        }
        let mut covered = vec![false; n];
        let mut canonical = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidMatching(format!("self-loop at {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidMatching(format!(
                    "edge ({a}, {b}) leaves the element range 0..{n}"
                )));
            }
            for v in [a, b] {
                if covered[v] {
                    return Err(Error::InvalidMatching(format!("element {v} covered twice")));
                }
                covered[v] = true;
            }
            canonical.push((a.min(b), a.max(b)));
        }
        canonical.sort_unstable();
        Ok(Matching { n, edges: canonical })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges in canonical order, each `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (i, j)) in self.edges.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "({i},{j})")?;
        }
        write!(f, "}}")
    }
}

/// A family of n/2 pairwise edge-disjoint perfect matchings on
/// `{0..n-1}`, built by the round-robin tournament schedule: element
/// n-1 sits still while the rest rotate, and round r pairs n-1 with r
/// and folds the remaining elements symmetrically around r.
/// Deterministic for fixed n.
pub fn edge_disjoint_matchings(n: usize) -> Result<Vec<Matching>> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "matching family needs a positive even element count, got {n}"
        )));
    }
    let rounds = n / 2;
    let modulus = n - 1;
    let mut family = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let mut edges = vec![(modulus, r)];
        for k in 1..rounds {
            edges.push(((r + k) % modulus, (r + modulus - k) % modulus));
        }
        family.push(Matching::new(n, edges)?);
    }
    Ok(family)
}

/// One valid answer to a hidden-matching instance: the XOR of the
/// joint string at positions i and j, with `i < j` an edge of the
/// instance's matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "TripleRepr", into = "TripleRepr")]
pub struct MhmTriple {
    i: usize,
    j: usize,
    b: bool,
}

#[derive(Serialize, Deserialize)]
struct TripleRepr {
    i: usize,
    j: usize,
    b: u8,
}

impl From<MhmTriple> for TripleRepr {
    fn from(t: MhmTriple) -> Self {
        TripleRepr { i: t.i, j: t.j, b: u8::from(t.b) }
    }
}

impl TryFrom<TripleRepr> for MhmTriple {
    type Error = Error;

    fn try_from(raw: TripleRepr) -> Result<Self> {
        if raw.b > 1 {
            return Err(Error::InvalidArgument(format!("bit field holds {}", raw.b)));
        }
        MhmTriple::new(raw.i, raw.j, raw.b == 1)
    }
}

impl MhmTriple {
    pub fn new(i: usize, j: usize, b: bool) -> Result<Self> {
        if i >= j {
            return Err(Error::InvalidArgument(format!(
                "triple indices must satisfy i < j, got ({i}, {j})"
            )));
        }
        Ok(MhmTriple { i, j, b })
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn b(&self) -> bool {
        self.b
    }
}

impl fmt::Display for MhmTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.i, self.j, u8::from(self.b))
    }
}

/// Hidden-matching instance: Alice holds `aA` and the matching, Bob
/// holds `aB`, and answers are judged against `a = aA XOR aB`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MhmRepr", into = "MhmRepr")]
pub struct MhmInstance {
    alice_bits: BitString,
    bob_bits: BitString,
    matching: Matching,
}

#[derive(Serialize, Deserialize)]
struct MhmRepr {
    #[serde(rename = "aA")]
    a_alice: BitString,
    #[serde(rename = "aB")]
    a_bob: BitString,
    m: Matching,
}

impl From<MhmInstance> for MhmRepr {
    fn from(inst: MhmInstance) -> Self {
        MhmRepr { a_alice: inst.alice_bits, a_bob: inst.bob_bits, m: inst.matching }
    }
}

impl TryFrom<MhmRepr> for MhmInstance {
    type Error = Error;

    fn try_from(raw: MhmRepr) -> Result<Self> {
        MhmInstance::new(raw.a_alice, raw.a_bob, raw.m)
    }
}

impl MhmInstance {
    pub fn new(alice_bits: BitString, bob_bits: BitString, matching: Matching) -> Result<Self> {
        let n = matching.n();
        if alice_bits.len() != n || bob_bits.len() != n {
            return Err(Error::InvalidInstance(format!(
                "bit strings of lengths {} and {} do not fit a matching on {n} elements",
                alice_bits.len(),
                bob_bits.len()
            )));
        }
        Ok(MhmInstance { alice_bits, bob_bits, matching })
    }

    pub fn n(&self) -> usize {
        self.matching.n()
    }

    pub fn alice_bits(&self) -> &BitString {
        &self.alice_bits
    }

    pub fn bob_bits(&self) -> &BitString {
        &self.bob_bits
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    /// The joint string `a = aA XOR aB`.
    pub fn joint_string(&self) -> BitString {
        self.alice_bits.xor(&self.bob_bits)
    }

    /// Every triple the referee may output: one per matching edge, with
    /// the bit forced to the joint string's XOR on that edge.
    pub fn valid_outputs(&self) -> BTreeSet<MhmTriple> {
        let a = self.joint_string();
        self.matching
            .edges()
            .iter()
            .map(|&(i, j)| {
                MhmTriple::new(i, j, a.get(i) ^ a.get(j)).expect("matching edges are ordered")
            })
            .collect()
    }

    pub fn is_valid_output(&self, triple: &MhmTriple) -> bool {
        self.valid_outputs().contains(triple)
    }
}

/// Shape constraints shared by the membership problem and its
/// m-coordinate extension, all derived from the size parameter:
/// strings have `log log m` bits, so the universe holds `log m` of
/// them, and a membership list covers exactly half the universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubmDims {
    pub m_param: u64,
    /// Universe size: log2 of m_param.
    pub universe: usize,
    /// Bits per string: log2(log2(m_param)).
    pub string_len: usize,
    /// Entries in a membership list: universe / 2.
    pub list_len: usize,
}

/// Validates the size parameter. Both log2(m) and log2(log2(m)) must
/// be integral, so m is 2^(2^k) for k >= 1: 4, 16, 256, 65536, ...
pub fn subm_dims(m_param: u64) -> Result<SubmDims> {
    if !m_param.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("size parameter {m_param} is not a power of two")));
    }
    let universe = m_param.trailing_zeros() as usize;
    if universe < 2 || !universe.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "size parameter {m_param} does not make log log integral (log2 = {universe})"
        )));
    }
    Ok(SubmDims {
        m_param,
        universe,
        string_len: universe.trailing_zeros() as usize,
        list_len: universe / 2,
    })
}

/// Membership instance: does Alice's string `x` appear in Bob's list
/// `y` of distinct strings? The list covers exactly half the universe
/// of possible strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SubmRepr", into = "SubmRepr")]
pub struct SubmInstance {
    m_param: u64,
    x: BitString,
    y: Vec<BitString>,
}

#[derive(Serialize, Deserialize)]
struct SubmRepr {
    m_param: u64,
    x: BitString,
    y: Vec<BitString>,
}

impl From<SubmInstance> for SubmRepr {
    fn from(inst: SubmInstance) -> Self {
        SubmRepr { m_param: inst.m_param, x: inst.x, y: inst.y }
    }
}

impl TryFrom<SubmRepr> for SubmInstance {
    type Error = Error;

    fn try_from(raw: SubmRepr) -> Result<Self> {
        SubmInstance::new(raw.m_param, raw.x, raw.y)
    }
}

fn validate_membership_pair(dims: &SubmDims, x: &BitString, y: &[BitString]) -> Result<()> {
    if x.len() != dims.string_len {
        return Err(Error::InvalidInstance(format!(
            "query string has {} bits, expected {}",
            x.len(),
            dims.string_len
        )));
    }
    if y.len() != dims.list_len {
        return Err(Error::InvalidInstance(format!(
            "membership list has {} entries, expected {}",
            y.len(),
            dims.list_len
        )));
    }
    let mut seen = BTreeSet::new();
    for entry in y {
        if entry.len() != dims.string_len {
            return Err(Error::InvalidInstance(format!(
                "list entry {entry} has {} bits, expected {}",
                entry.len(),
                dims.string_len
            )));
        }
        if !seen.insert(entry.to_index()) {
            return Err(Error::InvalidInstance(format!("duplicate list entry {entry}")));
        }
    }
    Ok(())
}

impl SubmInstance {
    pub fn new(m_param: u64, x: BitString, y: Vec<BitString>) -> Result<Self> {
        let dims = subm_dims(m_param)?;
        validate_membership_pair(&dims, &x, &y)?;
        Ok(SubmInstance { m_param, x, y })
    }

    pub fn m_param(&self) -> u64 {
        self.m_param
    }

    pub fn x(&self) -> &BitString {
        &self.x
    }

    pub fn y(&self) -> &[BitString] {
        &self.y
    }

    /// 1 iff x appears among the list entries.
    pub fn is_member(&self) -> bool {
        self.y.contains(&self.x)
    }
}

/// One coordinate of the m-coordinate promise function: a query string
/// and a membership list of the shared shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FCoordinate {
    pub a: BitString,
    pub b: Vec<BitString>,
}

impl FCoordinate {
    pub fn satisfied(&self) -> bool {
        self.b.contains(&self.a)
    }
}

/// Value of the promise function: 1 when at least half the coordinates
/// are satisfied, 0 when none are, and a violation marker otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FOutcome {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "promise_violation")]
    PromiseViolation,
}

impl fmt::Display for FOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FOutcome::One => write!(f, "1"),
            FOutcome::Zero => write!(f, "0"),
            FOutcome::PromiseViolation => write!(f, "promise_violation"),
        }
    }
}

/// Instance of the promise function: m_param membership coordinates.
/// Alice holds the query strings, Bob holds the lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FRepr", into = "FRepr")]
pub struct FInstance {
    m_param: u64,
    pairs: Vec<FCoordinate>,
}

#[derive(Serialize, Deserialize)]
struct FRepr {
    m_param: u64,
    pairs: Vec<FCoordinate>,
}

impl From<FInstance> for FRepr {
    fn from(inst: FInstance) -> Self {
        FRepr { m_param: inst.m_param, pairs: inst.pairs }
    }
}

impl TryFrom<FRepr> for FInstance {
    type Error = Error;

    fn try_from(raw: FRepr) -> Result<Self> {
        FInstance::new(raw.m_param, raw.pairs)
    }
}

impl FInstance {
    pub fn new(m_param: u64, pairs: Vec<FCoordinate>) -> Result<Self> {
        let dims = subm_dims(m_param)?;
        if pairs.len() as u64 != m_param {
            return Err(Error::InvalidInstance(format!(
                "{} coordinates for size parameter {m_param}",
                pairs.len()
            )));
        }
        for coord in &pairs {
            validate_membership_pair(&dims, &coord.a, &coord.b)?;
        }
        Ok(FInstance { m_param, pairs })
    }

    pub fn m_param(&self) -> u64 {
        self.m_param
    }

    pub fn pairs(&self) -> &[FCoordinate] {
        &self.pairs
    }

    pub fn satisfied_count(&self) -> usize {
        self.pairs.iter().filter(|c| c.satisfied()).count()
    }

    pub fn eval(&self) -> FOutcome {
        let satisfied = self.satisfied_count();
        if satisfied as u64 * 2 >= self.m_param {
            FOutcome::One
        } else if satisfied == 0 {
            FOutcome::Zero
        } else {
            FOutcome::PromiseViolation
        }
    }
}

/// Named input distributions with their size parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum InputDistributionSpec {
    /// Uniform hidden-matching inputs: both strings uniform, the
    /// matching uniform over the edge-disjoint family.
    #[serde(rename = "uniform_D1")]
    UniformD1 { n: usize },
    /// Hard instances of the promise function: one query string and
    /// one list drawn uniformly, then copied to every coordinate.
    #[serde(rename = "f_hard_X")]
    FHardX { m_param: u64 },
    /// A single uniform membership instance.
    #[serde(rename = "uniform_subm")]
    UniformSubm { m_param: u64 },
}

/// An instance of any of the three problems, tagged by problem name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "problem", content = "instance")]
pub enum ProblemInstance {
    #[serde(rename = "mhm")]
    Mhm(MhmInstance),
    #[serde(rename = "subm")]
    Subm(SubmInstance),
    #[serde(rename = "f")]
    F(FInstance),
}

const DOMAIN_UNIFORM_D1: u64 = 0xD1;
const DOMAIN_F_HARD_X: u64 = 0xF0;
const DOMAIN_UNIFORM_SUBM: u64 = 0x5B;

/// Draws one instance from the named distribution. Deterministic for a
/// fixed (distribution, seed) pair.
pub fn sample_input(dist: &InputDistributionSpec, seed: u64) -> Result<ProblemInstance> {
    match *dist {
        InputDistributionSpec::UniformD1 { n } => {
            let mut rng = stream_rng(seed, DOMAIN_UNIFORM_D1, 0);
            Ok(ProblemInstance::Mhm(sample_uniform_d1(n, &mut rng)?))
        }
        InputDistributionSpec::FHardX { m_param } => {
            let mut rng = stream_rng(seed, DOMAIN_F_HARD_X, 0);
            Ok(ProblemInstance::F(sample_f_hard_x(m_param, &mut rng)?))
        }
        InputDistributionSpec::UniformSubm { m_param } => {
            let mut rng = stream_rng(seed, DOMAIN_UNIFORM_SUBM, 0);
            Ok(ProblemInstance::Subm(sample_uniform_subm(m_param, &mut rng)?))
        }
    }
}

/// Uniform hidden-matching input: both strings uniform over {0,1}^n,
/// matching uniform over edge_disjoint_matchings(n).
pub fn sample_uniform_d1<R: Rng>(n: usize, rng: &mut R) -> Result<MhmInstance> {
    let family = edge_disjoint_matchings(n)?;
    let alice_bits = BitString::random(n, rng);
    let bob_bits = BitString::random(n, rng);
    let matching = family[rng.gen_range(0..family.len())].clone();
    MhmInstance::new(alice_bits, bob_bits, matching)
}

fn sample_distinct_list<R: Rng>(dims: &SubmDims, rng: &mut R) -> Vec<BitString> {
    let mut seen = BTreeSet::new();
    let mut list = Vec::with_capacity(dims.list_len);
    while list.len() < dims.list_len {
        let candidate = BitString::random(dims.string_len, rng);
        if seen.insert(candidate.to_index()) {
            list.push(candidate);
        }
    }
    list
}

/// Uniform membership instance: query uniform, list a uniform ordered
/// tuple of distinct strings. The query lands in the list with
/// probability exactly 1/2, since the list covers half the universe.
pub fn sample_uniform_subm<R: Rng>(m_param: u64, rng: &mut R) -> Result<SubmInstance> {
    let dims = subm_dims(m_param)?;
    let x = BitString::random(dims.string_len, rng);
    let y = sample_distinct_list(&dims, rng);
    SubmInstance::new(m_param, x, y)
}

/// Hard promise-function instance: one uniform query string and one
/// uniform list, replicated across all coordinates. Either every
/// coordinate is satisfied or none is, so the promise always holds and
/// each case appears with probability exactly 1/2.
pub fn sample_f_hard_x<R: Rng>(m_param: u64, rng: &mut R) -> Result<FInstance> {
    let dims = subm_dims(m_param)?;
    let count = usize::try_from(m_param)
        .map_err(|_| Error::InvalidArgument(format!("size parameter {m_param} overflows usize")))?;
    let a = BitString::random(dims.string_len, rng);
    let b = sample_distinct_list(&dims, rng);
    let pairs = vec![FCoordinate { a, b }; count];
    FInstance::new(m_param, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        BitString::parse(s).unwrap()
    }

    #[test]
    fn valid_outputs_match_direct_evaluation() {
        let m01_23 = Matching::new(4, vec![(0, 1), (2, 3)]).unwrap();
        let inst = MhmInstance::new(bs("0110"), bs("0000"), m01_23.clone()).unwrap();
        let want: BTreeSet<_> = [
            MhmTriple::new(0, 1, true).unwrap(),
            MhmTriple::new(2, 3, true).unwrap(),
        ]
        .into();
        assert_eq!(inst.valid_outputs(), want);

        let inst = MhmInstance::new(bs("0110"), bs("0110"), m01_23).unwrap();
        let want: BTreeSet<_> = [
            MhmTriple::new(0, 1, false).unwrap(),
            MhmTriple::new(2, 3, false).unwrap(),
        ]
        .into();
        assert_eq!(inst.valid_outputs(), want);

        let m02_13 = Matching::new(4, vec![(0, 2), (1, 3)]).unwrap();
        let inst = MhmInstance::new(bs("0110"), bs("0000"), m02_13).unwrap();
        let want: BTreeSet<_> = [
            MhmTriple::new(0, 2, true).unwrap(),
            MhmTriple::new(1, 3, true).unwrap(),
        ]
        .into();
        assert_eq!(inst.valid_outputs(), want);
    }

    #[test]
    fn matching_rejects_imperfect_covers() {
        assert!(Matching::new(4, vec![(0, 1)]).is_err());
        assert!(Matching::new(4, vec![(0, 1), (1, 2)]).is_err());
        assert!(Matching::new(4, vec![(0, 1), (2, 2)]).is_err());
        assert!(Matching::new(4, vec![(0, 1), (2, 4)]).is_err());
        assert!(Matching::new(3, vec![(0, 1)]).is_err());
    }

    #[test]
    fn matching_canonicalizes_edge_order() {
        let a = Matching::new(4, vec![(3, 2), (1, 0)]).unwrap();
        let b = Matching::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edges(), &[(0, 1), (2, 3)]);
    }

    #[test]
    fn smallest_family_is_the_unique_matching() {
        let family = edge_disjoint_matchings(2).unwrap();
        assert_eq!(family.len(), 1);
        assert_eq!(family[0].edges(), &[(0, 1)]);
    }

    #[test]
    fn family_of_four_is_edge_disjoint() {
        let family = edge_disjoint_matchings(4).unwrap();
        assert_eq!(family.len(), 2);
        let e0: BTreeSet<_> = family[0].edges().iter().collect();
        let e1: BTreeSet<_> = family[1].edges().iter().collect();
        assert!(e0.is_disjoint(&e1));
    }

    #[test]
    fn family_edge_counts_scale_quadratically() {
        for n in [2usize, 4, 6, 8, 10, 12] {
            let family = edge_disjoint_matchings(n).unwrap();
            assert_eq!(family.len(), n / 2);
            let all_edges: BTreeSet<_> =
                family.iter().flat_map(|m| m.edges().iter().copied()).collect();
            assert_eq!(all_edges.len(), (n / 2) * (n / 2), "n = {n}");
        }
    }

    #[test]
    fn family_rejects_odd_or_zero_n() {
        assert!(edge_disjoint_matchings(0).is_err());
        assert!(edge_disjoint_matchings(5).is_err());
    }

    #[test]
    fn membership_follows_the_list() {
        let inst =
            SubmInstance::new(16, bs("01"), vec![bs("00"), bs("01")]).unwrap();
        assert!(inst.is_member());
        let inst =
            SubmInstance::new(16, bs("10"), vec![bs("00"), bs("01")]).unwrap();
        assert!(!inst.is_member());
    }

    #[test]
    fn duplicate_list_entries_are_rejected() {
        let err = SubmInstance::new(16, bs("01"), vec![bs("00"), bs("00")]);
        assert!(err.is_err());
    }

    #[test]
    fn size_parameter_needs_integral_double_log() {
        assert!(subm_dims(4).is_ok());
        assert!(subm_dims(16).is_ok());
        assert!(subm_dims(256).is_ok());
        assert!(subm_dims(8).is_err());
        assert!(subm_dims(64).is_err());
        assert!(subm_dims(15).is_err());
        assert!(subm_dims(2).is_err());
    }

    fn constant_f_instance(satisfied: usize) -> FInstance {
        // 16 coordinates, `satisfied` of them containing their query.
        let inside = FCoordinate { a: bs("01"), b: vec![bs("00"), bs("01")] };
        let outside = FCoordinate { a: bs("10"), b: vec![bs("00"), bs("01")] };
        let mut pairs = vec![inside; satisfied];
        pairs.resize(16, outside);
        FInstance::new(16, pairs).unwrap()
    }

    #[test]
    fn promise_function_cases() {
        assert_eq!(constant_f_instance(16).eval(), FOutcome::One);
        assert_eq!(constant_f_instance(8).eval(), FOutcome::One);
        assert_eq!(constant_f_instance(0).eval(), FOutcome::Zero);
        assert_eq!(constant_f_instance(1).eval(), FOutcome::PromiseViolation);
        assert_eq!(constant_f_instance(7).eval(), FOutcome::PromiseViolation);
    }

    #[test]
    fn hard_instances_respect_the_promise() {
        let mut rng = stream_rng(11, 0xF0, 0);
        let mut ones = 0usize;
        for _ in 0..1000 {
            let inst = sample_f_hard_x(16, &mut rng).unwrap();
            assert!(inst.pairs().iter().all(|c| c.a == inst.pairs()[0].a));
            assert!(inst.pairs().iter().all(|c| c.b == inst.pairs()[0].b));
            match inst.eval() {
                FOutcome::One => ones += 1,
                FOutcome::Zero => {}
                FOutcome::PromiseViolation => panic!("hard instance violates the promise"),
            }
        }
        // Membership probability is exactly 1/2; allow sampling noise.
        assert!((ones as f64 / 1000.0 - 0.5).abs() < 0.05, "ones = {ones}");
    }

    #[test]
    fn uniform_d1_hits_each_matching_evenly() {
        let family = edge_disjoint_matchings(4).unwrap();
        let mut rng = stream_rng(7, 0xD1, 0);
        let mut counts = [0usize; 2];
        for _ in 0..10_000 {
            let inst = sample_uniform_d1(4, &mut rng).unwrap();
            let idx = family.iter().position(|m| m == inst.matching()).expect("support");
            counts[idx] += 1;
        }
        for c in counts {
            assert!((c as f64 / 10_000.0 - 0.5).abs() <= 0.02, "counts = {counts:?}");
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let dist = InputDistributionSpec::UniformD1 { n: 6 };
        let a = sample_input(&dist, 99).unwrap();
        let b = sample_input(&dist, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_input(&dist, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn instances_roundtrip_through_json() {
        let inst = MhmInstance::new(
            bs("0110"),
            bs("0000"),
            Matching::new(4, vec![(0, 1), (2, 3)]).unwrap(),
        )
        .unwrap();
        let json = serde_json::to_string(&ProblemInstance::Mhm(inst.clone())).unwrap();
        assert!(json.contains("\"aA\":\"0110\""), "json = {json}");
        let back: ProblemInstance = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ProblemInstance::Mhm(inst));

        let subm = SubmInstance::new(16, bs("01"), vec![bs("00"), bs("01")]).unwrap();
        let json = serde_json::to_string(&subm).unwrap();
        let back: SubmInstance = serde_json::from_str(&json).unwrap();
        assert_eq!(back, subm);
    }

    #[test]
    fn malformed_json_is_rejected() {
        // Edges do not cover element 3.
        let bad = r#"{"aA":"0110","aB":"0000","m":{"n":4,"edges":[[0,1],[2,1]]}}"#;
        assert!(serde_json::from_str::<MhmInstance>(bad).is_err());
        // Duplicate list entry.
        let bad = r#"{"m_param":16,"x":"01","y":["00","00"]}"#;
        assert!(serde_json::from_str::<SubmInstance>(bad).is_err());
    }

    proptest! {
        #[test]
        fn triples_agree_with_integer_bit_arithmetic(
            half_n in 1usize..=6,
            seed in 0u64..1000,
        ) {
            let n = 2 * half_n;
            let mut rng = stream_rng(seed, 0xD1, 1);
            let inst = sample_uniform_d1(n, &mut rng).unwrap();
            let outputs = inst.valid_outputs();
            prop_assert_eq!(outputs.len(), n / 2);
            // Independent check through shift-and-mask arithmetic.
            let xa = inst.alice_bits().to_index() ^ inst.bob_bits().to_index();
            for t in &outputs {
                let bit_i = (xa >> (n - 1 - t.i())) & 1;
                let bit_j = (xa >> (n - 1 - t.j())) & 1;
                prop_assert_eq!(usize::from(t.b()), bit_i ^ bit_j);
                prop_assert!(inst.matching().edges().contains(&(t.i(), t.j())));
            }
        }
    }
}
