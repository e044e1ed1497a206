//! Uniform representation and execution of one-round protocols.
//!
//! A model is a channel (classical or quantum), a topology (one-way or
//! simultaneous) and a shared resource (none, public randomness, EPR
//! pairs): twelve combinations. A protocol couples a model tag and a
//! cost declaration with strategy closures. The exact executor sums
//! over all coin strings and measurement branches; the sampled
//! executor draws them with a seeded stream.

pub mod enumerate;
pub mod one_way;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::quantum::{OutcomeDistribution, StateVector};
use crate::rng::stream_rng;
use crate::tolerance::{PROBABILITY_TOL, ZERO_BRANCH_TOL};

pub use enumerate::{best_deterministic_smp, DeterministicSearch, FiniteProblem};
pub use one_way::{default_coin_cap, OneWayClassicalProtocol, TableProtocol};

/// Hard ceiling on coin counts the exact executor will enumerate.
pub const COIN_ENUMERATION_LIMIT: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Classical,
    Quantum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    OneWay,
    Simultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    None,
    PublicRandomness,
    EprPairs,
}

/// One of the twelve one-round communication models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelTag {
    pub channel: Channel,
    pub topology: Topology,
    pub resource: Resource,
}

impl ModelTag {
    pub fn new(channel: Channel, topology: Topology, resource: Resource) -> Self {
        ModelTag { channel, topology, resource }
    }

    /// All twelve models, in a fixed order.
    pub fn all() -> Vec<ModelTag> {
        let mut tags = Vec::with_capacity(12);
        for channel in [Channel::Classical, Channel::Quantum] {
            for topology in [Topology::OneWay, Topology::Simultaneous] {
                for resource in
                    [Resource::None, Resource::PublicRandomness, Resource::EprPairs]
                {
                    tags.push(ModelTag { channel, topology, resource });
                }
            }
        }
        tags
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let channel = match self.channel {
            Channel::Classical => "classical",
            Channel::Quantum => "quantum",
        };
        let topology = match self.topology {
            Topology::OneWay => "one-way",
            Topology::Simultaneous => "simultaneous",
        };
        let resource = match self.resource {
            Resource::None => "",
            Resource::PublicRandomness => " with public randomness",
            Resource::EprPairs => " with shared EPR pairs",
        };
        write!(f, "{channel} {topology}{resource}")
    }
}

/// Communication spent by one protocol run, per link and resource.
/// Message lengths are input-independent, so one report describes the
/// whole protocol.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub alice_to_referee_bits: usize,
    pub bob_to_referee_bits: usize,
    pub alice_to_bob_bits: usize,
    pub alice_to_referee_qubits: usize,
    pub bob_to_referee_qubits: usize,
    pub alice_to_bob_qubits: usize,
    pub shared_random_bits: usize,
    pub shared_epr_pairs: usize,
}

/// One outcome of a party's local measurement: the classical message
/// it induces and the collapsed joint state handed to the next party.
#[derive(Debug, Clone)]
pub struct LocalBranch {
    pub probability: f64,
    pub message: BitString,
    pub post: StateVector,
}

pub type ClassicalStrategy<X> = Arc<dyn Fn(&X, &BitString) -> BitString + Send + Sync>;
pub type SmpReferee = Arc<dyn Fn(&BitString, &BitString) -> OutcomeDistribution + Send + Sync>;
pub type OneWayReceiver<X> =
    Arc<dyn Fn(&X, &BitString, &BitString) -> OutcomeDistribution + Send + Sync>;
pub type LocalMeasurement<X> =
    Arc<dyn Fn(&X, &StateVector) -> Result<Vec<LocalBranch>> + Send + Sync>;
pub type FallibleReferee =
    Arc<dyn Fn(&BitString, &BitString) -> Result<OutcomeDistribution> + Send + Sync>;
pub type StatePreparation<X> = Arc<dyn Fn(&X) -> Result<StateVector> + Send + Sync>;
pub type StateReferee =
    Arc<dyn Fn(&StateVector, &StateVector) -> Result<OutcomeDistribution> + Send + Sync>;
pub type QuantumOneWayStrategy<X> =
    Arc<dyn Fn(&X, &BitString) -> Result<(StateVector, BitString)> + Send + Sync>;
pub type QuantumOneWayReceiver<X> = Arc<
    dyn Fn(&X, &StateVector, &BitString, &BitString) -> Result<OutcomeDistribution> + Send + Sync,
>;
pub type DomainCheck<X> = Arc<dyn Fn(&X) -> Result<()> + Send + Sync>;

/// Executable description of a protocol, by channel and topology.
/// Strategy closures receive the full instance and must read only
/// their own party's share.
pub enum ProtocolBody<X> {
    /// Both parties send classical messages to the referee. Coins, if
    /// any, are visible to everyone.
    ClassicalSmp {
        alice: ClassicalStrategy<X>,
        bob: ClassicalStrategy<X>,
        referee: SmpReferee,
    },
    /// Alice sends one classical message to Bob, who answers.
    ClassicalOneWay {
        alice: ClassicalStrategy<X>,
        receiver: OneWayReceiver<X>,
    },
    /// Parties share `shared`, measure their halves locally and send
    /// classical messages. Alice's measurement runs first (local
    /// measurements commute, so the order is a bookkeeping choice);
    /// Bob's closure receives her collapsed post-state.
    EntangledClassicalSmp {
        shared: StateVector,
        alice: LocalMeasurement<X>,
        bob: LocalMeasurement<X>,
        referee: FallibleReferee,
    },
    /// Both parties send quantum states. The referee closure models
    /// the measurement of as many copies as the cost report declares.
    QuantumSmp {
        alice: StatePreparation<X>,
        bob: StatePreparation<X>,
        referee: StateReferee,
    },
    /// Alice sends a quantum state plus a classical tag to Bob.
    QuantumOneWay {
        alice: QuantumOneWayStrategy<X>,
        receiver: QuantumOneWayReceiver<X>,
    },
}

impl<X> Clone for ProtocolBody<X> {
    fn clone(&self) -> Self {
        match self {
            ProtocolBody::ClassicalSmp { alice, bob, referee } => ProtocolBody::ClassicalSmp {
                alice: alice.clone(),
                bob: bob.clone(),
                referee: referee.clone(),
            },
            ProtocolBody::ClassicalOneWay { alice, receiver } => ProtocolBody::ClassicalOneWay {
                alice: alice.clone(),
                receiver: receiver.clone(),
            },
            ProtocolBody::EntangledClassicalSmp { shared, alice, bob, referee } => {
                ProtocolBody::EntangledClassicalSmp {
                    shared: shared.clone(),
                    alice: alice.clone(),
                    bob: bob.clone(),
                    referee: referee.clone(),
                }
            }
            ProtocolBody::QuantumSmp { alice, bob, referee } => ProtocolBody::QuantumSmp {
                alice: alice.clone(),
                bob: bob.clone(),
                referee: referee.clone(),
            },
            ProtocolBody::QuantumOneWay { alice, receiver } => ProtocolBody::QuantumOneWay {
                alice: alice.clone(),
                receiver: receiver.clone(),
            },
        }
    }
}

/// A one-round protocol over instances of type `X`: model tag, cost
/// declaration, coin count and executable body. `coin_bits` counts the
/// uniform random bits the exact executor sums over; they are shared
/// exactly when the model's resource says so, and private to Alice in
/// a one-way protocol that has published its randomness.
pub struct GenericProtocol<X> {
    model: ModelTag,
    cost: CostReport,
    coin_bits: usize,
    body: ProtocolBody<X>,
    domain: DomainCheck<X>,
}

impl<X> Clone for GenericProtocol<X> {
    fn clone(&self) -> Self {
        GenericProtocol {
            model: self.model,
            cost: self.cost.clone(),
            coin_bits: self.coin_bits,
            body: self.body.clone(),
            domain: self.domain.clone(),
        }
    }
}

const SAMPLING_DOMAIN: u64 = 0xEC;

impl<X: 'static> GenericProtocol<X> {
    pub fn new(
        model: ModelTag,
        cost: CostReport,
        coin_bits: usize,
        body: ProtocolBody<X>,
        domain: DomainCheck<X>,
    ) -> Result<Self> {
        let (channel, topology) = match &body {
            ProtocolBody::ClassicalSmp { .. } => (Channel::Classical, Topology::Simultaneous),
            ProtocolBody::ClassicalOneWay { .. } => (Channel::Classical, Topology::OneWay),
            ProtocolBody::EntangledClassicalSmp { .. } => {
                (Channel::Classical, Topology::Simultaneous)
            }
            ProtocolBody::QuantumSmp { .. } => (Channel::Quantum, Topology::Simultaneous),
            ProtocolBody::QuantumOneWay { .. } => (Channel::Quantum, Topology::OneWay),
        };
        if model.channel != channel || model.topology != topology {
            return Err(Error::InvalidArgument(format!(
                "body shape does not fit the declared model `{model}`"
            )));
        }
        let entangled = matches!(&body, ProtocolBody::EntangledClassicalSmp { .. });
        if entangled != (model.resource == Resource::EprPairs) {
            return Err(Error::InvalidArgument(
                "EPR-pair models and entangled bodies must coincide".into(),
            ));
        }
        if entangled && coin_bits != 0 {
            return Err(Error::InvalidArgument(
                "entangled protocols here carry no coin strings".into(),
            ));
        }
        if model.resource == Resource::PublicRandomness {
            if cost.shared_random_bits != coin_bits {
                return Err(Error::InvalidArgument(format!(
                    "declared {} shared random bits but the executor enumerates {}",
                    cost.shared_random_bits, coin_bits
                )));
            }
        } else if cost.shared_random_bits != 0 {
            return Err(Error::InvalidArgument(
                "shared random bits declared without the public-randomness resource".into(),
            ));
        }
        // Private coins make sense only where one party holds them all.
        if coin_bits > 0
            && model.resource == Resource::None
            && topology == Topology::Simultaneous
        {
            return Err(Error::InvalidArgument(
                "simultaneous protocols cannot share coins without the resource".into(),
            ));
        }
        if coin_bits > COIN_ENUMERATION_LIMIT {
            return Err(Error::EnumerationTooLarge {
                log2_size: coin_bits as u64,
                guard_log2: COIN_ENUMERATION_LIMIT as u32,
            });
        }
        Ok(GenericProtocol { model, cost, coin_bits, body, domain })
    }

    pub fn model(&self) -> ModelTag {
        self.model
    }

    pub fn cost(&self) -> &CostReport {
        &self.cost
    }

    pub fn coin_bits(&self) -> usize {
        self.coin_bits
    }

    /// Exact output distribution: probability-weighted sum over every
    /// coin string and every measurement branch.
    pub fn run_exact(&self, input: &X) -> Result<(OutcomeDistribution, CostReport)> {
        (self.domain)(input)?;
        let mut acc: Vec<(String, f64)> = Vec::new();
        match &self.body {
            ProtocolBody::ClassicalSmp { alice, bob, referee } => {
                self.for_each_coin(|coins, weight| {
                    let ma = alice(input, coins);
                    let mb = bob(input, coins);
                    check_length("Alice's message", &ma, self.cost.alice_to_referee_bits)?;
                    check_length("Bob's message", &mb, self.cost.bob_to_referee_bits)?;
                    for (label, p) in referee(&ma, &mb).iter() {
                        acc.push((label.to_string(), weight * p));
                    }
                    Ok(())
                })?;
            }
            ProtocolBody::ClassicalOneWay { alice, receiver } => {
                self.for_each_coin(|coins, weight| {
                    let msg = alice(input, coins);
                    check_length("Alice's message", &msg, self.cost.alice_to_bob_bits)?;
                    for (label, p) in receiver(input, &msg, coins).iter() {
                        acc.push((label.to_string(), weight * p));
                    }
                    Ok(())
                })?;
            }
            ProtocolBody::EntangledClassicalSmp { shared, alice, bob, referee } => {
                for a_branch in alice(input, shared)? {
                    if a_branch.probability <= ZERO_BRANCH_TOL {
                        continue;
                    }
                    check_length(
                        "Alice's message",
                        &a_branch.message,
                        self.cost.alice_to_referee_bits,
                    )?;
                    for b_branch in bob(input, &a_branch.post)? {
                        if b_branch.probability <= ZERO_BRANCH_TOL {
                            continue;
                        }
                        check_length(
                            "Bob's message",
                            &b_branch.message,
                            self.cost.bob_to_referee_bits,
                        )?;
                        let weight = a_branch.probability * b_branch.probability;
                        for (label, p) in referee(&a_branch.message, &b_branch.message)?.iter() {
                            acc.push((label.to_string(), weight * p));
                        }
                    }
                }
            }
            ProtocolBody::QuantumSmp { alice, bob, referee } => {
                let sa = alice(input)?;
                let sb = bob(input)?;
                check_copies("Alice's state", &sa, self.cost.alice_to_referee_qubits)?;
                check_copies("Bob's state", &sb, self.cost.bob_to_referee_qubits)?;
                for (label, p) in referee(&sa, &sb)?.iter() {
                    acc.push((label.to_string(), p));
                }
            }
            ProtocolBody::QuantumOneWay { alice, receiver } => {
                self.for_each_coin(|coins, weight| {
                    let (state, tag) = alice(input, coins)?;
                    check_length("Alice's classical tag", &tag, self.cost.alice_to_bob_bits)?;
                    if state.total_qubits() != self.cost.alice_to_bob_qubits {
                        return Err(Error::LayoutMismatch(format!(
                            "Alice's state has {} qubits, declared {}",
                            state.total_qubits(),
                            self.cost.alice_to_bob_qubits
                        )));
                    }
                    for (label, p) in receiver(input, &state, &tag, coins)?.iter() {
                        acc.push((label.to_string(), weight * p));
                    }
                    Ok(())
                })?;
            }
        }
        let dist = OutcomeDistribution::from_weighted(acc);
        dist.validate(PROBABILITY_TOL)?;
        Ok((dist, self.cost.clone()))
    }

    /// Empirical output distribution over `trials` independent runs.
    /// Deterministic for a fixed seed.
    pub fn run_sampled(
        &self,
        input: &X,
        trials: usize,
        seed: u64,
    ) -> Result<OutcomeDistribution> {
        if trials == 0 {
            return Err(Error::InvalidArgument("sampled runs need at least one trial".into()));
        }
        (self.domain)(input)?;
        let mut labels = Vec::with_capacity(trials);
        // Input-independent work is hoisted out of the trial loop.
        let precomputed: Option<OutcomeDistribution> = match &self.body {
            ProtocolBody::QuantumSmp { alice, bob, referee } => {
                let sa = alice(input)?;
                let sb = bob(input)?;
                check_copies("Alice's state", &sa, self.cost.alice_to_referee_qubits)?;
                check_copies("Bob's state", &sb, self.cost.bob_to_referee_qubits)?;
                Some(referee(&sa, &sb)?)
            }
            _ => None,
        };
        let alice_branches: Option<Vec<LocalBranch>> = match &self.body {
            ProtocolBody::EntangledClassicalSmp { shared, alice, .. } => {
                Some(alice(input, shared)?)
            }
            _ => None,
        };
        for trial in 0..trials {
            let mut rng = stream_rng(seed, SAMPLING_DOMAIN, trial as u64);
            let coins = BitString::random(self.coin_bits, &mut rng);
            let label = match &self.body {
                ProtocolBody::ClassicalSmp { alice, bob, referee } => {
                    let ma = alice(input, &coins);
                    let mb = bob(input, &coins);
                    referee(&ma, &mb).sample(&mut rng).to_string()
                }
                ProtocolBody::ClassicalOneWay { alice, receiver } => {
                    let msg = alice(input, &coins);
                    receiver(input, &msg, &coins).sample(&mut rng).to_string()
                }
                ProtocolBody::EntangledClassicalSmp { bob, referee, .. } => {
                    let branches = alice_branches.as_ref().expect("precomputed above");
                    let a_branch = sample_local_branch(branches, &mut rng)?;
                    let b_branches = bob(input, &a_branch.post)?;
                    let b_branch = sample_local_branch(&b_branches, &mut rng)?;
                    referee(&a_branch.message, &b_branch.message)?
                        .sample(&mut rng)
                        .to_string()
                }
                ProtocolBody::QuantumSmp { .. } => {
                    precomputed.as_ref().expect("precomputed above").sample(&mut rng).to_string()
                }
                ProtocolBody::QuantumOneWay { alice, receiver } => {
                    let (state, tag) = alice(input, &coins)?;
                    receiver(input, &state, &tag, &coins)?.sample(&mut rng).to_string()
                }
            };
            labels.push(label);
        }
        Ok(OutcomeDistribution::from_samples(labels))
    }

    /// Rebuilds a one-way protocol so Alice samples the coins herself
    /// and prepends them to her message. Output distributions are
    /// unchanged on every input; the resource disappears from the
    /// model and its bits move onto the Alice-to-Bob link.
    pub fn publish_randomness(&self) -> Result<GenericProtocol<X>> {
        let r = self.coin_bits;
        match &self.body {
            ProtocolBody::ClassicalOneWay { alice, receiver } => {
                let model = ModelTag { resource: Resource::None, ..self.model };
                let mut cost = self.cost.clone();
                cost.shared_random_bits = 0;
                if r == 0 {
                    return GenericProtocol::new(
                        model,
                        cost,
                        0,
                        self.body.clone(),
                        self.domain.clone(),
                    );
                }
                cost.alice_to_bob_bits += r;
                let alice2: ClassicalStrategy<X> = {
                    let alice = alice.clone();
                    Arc::new(move |x: &X, coins: &BitString| coins.concat(&alice(x, coins)))
                };
                let receiver2: OneWayReceiver<X> = {
                    let receiver = receiver.clone();
                    Arc::new(move |x: &X, msg: &BitString, _unused: &BitString| {
                        let (coins, inner) = msg.split_at(r);
                        receiver(x, &inner, &coins)
                    })
                };
                GenericProtocol::new(
                    model,
                    cost,
                    r,
                    ProtocolBody::ClassicalOneWay { alice: alice2, receiver: receiver2 },
                    self.domain.clone(),
                )
            }
            ProtocolBody::QuantumOneWay { alice, receiver } => {
                let model = ModelTag { resource: Resource::None, ..self.model };
                let mut cost = self.cost.clone();
                cost.shared_random_bits = 0;
                if r == 0 {
                    return GenericProtocol::new(
                        model,
                        cost,
                        0,
                        self.body.clone(),
                        self.domain.clone(),
                    );
                }
                cost.alice_to_bob_bits += r;
                let alice2: QuantumOneWayStrategy<X> = {
                    let alice = alice.clone();
                    Arc::new(move |x: &X, coins: &BitString| {
                        let (state, tag) = alice(x, coins)?;
                        Ok((state, coins.concat(&tag)))
                    })
                };
                let receiver2: QuantumOneWayReceiver<X> = {
                    let receiver = receiver.clone();
                    Arc::new(
                        move |x: &X,
                              state: &StateVector,
                              tag: &BitString,
                              _unused: &BitString| {
                            let (coins, inner) = tag.split_at(r);
                            receiver(x, state, &inner, &coins)
                        },
                    )
                };
                GenericProtocol::new(
                    model,
                    cost,
                    r,
                    ProtocolBody::QuantumOneWay { alice: alice2, receiver: receiver2 },
                    self.domain.clone(),
                )
            }
            _ => Err(Error::RequiresOneWay),
        }
    }

    fn for_each_coin(
        &self,
        mut visit: impl FnMut(&BitString, f64) -> Result<()>,
    ) -> Result<()> {
        let total = 1usize << self.coin_bits;
        let weight = 1.0 / total as f64;
        for c in 0..total {
            let coins = BitString::from_index(c, self.coin_bits);
            visit(&coins, weight)?;
        }
        Ok(())
    }
}

fn check_length(what: &str, msg: &BitString, declared: usize) -> Result<()> {
    if msg.len() != declared {
        return Err(Error::LayoutMismatch(format!(
            "{what} has {} bits, declared {declared}",
            msg.len()
        )));
    }
    Ok(())
}

// Declared qubit counts cover every copy the referee consumes, so they
// must be positive multiples of the one-copy width.
fn check_copies(what: &str, state: &StateVector, declared: usize) -> Result<()> {
    let width = state.total_qubits();
    if width == 0 || declared == 0 || !declared.is_multiple_of(width) {
        return Err(Error::LayoutMismatch(format!(
            "{what} has {width} qubits per copy, declared total {declared}"
        )));
    }
    Ok(())
}

pub(crate) fn sample_local_branch<'a, R: rand::Rng>(
    branches: &'a [LocalBranch],
    rng: &mut R,
) -> Result<&'a LocalBranch> {
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("measurement produced no branches".into()));
    }
    let mut remaining = rng.gen::<f64>() * total;
    for b in branches {
        remaining -= b.probability;
        if remaining <= 0.0 {
            return Ok(b);
        }
    }
    Ok(branches.last().expect("nonempty by the total check"))
}

/// Margin of a function protocol's success over a fair coin.
pub fn function_advantage(dist: &OutcomeDistribution, correct_label: &str) -> f64 {
    dist.probability(correct_label) - 0.5
}

/// True when the distribution puts no mass (beyond tolerance) outside
/// the valid answers, the correctness notion used for relations here.
pub fn relation_zero_error(dist: &OutcomeDistribution, valid: impl Fn(&str) -> bool) -> bool {
    dist.zero_error(valid, PROBABILITY_TOL)
}
