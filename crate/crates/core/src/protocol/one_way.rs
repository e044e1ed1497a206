//! Public-coin one-way classical protocols over small finite domains,
//! plus a fully tabulated JSON form for loading them from disk.
//!
//! Inputs are plain indices: Alice holds `x` in `0..x_size`, Bob holds
//! `y` in `0..y_size`. Alice maps `(x, coins)` to an s-bit message and
//! Bob applies an accept predicate to `(y, message, coins)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::quantum::OutcomeDistribution;

use super::{
    Channel, ClassicalStrategy, CostReport, DomainCheck, GenericProtocol, ModelTag,
    OneWayReceiver, ProtocolBody, Resource, Topology, COIN_ENUMERATION_LIMIT,
};

pub type MessageRule = Arc<dyn Fn(usize, &BitString) -> BitString + Send + Sync>;
pub type AcceptRule = Arc<dyn Fn(usize, &BitString, &BitString) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct OneWayClassicalProtocol {
    random_bits: usize,
    message_bits: usize,
    x_size: usize,
    y_size: usize,
    alice_message: MessageRule,
    bob_accept: AcceptRule,
}

impl OneWayClassicalProtocol {
    pub fn new(
        random_bits: usize,
        message_bits: usize,
        x_size: usize,
        y_size: usize,
        alice_message: MessageRule,
        bob_accept: AcceptRule,
    ) -> Result<Self> {
        if x_size == 0 || y_size == 0 {
            return Err(Error::InvalidArgument("empty input domain".into()));
        }
        if random_bits > COIN_ENUMERATION_LIMIT {
            return Err(Error::EnumerationTooLarge {
                log2_size: random_bits as u64,
                guard_log2: COIN_ENUMERATION_LIMIT as u32,
            });
        }
        Ok(OneWayClassicalProtocol {
            random_bits,
            message_bits,
            x_size,
            y_size,
            alice_message,
            bob_accept,
        })
    }

    pub fn random_bits(&self) -> usize {
        self.random_bits
    }

    pub fn message_bits(&self) -> usize {
        self.message_bits
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    /// Alice's message, checked for domain and declared length.
    pub fn message(&self, x: usize, coins: &BitString) -> Result<BitString> {
        if x >= self.x_size {
            return Err(Error::DomainMismatch(format!(
                "x = {x} outside 0..{}",
                self.x_size
            )));
        }
        if coins.len() != self.random_bits {
            return Err(Error::LayoutMismatch(format!(
                "{} coins supplied, protocol uses {}",
                coins.len(),
                self.random_bits
            )));
        }
        let msg = (self.alice_message)(x, coins);
        if msg.len() != self.message_bits {
            return Err(Error::LayoutMismatch(format!(
                "message rule produced {} bits, declared {}",
                msg.len(),
                self.message_bits
            )));
        }
        Ok(msg)
    }

    pub fn accepts(&self, y: usize, message: &BitString, coins: &BitString) -> Result<bool> {
        if y >= self.y_size {
            return Err(Error::DomainMismatch(format!(
                "y = {y} outside 0..{}",
                self.y_size
            )));
        }
        Ok((self.bob_accept)(y, message, coins))
    }

    /// Probability over the public coins that Bob accepts on `(x, y)`.
    /// Computed exactly by enumerating all coin strings.
    pub fn accepting_fraction(&self, x: usize, y: usize) -> Result<f64> {
        let total = 1usize << self.random_bits;
        let mut accepted = 0usize;
        for c in 0..total {
            let coins = BitString::from_index(c, self.random_bits);
            let msg = self.message(x, &coins)?;
            if self.accepts(y, &msg, &coins)? {
                accepted += 1;
            }
        }
        Ok(accepted as f64 / total as f64)
    }

    /// The same protocol in executor form, over paired inputs `(x, y)`.
    /// Bob's verdict becomes the output label, "1" for accept.
    pub fn to_generic(&self) -> GenericProtocol<(usize, usize)> {
        let resource = if self.random_bits > 0 {
            Resource::PublicRandomness
        } else {
            Resource::None
        };
        let alice: ClassicalStrategy<(usize, usize)> = {
            let rule = self.alice_message.clone();
            Arc::new(move |&(x, _): &(usize, usize), coins: &BitString| rule(x, coins))
        };
        let receiver: OneWayReceiver<(usize, usize)> = {
            let rule = self.bob_accept.clone();
            Arc::new(move |&(_, y): &(usize, usize), msg: &BitString, coins: &BitString| {
                OutcomeDistribution::point_mass(if rule(y, msg, coins) { "1" } else { "0" })
            })
        };
        let domain: DomainCheck<(usize, usize)> = {
            let (xs, ys) = (self.x_size, self.y_size);
            Arc::new(move |&(x, y): &(usize, usize)| {
                if x >= xs || y >= ys {
                    return Err(Error::DomainMismatch(format!(
                        "({x}, {y}) outside {xs}x{ys}"
                    )));
                }
                Ok(())
            })
        };
        GenericProtocol::new(
            ModelTag::new(Channel::Classical, Topology::OneWay, resource),
            CostReport {
                alice_to_bob_bits: self.message_bits,
                shared_random_bits: if resource == Resource::PublicRandomness {
                    self.random_bits
                } else {
                    0
                },
                ..CostReport::default()
            },
            self.random_bits,
            ProtocolBody::ClassicalOneWay { alice, receiver },
            domain,
        )
        .expect("construction is consistent by design")
    }
}

/// Fully tabulated one-way protocol, the on-disk JSON form.
///
/// `messages[x][c]` is Alice's message on input x with coin string of
/// index c; `accepts[y][a][c]` is Bob's verdict on input y, message of
/// index a, coin index c. Coin and message indices read the bit
/// strings MSB-first.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableProtocol {
    pub random_bits: usize,
    pub message_bits: usize,
    pub messages: Vec<Vec<BitString>>,
    pub accepts: Vec<Vec<Vec<u8>>>,
}

impl TableProtocol {
    pub fn from_json(text: &str) -> Result<Self> {
        let table: TableProtocol = serde_json::from_str(text)
            .map_err(|e| Error::MalformedTable(e.to_string()))?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.random_bits > COIN_ENUMERATION_LIMIT || self.message_bits > 24 {
            return Err(Error::MalformedTable(format!(
                "table sizes 2^{} coins x 2^{} messages are out of reach",
                self.random_bits, self.message_bits
            )));
        }
        let coin_count = 1usize << self.random_bits;
        let message_count = 1usize << self.message_bits;
        if self.messages.is_empty() {
            return Err(Error::MalformedTable("no Alice inputs".into()));
        }
        for (x, row) in self.messages.iter().enumerate() {
            if row.len() != coin_count {
                return Err(Error::MalformedTable(format!(
                    "message row {x} has {} entries, expected {coin_count}",
                    row.len()
                )));
            }
            for msg in row {
                if msg.len() != self.message_bits {
                    return Err(Error::MalformedTable(format!(
                        "message {msg} in row {x} is not {} bits",
                        self.message_bits
                    )));
                }
            }
        }
        if self.accepts.is_empty() {
            return Err(Error::MalformedTable("no Bob inputs".into()));
        }
        for (y, by_message) in self.accepts.iter().enumerate() {
            if by_message.len() != message_count {
                return Err(Error::MalformedTable(format!(
                    "accept row {y} has {} message entries, expected {message_count}",
                    by_message.len()
                )));
            }
            for by_coin in by_message {
                if by_coin.len() != coin_count {
                    return Err(Error::MalformedTable(format!(
                        "accept row {y} has {} coin entries, expected {coin_count}",
                        by_coin.len()
                    )));
                }
                if by_coin.iter().any(|&b| b > 1) {
                    return Err(Error::MalformedTable(format!(
                        "accept row {y} holds a non-bit entry"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_protocol(&self) -> Result<OneWayClassicalProtocol> {
        self.validate()?;
        let messages = Arc::new(self.messages.clone());
        let accepts = Arc::new(self.accepts.clone());
        let alice: MessageRule = {
            let messages = messages.clone();
            Arc::new(move |x: usize, coins: &BitString| messages[x][coins.to_index()].clone())
        };
        let bob: AcceptRule = Arc::new(move |y: usize, msg: &BitString, coins: &BitString| {
            accepts[y][msg.to_index()][coins.to_index()] == 1
        });
        OneWayClassicalProtocol::new(
            self.random_bits,
            self.message_bits,
            self.messages.len(),
            self.accepts.len(),
            alice,
            bob,
        )
    }
}

/// Default ceiling on public-coin counts for protocols whose inputs
/// are `input_bits` long: logarithmic coin budgets suffice for
/// bounded-error protocols, so larger counts usually indicate a
/// mistake. Enforced only where a caller opts in.
pub fn default_coin_cap(input_bits: usize) -> usize {
    2 * ceil_log2(input_bits.max(1)) + 4
}

/// Checks a coin count against the default or an explicit override.
pub fn check_coin_cap(
    random_bits: usize,
    input_bits: usize,
    cap_override: Option<usize>,
) -> Result<()> {
    let cap = cap_override.unwrap_or_else(|| default_coin_cap(input_bits));
    if random_bits > cap {
        return Err(Error::InvalidArgument(format!(
            "{random_bits} public coins exceed the cap of {cap} for {input_bits}-bit inputs"
        )));
    }
    Ok(())
}

fn ceil_log2(n: usize) -> usize {
    n.next_power_of_two().trailing_zeros() as usize
}
