//! Public-coin one-way protocol for the half-or-none membership
//! function: the shared coins draw `t` coordinate indices with
//! replacement, Alice forwards her query strings at those indices, and
//! Bob accepts when at least one forwarded query sits in his list at
//! the same coordinate.
//!
//! The error is one-sided. A value-0 instance has no satisfied
//! coordinate, so no draw can produce a hit and Bob never accepts. A
//! value-1 instance has at least half its coordinates satisfied, so a
//! single draw misses with probability at most 1/2 and all `t` draws
//! miss with probability at most `2^-t`.

use std::sync::Arc;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::problems::{subm_dims, FInstance};
use crate::protocol::one_way::check_coin_cap;
use crate::protocol::{
    Channel, ClassicalStrategy, CostReport, DomainCheck, GenericProtocol, ModelTag,
    OneWayReceiver, ProtocolBody, Resource, Topology,
};
use crate::quantum::OutcomeDistribution;

/// Splits the coin string into `t` chunks of `index_bits` each, read
/// MSB-first. The size parameter is a power of two, so every chunk
/// value is a valid coordinate index.
fn drawn_indices(coins: &BitString, t: usize, index_bits: usize) -> Vec<usize> {
    (0..t)
        .map(|draw| {
            (0..index_bits).fold(0usize, |acc, bit| {
                (acc << 1) | usize::from(coins.get(draw * index_bits + bit))
            })
        })
        .collect()
}

fn window(bits: &BitString, start: usize, len: usize) -> BitString {
    BitString::new((start..start + len).map(|i| bits.get(i)).collect())
}

/// Acceptance probability of the `t`-draw protocol on `instance`: the
/// closed form `1 - (u/m)^t`, with `u` the number of unsatisfied
/// coordinates. The powers are taken over the integers, so the value
/// is exact whenever `t * log2(m) <= 53`. The formula needs no
/// promise; it holds on any instance.
pub fn exact_accept_probability(instance: &FInstance, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidArgument("zero draws never test a coordinate".into()));
    }
    let exp = u32::try_from(t)
        .map_err(|_| Error::InvalidArgument(format!("draw count {t} is out of range")))?;
    let m = u128::from(instance.m_param());
    let unsatisfied = (instance.pairs().len() - instance.satisfied_count()) as u128;
    let total = m.checked_pow(exp).ok_or_else(|| {
        Error::InvalidArgument(format!("coin space m^t with m = {m}, t = {t} overflows"))
    })?;
    // u <= m, so u^t fits wherever m^t does.
    let misses = unsatisfied.pow(exp);
    Ok(1.0 - misses as f64 / total as f64)
}

/// Builds the `t`-draw membership sampler at size parameter `m_param`.
///
/// The coins cost `t * log2(m)` bits and Alice's message costs
/// `t * log2(log2(m))` bits: each drawn coordinate forwards one query
/// string. The coin count is checked against the logarithmic budget
/// for the instance's description length; `coin_cap` lifts that
/// budget, while the executor's hard enumeration ceiling still
/// applies. Output labels are "1" for accept and "0" for reject.
pub fn f_sampling_protocol(
    m_param: u64,
    t: usize,
    coin_cap: Option<usize>,
) -> Result<GenericProtocol<FInstance>> {
    let dims = subm_dims(m_param)?;
    if t == 0 {
        return Err(Error::InvalidArgument("zero draws never test a coordinate".into()));
    }
    let index_bits = dims.m_param.trailing_zeros() as usize;
    let coin_bits = t
        .checked_mul(index_bits)
        .ok_or_else(|| Error::InvalidArgument(format!("draw count {t} is out of range")))?;
    let coordinates = usize::try_from(dims.m_param).map_err(|_| {
        Error::InvalidArgument(format!("size parameter {} overflows usize", dims.m_param))
    })?;
    // Alice holds one query per coordinate, Bob one list of half the
    // universe each.
    let input_bits = coordinates * dims.string_len * (1 + dims.list_len);
    check_coin_cap(coin_bits, input_bits, coin_cap)?;
    // string_len <= index_bits, so this cannot overflow where
    // coin_bits did not.
    let message_bits = t * dims.string_len;
    let string_len = dims.string_len;

    let alice: ClassicalStrategy<FInstance> =
        Arc::new(move |inst: &FInstance, coins: &BitString| {
            let mut sent = Vec::with_capacity(message_bits);
            for index in drawn_indices(coins, t, index_bits) {
                let query = &inst.pairs()[index].a;
                sent.extend((0..string_len).map(|b| query.get(b)));
            }
            BitString::new(sent)
        });
    let receiver: OneWayReceiver<FInstance> =
        Arc::new(move |inst: &FInstance, message: &BitString, coins: &BitString| {
            let hit = drawn_indices(coins, t, index_bits)
                .into_iter()
                .enumerate()
                .any(|(draw, index)| {
                    let forwarded = window(message, draw * string_len, string_len);
                    inst.pairs()[index].b.contains(&forwarded)
                });
            OutcomeDistribution::point_mass(if hit { "1" } else { "0" })
        });
    let domain: DomainCheck<FInstance> = Arc::new(move |inst: &FInstance| {
        if inst.m_param() != m_param {
            return Err(Error::DomainMismatch(format!(
                "instance built for size parameter {}, protocol for {m_param}",
                inst.m_param()
            )));
        }
        Ok(())
    });

    GenericProtocol::new(
        ModelTag::new(Channel::Classical, Topology::OneWay, Resource::PublicRandomness),
        CostReport {
            alice_to_bob_bits: message_bits,
            shared_random_bits: coin_bits,
            ..CostReport::default()
        },
        coin_bits,
        ProtocolBody::ClassicalOneWay { alice, receiver },
        domain,
    )
}
