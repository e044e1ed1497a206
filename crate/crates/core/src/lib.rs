//! Simulation of one-round communication protocols: classical and
//! quantum messages, one-way or simultaneous, with optional shared
//! randomness or shared entangled pairs.
//!
//! The crate provides exact (probability-weighted) and sampled protocol
//! execution, the entangled matching protocol, a fingerprint-based
//! compiler from randomized one-way protocols to quantum simultaneous
//! ones, and a numeric verifier for a product-measurement
//! discrimination bound.

pub mod bits;
pub mod discrimination;
pub mod error;
pub mod f_protocol;
pub mod mhm;
pub mod problems;
pub mod protocol;
pub mod quantum;
pub mod rng;
pub mod tolerance;
pub mod yao;

pub use bits::BitString;
pub use error::{Error, Result};
