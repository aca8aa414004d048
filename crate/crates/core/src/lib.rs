//! Exact and approximate probabilistic decoding of linear block codes.
//!
//! The crate provides bucket elimination for MPE, MAP and belief updating,
//! the mini-bucket approximation `approx-mpe(i)`, iterative belief
//! propagation, and a Monte-Carlo harness that measures bit error rates of
//! these decoders on Hamming, structured and random codes sent over an
//! additive white Gaussian noise channel.

pub mod bench;
pub mod coding;
pub mod elimination;
pub mod error;
pub mod ibp;
pub mod minibucket;
pub mod network;

pub use error::{Error, Result};
