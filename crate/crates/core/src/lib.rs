//! Exact-arithmetic laboratory for finite cryptosystems.
//!
//! Probabilities are exact rationals ([`probability::Prob`]). A
//! [`cryptosystem::FiniteCryptosystem`] yields ciphertext distributions and
//! Bayes posteriors; [`secrecy`] checks perfect-secrecy conditions with
//! witnesses; [`analysis`] sets prior-free and blended posteriors beside the
//! Bayes one; [`oracle`] re-estimates everything by seeded Monte Carlo.

pub mod analysis;
pub mod cli;
pub mod cryptosystem;
pub mod oracle;
pub mod probability;
pub mod secrecy;
pub mod sysfile;

pub use cryptosystem::{CryptosystemParts, FiniteCryptosystem};
pub use probability::{Dist, Prob};
