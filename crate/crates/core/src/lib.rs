//! Post-encryption compression of Shannon-cipher traffic over prime fields.
//!
//! The crate bundles everything needed to study a one-time-pad cipher whose
//! ciphertext is compressed by a random affine map before it is published,
//! while an adversary also observes the key through a noisy side channel:
//!
//! * [`ffield`]: prime-field arithmetic, affine encoders, coset enumeration.
//! * [`probsim`]: pmfs, channels, entropic functionals (nats), sampling.
//! * [`types_method`]: empirical types and exact class-size counting.
//! * [`cipher`]: the encrypt/compress/decrypt pipeline and the
//!   minimum-empirical-entropy decoder with exact and Monte Carlo error rates.
//! * [`adversary`]: rate-limited side-channel encoders and exact leakage
//!   oracles together with the type-class counting quantities that bound them.
//! * [`exponents`]: rate regions and error/secrecy exponents.

pub mod adversary;
pub mod cipher;
pub mod error;
pub mod exponents;
pub mod ffield;
pub mod probsim;
pub mod rng;
pub mod types_method;

pub use error::{Error, Result};

/// Field and alphabet symbols. Every alphabet in the crate is smaller than 2^16.
pub type Symbol = u16;

/// Default cap on the number of elements any exhaustive enumeration may visit.
pub const DEFAULT_BUDGET: u64 = 1 << 26;
