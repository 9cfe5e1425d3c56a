//! Private linear classification over encrypted email.
//!
//! A provider holds a proprietary linear model (naive Bayes, logistic
//! regression, SVM); a client holds the plaintext of an email. The client
//! computes packed dot products against the encrypted model with an
//! additively homomorphic cryptosystem, blinds them, and the two parties
//! finish the threshold (spam) or argmax (topic) step inside a garbled
//! circuit. Neither side learns the other's input.
//!
//! This crate is `no_std` + `alloc`. Transport, files and the command line
//! live in the `pretzel` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ahe;
pub mod channel;
pub mod gc;
pub mod model;
pub mod packing;
pub mod protocol;
pub mod search;
pub mod wire;

pub use rand_chacha::ChaCha20Rng;
pub use rand_core::{CryptoRng, RngCore, SeedableRng};

/// Build the crate's CSPRNG from a 32-byte seed.
pub fn rng_from_seed(seed: [u8; 32]) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(seed)
}

/// Convenience: expand a `u64` into a 32-byte seed (tests and CLI flags).
pub fn seed_from_u64(seed: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    out[..8].copy_from_slice(&seed.to_le_bytes());
    out[8..16].copy_from_slice(&(!seed).to_le_bytes());
    out
}
