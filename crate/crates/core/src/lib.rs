//! # eqk
//!
//! Numerical building blocks for writing classical kernels as embedding
//! quantum kernels (EQKs), i.e. as Hilbert-Schmidt inner products
//! `Tr{ρ(x)ρ(x')}` of data-dependent density operators.
//!
//! The pipeline, bottom to top:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`pauli_state`] | 1-norm vectors as Pauli-mixture states, trace identities, SWAP-test shots |
//! | [`spectral`] | Shift-invariant kernels, spectral samplers, trig-polynomial PSD test, Gram oracles |
//! | [`rff`] | Random Fourier features, dimension and precision bounds, sup-error harnesses |
//! | [`qrff`] | RFF features encoded as Pauli mixtures, with the `g(x)` 1-norm factors |
//! | [`composition`] | Gaussian kernels on preprocessed inputs, statevector circuits, projected kernels |
//! | [`mercer`] | Gram eigendecomposition, Nyström features, finite-rank EQK reconstruction |
//!
//! All randomized operations take an explicit seeded source; see [`seeded_rng`].
//!
//! ```rust
//! use eqk::pauli_state::{c2qe_encode, euclid_from_states, L1UnitVector};
//!
//! let r = L1UnitVector::new(vec![0.5, -0.25, 0.25]).unwrap();
//! let s = L1UnitVector::new(vec![0.0, 1.0, 0.0]).unwrap();
//! let dot = euclid_from_states(&c2qe_encode(&r), &c2qe_encode(&s)).unwrap();
//! assert!((dot + 0.25).abs() < 1e-12);
//! ```

pub mod composition;
pub mod error;
pub mod linalg;
pub mod mercer;
pub mod pauli_state;
pub mod qrff;
pub mod rff;
pub mod spectral;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// The random source used throughout the crate.
pub type SeededRng = ChaCha20Rng;

/// Deterministic random source for `(seed, stream)`.
///
/// Distinct streams of the same seed are independent; the crate uses stream 0
/// for frequency sampling and higher streams for auxiliary draws (test points,
/// shot noise).
pub fn seeded_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
