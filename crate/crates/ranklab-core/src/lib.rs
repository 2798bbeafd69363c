//! Numerical laboratory for geodesic dynamics on nonpositively curved model
//! manifolds: geodesic and Jacobi-field integration, rank and flatness
//! functionals, hyperbolic shrinking calibration, and the constructive
//! machinery that builds geodesic rays and geodesics staying clear of a
//! declared higher-rank locus.
//!
//! The crate is `no_std` (alloc required); IO, configuration files and the
//! command-line runner live in the companion `ranklab` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod avoidance;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod hyperbolicity;
pub mod linalg;
mod num;
pub mod ode;
pub mod optim;
pub mod rank;

pub use error::{Error, Result};

/// Deterministic per-trial RNG: one seed, one stream index per trial.
pub fn trial_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
