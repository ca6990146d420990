//! Solver core for the J2-perturbed Lambert problem.
//!
//! Everything here is `no_std` with `alloc`: dynamics and propagation,
//! the Keplerian Lambert solver, finite-difference shooting, sample
//! generation, feature statistics, a small multilayer perceptron and the
//! guess-then-shoot pipeline. File formats, benchmarks and the command line
//! live in the `j2lambert` crate.
#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod body;
pub mod dynamics;
pub mod elements;
pub mod error;
pub mod lambert;
pub mod mlp;
pub mod pipeline;
pub mod propagator;
pub mod rng;
pub mod sample;
pub mod shooting;
pub mod state;
pub mod stats;

pub use body::BodyParams;
pub use error::{Error, Result};
pub use lambert::{Branch, LambertQuery, LambertSolution};
pub use state::{SphericalVector, StateCartesian, Vec3};
