//! Random multiplicative functions in short intervals.
//!
//! The crate is organized bottom-up:
//!
//! * [`sieve`]: primes, interval factorization, smooth and squarefree counts.
//! * [`model`]: Rademacher and Steinhaus samplers with keyed prime values.
//! * [`interval`]: sums over `(x, x + y]`, their decompositions, and Monte
//!   Carlo moment estimates.
//! * [`euler`]: random Euler products, their closed-form expectations,
//!   Parseval checks, barrier events and tilted probabilities.
//! * [`characters`]: exact Dirichlet character sums modulo small primes.
//! * [`ballot`]: Gaussian random walks below a slowly rising barrier.
//!
//! Monte Carlo work is parallel over trials when the `parallel` feature is
//! enabled (the default) and always reduces in trial order, so results do
//! not depend on the thread count.

// `!(a >= b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ballot;
pub mod characters;
pub mod error;
pub mod euler;
pub mod exec;
pub mod interval;
pub mod model;
pub mod rng;
pub mod sieve;
pub mod stats;

pub use error::{Error, Result};
pub use exec::{Exec, McConfig};
pub use model::{ModelKind, PrimeValueStream, PrimeValues};
pub use stats::MomentEstimate;
