//! bglab: an event-driven hard-sphere laboratory.
//!
//! The crate simulates two elastic sphere systems — the plain hard-sphere gas
//! and a variant in which registered mutually-internal pairs stay tethered at
//! contact distance — and measures their one- and two-particle phase-space
//! statistics: the plain density `fhat`, the neighbour-mask correction `I2`,
//! the masked density `f1 = fhat - I2`, pair correlations, collision-integral
//! estimates, free-streaming residuals, and decay trends of those quantities
//! along Boltzmann-Grad scaling sequences (N up, d and m down, with N d^2/V
//! and m N/V held fixed).
//!
//! Start with the runnable demos under `examples/`:
//!
//! - **`simulate_gas`** — an event-driven run with conservation accounting
//! - **`tethered_dimers`** — frozen occupation numbers of the tethered system
//! - **`estimate_distributions`** — `fhat`, `I2` and the masked `f1`
//! - **`pair_correlation`** — `g(r)` and the factorization (AFC) metric
//! - **`collision_integral`** — Maxwellian null and two-beam structure
//! - **`free_streaming`** — transport-residual refinement order
//! - **`hierarchy_balance`** — transport against the collision term
//! - **`bg_sweep`** — scaling sweep with decay-exponent fits
//! - **`persist_and_reload`** — bit-exact snapshot round trips
//!
//! ```bash
//! cargo run --release -p bglab --example simulate_gas
//! ```
//!
//! The `bglab` binary wraps the same library entry points behind the
//! `validate`, `simulate`, `ensemble`, `diagnose`, `bg-sweep` and `replay`
//! subcommands.

pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod hierarchy;
pub mod io;
pub mod rng;
pub mod sampling;
pub mod scaling;
pub mod sweep;
pub mod vec3;

pub mod cli;

pub use error::{Error, Result};
pub use vec3::Vec3;
