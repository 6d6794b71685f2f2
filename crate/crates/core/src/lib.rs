//! Simulation and large-deviation analysis of q-state spinned d-regular
//! random multigraphs built from the pairing (configuration) model.
//!
//! The crate has four layers:
//!
//! - [`measures`] / [`lattice`]: spin and bond measures, relative entropy,
//!   the rate function `H(rho|mu) + (d/2) H(nu|rho x rho)`, and the finite
//!   lattice of integer types realizable at a given `(n, d, q)`.
//! - [`sampler`]: uniform pairing sampling, i.i.d. spin assignment,
//!   empirical measure extraction and rejection to simple graphs.
//! - [`exact`]: the exact finite-n probability of a lattice type under the
//!   pairing-plus-spin law, in big-rational or log-float arithmetic, with a
//!   brute-force enumeration oracle and Stirling-type log bounds.
//! - [`ldp`]: Monte Carlo event probabilities, convex minimization of the
//!   rate function over linearly constrained events, and convergence
//!   reports comparing the two.

pub mod error;
pub mod exact;
pub mod lattice;
pub mod ldp;
pub mod measures;
pub mod sampler;

pub use error::{Error, Result};
