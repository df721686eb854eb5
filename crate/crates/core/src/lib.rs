//! Solver library for generalized Nash games whose players may have
//! nonconvex (including integer-constrained) decision problems.
//!
//! The central quantity is the *disequilibrium* of a joint point: each
//! player's objective gap against its true optimal value at the shared
//! variables, aggregated by a measure `mu`. A point with zero
//! disequilibrium is a generalized Nash equilibrium; when no equilibrium
//! exists, the minimum of the disequilibrium over the jointly feasible
//! set is still well defined and this library computes it, together
//! with a certificate that no equilibrium exists.
//!
//! Module layout:
//!
//! * [`model`] - games, feasible sets, objectives, measures, and the
//!   point-level operations (feasibility checks, disequilibrium value).
//! * [`subsolvers`] - dense LP/QP solvers and lattice enumeration used
//!   by everything above; every solve returns a checkable certificate.
//! * [`oracles`] - per-player global optimization (best responses) and
//!   the lower-bounding relaxation built from finite cut pools.
//! * [`cga`] - the constraint-generation loop that sandwiches the
//!   minimum disequilibrium between monotone bounds.
//! * [`pricetaking`] - the primal/dual decomposition for price-taking
//!   games (players coupled only through balance constraints priced by
//!   the shared variables).
//! * [`instances`] - bundled benchmark games, random instance
//!   generators, and brute-force reference solvers used in tests.
//! * [`cli`] - command-line entry points (`solve-md`, `certify`,
//!   `primal`, `dual`, `reproduce`).

pub mod cga;
pub mod cli;
mod error;
pub mod expr;
pub mod ext;
pub mod io;
pub mod instances;
pub mod model;
pub mod oracles;
pub mod pricetaking;
pub mod subsolvers;

pub use error::{Error, Result};
pub use expr::Expression;
pub use ext::ExtReal;
