//! Desk-scale laboratory for the upper tail of the number of r-armed stars
//! `K_{1,r}` in the binomial random graph `G(n,p)`.
//!
//! The crate has three layers:
//!
//! * ground truth — seeded sampling, exact star counting, and brute-force
//!   oracles (exact tail distributions, exact bounded star counts `X_D`,
//!   exact maximum star packings `N_y`, exact `Z_C` tails) that work at
//!   tiny scale but with no approximation whatsoever;
//! * the deterministic core — the dyadic degree-peeling chain
//!   `G_J ⊇ … ⊇ G_0`, certification of the per-level packing events, and
//!   the resulting sandwich `X(G_0) ≤ X ≤ X(G_0) + t/2`;
//! * analytic bounds — closed-form means/variances, the Chernoff rate
//!   function, every tail-bound exponent with its literal constants, and
//!   the constructive lower bounds (clustering gadgets, disjoint
//!   approximation, edge deviation).
//!
//! Everything is cross-validated: each analytic quantity has a brute-force
//! counterpart and the acceptance suite ([`suite`]) checks the two against
//! each other with zero tolerance wherever the mathematics is exact.
//!
//! With the default `parallel` feature the enumeration/replication kernels
//! fan out over a rayon pool; results are byte-identical for any worker
//! count because all reductions are either exact or folded in a fixed
//! chunk order. Building with `--no-default-features` gives a sequential
//! drop-in with the same outputs.

pub mod bounds;
pub mod combin;
pub mod constructions;
mod exec;
pub mod graph;
pub mod iidsum;
pub mod montecarlo;
pub mod oracles;
pub mod peeling;
pub mod prob;
pub mod suite;

pub use graph::{Graph, StarPacking};
pub use prob::{EdgeProb, Value};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("instance exceeds the exhaustive-search budget: {0}")]
    BudgetExceeded(String),
    #[error("packing references edges absent from the host graph")]
    ForeignPacking,
    #[error("deterministic inequality violated: {0}")]
    InequalityViolated(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
