//! Desk-scale laboratory for Bayesian and universal sequence prediction.
//!
//! The crate turns a family of classical asymptotic statements about
//! sequence prediction into finite, runnable checks:
//!
//! * [`model`] defines semimeasures over finite alphabets, with all mass
//!   kept in the log domain ([`logmass::LogMass`]), plus auditing and
//!   sampling.
//! * [`mixture`] builds finite weighted Bayes mixtures, their posteriors,
//!   and cumulative error reports for deterministically generated data.
//! * [`conjugate`] holds the closed-form Beta/Dirichlet predictors and the
//!   point-mass-enriched priors used in the confirmation experiments.
//! * [`bounds`] verifies the Hellinger/KL chain between a true environment
//!   and a dominant mixture, exactly by enumeration where the state space
//!   allows and by seeded Monte Carlo where it does not.
//! * [`decisions`] scores predictors through loss matrices and checks the
//!   translation from prediction error to decision regret.
//! * [`solomonoff`] enumerates a tiny monotone machine to build a computable
//!   stand-in for the universal prior, with complexity estimates and the
//!   number-structure scans that only make sense against real programs.
//!
//! Everything is deterministic given its inputs and seeds; nothing in the
//! crate reads clocks or global state, which is what makes byte-identical
//! experiment reruns possible at the CLI layer above.

pub mod bounds;
pub mod conjugate;
pub mod decisions;
pub mod error;
pub mod logmass;
pub mod mixture;
pub mod model;
pub mod numerics;
pub mod seq;
pub mod solomonoff;

pub use error::{Error, Result};
pub use logmass::LogMass;
pub use seq::{Alphabet, Seq, Symbol};

/// Crate version, for result-table provenance stamps.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tolerance for "this model is a measure" checks: predictive mass may fall
/// short of one by at most this much before sampling and audits object.
/// One knob on purpose; tighter per-check tolerances live with the checks.
pub const MEASURE_TOLERANCE: f64 = 1e-10;

/// Slack allowed when asserting an exact (enumerated, closed-form) bound:
/// inequalities may be violated by at most this much and still count as
/// rounding rather than substance.
pub const CHAIN_SLACK_TOLERANCE: f64 = 1e-10;

/// Relative tolerance for closed-form identities that should agree to
/// rounding error.
pub const TIGHT_REL_TOLERANCE: f64 = 1e-12;

/// Monte Carlo assertions reject only beyond this many standard errors.
pub const MC_SIGMA: f64 = 3.0;
