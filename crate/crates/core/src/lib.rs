//! Batched dueling-bandit simulation.
//!
//! The crate is organized bottom-up:
//!
//! - [`prefmat`]: ground-truth preference matrices, Condorcet analysis, CSV I/O
//!   and synthetic generators.
//! - [`env`]: a seeded duel environment that executes batch plans under a fixed
//!   comparison budget and keeps the regret ledger.
//! - [`stats`]: pairwise counts, empirical win rates, confidence radii and
//!   KL-based evidence scores.
//! - [`algos`]: the C2B and C2B-KL batch policies plus an all-pairs baseline,
//!   and the driver loop [`algos::run_policy`].
//! - [`bounds`]: analysis constants and shape-only regret bound expressions.
//! - [`harness`]: repeated seeded trials, aggregation, CSV/JSON/SVG output.

pub mod algos;
pub mod bounds;
pub mod env;
mod error;
pub mod harness;
pub mod prefmat;
pub mod stats;

mod numfmt;

pub use error::{Error, Result};
pub use numfmt::format_sig;
